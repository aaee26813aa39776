#include "lmfrank/config.hpp"

#include <charconv>
#include <cmath>
#include <functional>
#include <fstream>
#include <limits>
#include <sstream>

#include "lmfrank/error.hpp"

namespace lmfrank {

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view expected) {
    throw UsageError("setting '" + std::string(key) + "': cannot parse '" + std::string(value) +
                     "' as " + std::string(expected));
}

double to_double(std::string_view key, std::string_view value) {
    double out = 0.0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc() || ptr != value.data() + value.size() || !std::isfinite(out)) {
        bad_value(key, value, "a number");
    }
    return out;
}

template <typename Int>
Int to_unsigned(std::string_view key, std::string_view value) {
    Int out = 0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc() || ptr != value.data() + value.size()) {
        bad_value(key, value, "a nonnegative integer");
    }
    return out;
}

bool to_bool(std::string_view key, std::string_view value) {
    if (value == "true" || value == "1" || value == "yes" || value == "on") {
        return true;
    }
    if (value == "false" || value == "0" || value == "no" || value == "off") {
        return false;
    }
    bad_value(key, value, "a boolean");
}

std::optional<std::filesystem::path> optional_path(std::string_view value) {
    if (value.empty()) {
        return std::nullopt;
    }
    return std::filesystem::path(std::string(value));
}

std::string fmt(double v) {
    std::ostringstream out;
    out.precision(std::numeric_limits<double>::max_digits10);
    out << v;
    return out.str();
}

using Setter = std::function<void(RunConfig&, std::string_view key, std::string_view value)>;

struct Setting {
    SettingInfo info;
    Setter set;
};

const std::vector<Setting>& settings() {
    static const std::vector<Setting> table = {
        {{"interactions", "interaction triplet file (name_a name_b [confidence])"},
         [](RunConfig& c, auto, auto v) { c.data.interactions = std::string(v); }},
        {{"similarity_go", "first similarity source (weighted by alpha, k1 neighbors)"},
         [](RunConfig& c, auto, auto v) { c.data.similarity_go = optional_path(v); }},
        {{"similarity_ppi", "second similarity source (weighted by beta, k2 neighbors)"},
         [](RunConfig& c, auto, auto v) { c.data.similarity_ppi = optional_path(v); }},
        {{"entities", "optional entity list widening the index"},
         [](RunConfig& c, auto, auto v) { c.data.entities = optional_path(v); }},
        {{"output_dir", "directory for model.bin, metrics, rankings and logs"},
         [](RunConfig& c, auto, auto v) { c.output_dir = std::string(v); }},
        {{"model", "model file (default <output_dir>/model.bin)"},
         [](RunConfig& c, auto, auto v) { c.model = std::string(v); }},
        {{"d", "latent dimensionality"},
         [](RunConfig& c, auto k, auto v) { c.hyper.d = to_unsigned<std::size_t>(k, v); }},
        {{"lambda", "L2 coefficient"},
         [](RunConfig& c, auto k, auto v) { c.hyper.lambda = to_double(k, v); }},
        {{"alpha", "coefficient of the first similarity Laplacian"},
         [](RunConfig& c, auto k, auto v) { c.hyper.alpha = to_double(k, v); }},
        {{"beta", "coefficient of the second similarity Laplacian"},
         [](RunConfig& c, auto k, auto v) { c.hyper.beta = to_double(k, v); }},
        {{"gamma", "AdaGrad learning rate"},
         [](RunConfig& c, auto k, auto v) { c.hyper.gamma = to_double(k, v); }},
        {{"max_iter", "AdaGrad iterations"},
         [](RunConfig& c, auto k, auto v) { c.hyper.max_iter = to_unsigned<std::size_t>(k, v); }},
        {{"early_stop", "stop when ||Z||/||U|| drops below early_stop_tol"},
         [](RunConfig& c, auto k, auto v) { c.hyper.early_stop = to_bool(k, v); }},
        {{"early_stop_tol", "early-stop threshold"},
         [](RunConfig& c, auto k, auto v) { c.hyper.early_stop_tol = to_double(k, v); }},
        {{"weight_scheme", "uniform | linear | loglinear"},
         [](RunConfig& c, auto, auto v) { c.scheme.kind = parse_weight_kind(v); }},
        {{"c", "importance weight parameter"},
         [](RunConfig& c, auto k, auto v) { c.scheme.c = to_double(k, v); }},
        {{"k1", "neighbors per entity in the first similarity source"},
         [](RunConfig& c, auto k, auto v) { c.k1 = to_unsigned<std::size_t>(k, v); }},
        {{"k2", "neighbors per entity in the second similarity source"},
         [](RunConfig& c, auto k, auto v) { c.k2 = to_unsigned<std::size_t>(k, v); }},
        {{"n_folds", "cross-validation folds"},
         [](RunConfig& c, auto k, auto v) { c.n_folds = to_unsigned<std::size_t>(k, v); }},
        {{"seed", "seed for initialization, folds and synthetic data"},
         [](RunConfig& c, auto k, auto v) {
             c.seed = to_unsigned<std::uint64_t>(k, v);
             c.hyper.seed = c.seed;
             c.synth.seed = c.seed;
         }},
        {{"block_size", "rows per block in the pairwise kernels"},
         [](RunConfig& c, auto k, auto v) { c.block_size = to_unsigned<std::size_t>(k, v); }},
        {{"aupr_mode", "ap | trapezoid"},
         [](RunConfig& c, auto, auto v) {
             try {
                 c.aupr_mode = parse_aupr_mode(v);
             } catch (const InputError& e) {
                 throw UsageError(e.what());
             }
         }},
        {{"threads", "worker threads"},
         [](RunConfig& c, auto k, auto v) { c.threads = to_unsigned<std::size_t>(k, v); }},
        {{"log_every", "iterations between logged losses (0 = off)"},
         [](RunConfig& c, auto k, auto v) { c.log_every = to_unsigned<std::size_t>(k, v); }},
        {{"dump_adjacency", "write the k-NN adjacencies next to the outputs"},
         [](RunConfig& c, auto k, auto v) { c.dump_adjacency = to_bool(k, v); }},
        {{"top_k", "number of ranked pairs to write (0 = all)"},
         [](RunConfig& c, auto k, auto v) { c.top_k = to_unsigned<std::size_t>(k, v); }},
        {{"m", "synthetic entity count"},
         [](RunConfig& c, auto k, auto v) { c.synth.m = to_unsigned<std::size_t>(k, v); }},
        {{"d_true", "synthetic planted rank"},
         [](RunConfig& c, auto k, auto v) { c.synth.d_true = to_unsigned<std::size_t>(k, v); }},
        {{"positive_rate", "synthetic fraction of positive pairs"},
         [](RunConfig& c, auto k, auto v) { c.synth.positive_rate = to_double(k, v); }},
        {{"noise", "synthetic probability of relocating a positive"},
         [](RunConfig& c, auto k, auto v) { c.synth.noise = to_double(k, v); }},
        {{"sim_noise", "synthetic similarity perturbation (std dev)"},
         [](RunConfig& c, auto k, auto v) { c.synth.sim_noise = to_double(k, v); }},
        {{"sim_top", "synthetic similarities kept per entity"},
         [](RunConfig& c, auto k, auto v) { c.synth.sim_top = to_unsigned<std::size_t>(k, v); }},
    };
    return table;
}

}  // namespace

std::filesystem::path RunConfig::model_path() const {
    return model.empty() ? output_dir / "model.bin" : model;
}

const std::vector<SettingInfo>& setting_keys() {
    static const std::vector<SettingInfo> keys = [] {
        std::vector<SettingInfo> out;
        for (const auto& s : settings()) {
            out.push_back(s.info);
        }
        return out;
    }();
    return keys;
}

void apply_setting(RunConfig& config, std::string_view key, std::string_view value) {
    key = trim(key);
    value = trim(value);
    for (const auto& s : settings()) {
        if (s.info.key == key) {
            s.set(config, key, value);
            return;
        }
    }
    throw UsageError("unknown setting '" + std::string(key) + "'");
}

void apply_config_text(RunConfig& config, std::string_view text, std::string_view source) {
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) {
            end = text.size();
        }
        std::string_view line = trim(text.substr(pos, end - pos));
        pos = end + 1;
        ++line_no;
        if (line.empty() || line.front() == '#') {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw UsageError(std::string(source) + ":" + std::to_string(line_no) +
                             ": expected key = value");
        }
        try {
            apply_setting(config, line.substr(0, eq), line.substr(eq + 1));
        } catch (const UsageError& e) {
            throw UsageError(std::string(source) + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
}

void apply_config_file(RunConfig& config, const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw UsageError("cannot open config file '" + path.string() + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    apply_config_text(config, buf.str(), path.string());
}

std::vector<std::pair<std::string, std::string>> describe(const RunConfig& c) {
    return {
        {"d", std::to_string(c.hyper.d)},
        {"lambda", fmt(c.hyper.lambda)},
        {"alpha", fmt(c.hyper.alpha)},
        {"beta", fmt(c.hyper.beta)},
        {"gamma", fmt(c.hyper.gamma)},
        {"max_iter", std::to_string(c.hyper.max_iter)},
        {"early_stop", c.hyper.early_stop ? "true" : "false"},
        {"weight_scheme", std::string(to_string(c.scheme.kind))},
        {"c", fmt(c.scheme.c)},
        {"k1", std::to_string(c.k1)},
        {"k2", std::to_string(c.k2)},
        {"n_folds", std::to_string(c.n_folds)},
        {"seed", std::to_string(c.seed)},
        {"aupr_mode", std::string(to_string(c.aupr_mode))},
    };
}

}  // namespace lmfrank
