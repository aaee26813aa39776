#pragma once

// Run configuration shared by every subcommand. Settings are plain
// `key = value` lines; the same keys are accepted as command-line flags, which
// take precedence over a config file.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lmfrank/data.hpp"
#include "lmfrank/evaluation.hpp"
#include "lmfrank/factorization.hpp"
#include "lmfrank/synthetic.hpp"
#include "lmfrank/weighting.hpp"

namespace lmfrank {

struct RunConfig {
    DataPaths data;
    std::filesystem::path output_dir = ".";
    std::filesystem::path model;  // defaults to <output_dir>/model.bin

    Hyperparameters hyper;  // hyper.seed mirrors `seed`
    WeightScheme scheme;
    std::size_t k1 = 100;  // GO neighbors
    std::size_t k2 = 100;  // PPI neighbors

    std::size_t n_folds = 5;
    std::uint64_t seed = 1;
    std::size_t block_size = 512;
    AuprMode aupr_mode = AuprMode::average_precision;
    std::size_t threads = 1;
    std::size_t log_every = 10;
    bool dump_adjacency = false;
    std::size_t top_k = 100;  // 0 ranks every candidate

    SyntheticSpec synth;

    std::filesystem::path model_path() const;
};

struct SettingInfo {
    std::string_view key;
    std::string_view help;
};

// Every recognised key, in display order.
const std::vector<SettingInfo>& setting_keys();

// Throws UsageError on unknown keys or unparseable values.
void apply_setting(RunConfig& config, std::string_view key, std::string_view value);
void apply_config_text(RunConfig& config, std::string_view text, std::string_view source = "<config>");
void apply_config_file(RunConfig& config, const std::filesystem::path& path);

// Effective settings as key/value strings, for logs and reports.
std::vector<std::pair<std::string, std::string>> describe(const RunConfig& config);

}  // namespace lmfrank
