#include "lmfrank/data.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "lmfrank/error.hpp"

namespace lmfrank {

namespace {

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InputError("cannot open '" + path.string() + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t pos = 0;
    while (pos < line.size()) {
        while (pos < line.size() && std::isspace(static_cast<unsigned char>(line[pos]))) {
            ++pos;
        }
        if (pos >= line.size()) {
            break;
        }
        std::size_t end = pos;
        while (end < line.size() && !std::isspace(static_cast<unsigned char>(line[end]))) {
            ++end;
        }
        fields.push_back(line.substr(pos, end - pos));
        pos = end;
    }
    return fields;
}

bool is_skippable(const std::vector<std::string_view>& fields) {
    return fields.empty() || fields.front().front() == '#';
}

std::optional<double> parse_double(std::string_view text) {
    double value = 0.0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    if (first != last && *first == '+') {
        ++first;
    }
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last || !std::isfinite(value)) {
        return std::nullopt;
    }
    return value;
}

std::string where(const std::string& source, std::size_t line) {
    return source + ":" + std::to_string(line) + ": ";
}

// CSR rows over canonical pairs, each pair listed under both endpoints.
template <typename Range, typename ValueOf>
void build_symmetric_rows(std::size_t m, const Range& items, ValueOf value_of,
                          std::vector<std::size_t>& offsets, std::vector<Partner>& partners) {
    offsets.assign(m + 1, 0);
    for (const auto& item : items) {
        ++offsets[item.pair.first + 1];
        ++offsets[item.pair.second + 1];
    }
    for (std::size_t i = 0; i < m; ++i) {
        offsets[i + 1] += offsets[i];
    }
    partners.assign(offsets[m], Partner{0, 0.0});
    std::vector<std::size_t> cursor(offsets.begin(), offsets.end() - 1);
    for (const auto& item : items) {
        const double v = value_of(item);
        partners[cursor[item.pair.first]++] = Partner{item.pair.second, v};
        partners[cursor[item.pair.second]++] = Partner{item.pair.first, v};
    }
    for (std::size_t i = 0; i < m; ++i) {
        std::sort(partners.begin() + static_cast<std::ptrdiff_t>(offsets[i]),
                  partners.begin() + static_cast<std::ptrdiff_t>(offsets[i + 1]),
                  [](const Partner& x, const Partner& y) { return x.id < y.id; });
    }
}

double pair_capacity(std::size_t m) {
    if (m < 2) {
        throw InputError("density needs at least 2 entities");
    }
    return static_cast<double>(m) * static_cast<double>(m - 1) / 2.0;
}

void write_number(std::ostream& out, double v) {
    out << std::setprecision(std::numeric_limits<double>::max_digits10) << v;
}

}  // namespace

PairId make_pair_id(EntityId a, EntityId b) {
    return a < b ? PairId{a, b} : PairId{b, a};
}

// ---------------------------------------------------------------------------
// EntityIndex

EntityIndex EntityIndex::from_names(std::vector<std::string> names) {
    std::sort(names.begin(), names.end());
    names.erase(std::unique(names.begin(), names.end()), names.end());
    if (names.size() > std::numeric_limits<EntityId>::max()) {
        throw InputError("too many entities");
    }
    EntityIndex index;
    index.names_ = std::move(names);
    for (EntityId id = 0; id < index.names_.size(); ++id) {
        index.ids_.emplace(index.names_[id], id);
    }
    return index;
}

std::optional<EntityId> EntityIndex::find(std::string_view name) const {
    auto it = ids_.find(name);
    if (it == ids_.end()) {
        return std::nullopt;
    }
    return it->second;
}

EntityId EntityIndex::id(std::string_view name) const {
    if (auto id = find(name)) {
        return *id;
    }
    throw InputError("unknown entity '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// InteractionStore

InteractionStore::InteractionStore(std::size_t entity_count, std::vector<Interaction> pairs)
    : m_(entity_count) {
    for (auto& p : pairs) {
        if (p.pair.first >= m_ || p.pair.second >= m_) {
            throw InputError("interaction id out of range");
        }
        if (p.pair.first == p.pair.second) {
            throw InputError("self-pair interaction for id " + std::to_string(p.pair.first));
        }
        if (!std::isfinite(p.confidence) || p.confidence < 0.0) {
            throw InputError("negative or non-finite confidence");
        }
        p.pair = make_pair_id(p.pair.first, p.pair.second);
    }
    std::sort(pairs.begin(), pairs.end(), [](const Interaction& x, const Interaction& y) {
        return x.pair < y.pair;
    });
    for (const auto& p : pairs) {
        if (!pairs_.empty() && pairs_.back().pair == p.pair) {
            pairs_.back().confidence = std::max(pairs_.back().confidence, p.confidence);
        } else {
            pairs_.push_back(p);
        }
    }
    build_rows();
}

void InteractionStore::build_rows() {
    build_symmetric_rows(
        m_, pairs_, [](const Interaction& x) { return x.confidence; }, row_offsets_, row_partners_);
}

std::optional<double> InteractionStore::confidence(EntityId a, EntityId b) const {
    if (a == b) {
        return std::nullopt;
    }
    const PairId key = make_pair_id(a, b);
    auto it = std::lower_bound(pairs_.begin(), pairs_.end(), key,
                               [](const Interaction& x, const PairId& k) { return x.pair < k; });
    if (it == pairs_.end() || it->pair != key) {
        return std::nullopt;
    }
    return it->confidence;
}

bool InteractionStore::contains(EntityId a, EntityId b) const {
    return confidence(a, b).has_value();
}

std::span<const Partner> InteractionStore::partners(EntityId i) const {
    if (i >= m_) {
        return {};
    }
    return std::span<const Partner>(row_partners_).subspan(row_offsets_[i],
                                                           row_offsets_[i + 1] - row_offsets_[i]);
}

InteractionStore InteractionStore::without(std::span<const PairId> removed) const {
    std::vector<PairId> drop(removed.begin(), removed.end());
    for (auto& p : drop) {
        p = make_pair_id(p.first, p.second);
    }
    std::sort(drop.begin(), drop.end());
    std::vector<Interaction> kept;
    kept.reserve(pairs_.size());
    for (const auto& p : pairs_) {
        if (!std::binary_search(drop.begin(), drop.end(), p.pair)) {
            kept.push_back(p);
        }
    }
    return InteractionStore(m_, std::move(kept));
}

// ---------------------------------------------------------------------------
// SimilarityStore

SimilarityStore::SimilarityStore(std::size_t entity_count, std::vector<Entry> entries,
                                 std::string tag, std::size_t skipped_unknown)
    : m_(entity_count), tag_(std::move(tag)), skipped_(skipped_unknown) {
    std::vector<Entry> clean;
    clean.reserve(entries.size());
    for (const auto& e : entries) {
        if (e.pair.first >= m_ || e.pair.second >= m_) {
            throw InputError("similarity id out of range");
        }
        if (!std::isfinite(e.score) || e.score < 0.0) {
            throw InputError("negative or non-finite similarity score");
        }
        if (e.pair.first == e.pair.second) {
            continue;
        }
        clean.push_back(Entry{make_pair_id(e.pair.first, e.pair.second), e.score});
    }
    std::sort(clean.begin(), clean.end(),
              [](const Entry& x, const Entry& y) { return x.pair < y.pair; });
    for (const auto& e : clean) {
        if (!entries_.empty() && entries_.back().pair == e.pair) {
            entries_.back().score = std::max(entries_.back().score, e.score);
        } else {
            entries_.push_back(e);
        }
    }
    build_symmetric_rows(
        m_, entries_, [](const Entry& x) { return x.score; }, row_offsets_, row_partners_);
}

double SimilarityStore::value(EntityId a, EntityId b) const {
    if (a == b) {
        return 0.0;
    }
    const PairId key = make_pair_id(a, b);
    auto it = std::lower_bound(entries_.begin(), entries_.end(), key,
                               [](const Entry& x, const PairId& k) { return x.pair < k; });
    return (it != entries_.end() && it->pair == key) ? it->score : 0.0;
}

std::span<const Partner> SimilarityStore::neighbors(EntityId i) const {
    if (i >= m_) {
        return {};
    }
    return std::span<const Partner>(row_partners_).subspan(row_offsets_[i],
                                                           row_offsets_[i + 1] - row_offsets_[i]);
}

// ---------------------------------------------------------------------------
// Parsing

TripletFile parse_triplets(std::string_view text, TripletKind kind, std::string source) {
    TripletFile file;
    file.source = std::move(source);
    file.kind = kind;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) {
            end = text.size();
        }
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.remove_suffix(1);
        }
        const auto fields = split_fields(line);
        if (is_skippable(fields)) {
            if (end == text.size()) {
                break;
            }
            continue;
        }
        const bool value_optional = kind == TripletKind::interaction;
        if (fields.size() > 3 || fields.size() < (value_optional ? 2u : 3u)) {
            throw InputError(where(file.source, line_no) + "expected " +
                             (value_optional ? "2 or 3" : "3") + " fields, got " +
                             std::to_string(fields.size()));
        }
        TripletLine rec;
        rec.a = std::string(fields[0]);
        rec.b = std::string(fields[1]);
        rec.line = line_no;
        if (fields.size() == 3) {
            auto v = parse_double(fields[2]);
            if (!v) {
                throw InputError(where(file.source, line_no) + "cannot parse value '" +
                                 std::string(fields[2]) + "'");
            }
            rec.value = *v;
        }
        if (rec.value < 0.0) {
            throw InputError(where(file.source, line_no) + "negative " +
                             (value_optional ? "confidence" : "score"));
        }
        if (kind == TripletKind::interaction && rec.a == rec.b) {
            throw InputError(where(file.source, line_no) + "self-pair '" + rec.a + "'");
        }
        file.lines.push_back(std::move(rec));
        if (end == text.size()) {
            break;
        }
    }
    return file;
}

TripletFile read_triplets(const std::filesystem::path& path, TripletKind kind) {
    return parse_triplets(read_file(path), kind, path.string());
}

std::vector<std::string> read_entity_list(const std::filesystem::path& path) {
    const std::string text = read_file(path);
    std::vector<std::string> names;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto fields = split_fields(line);
        if (is_skippable(fields)) {
            continue;
        }
        if (fields.size() != 1) {
            throw InputError(where(path.string(), line_no) + "expected one name per line");
        }
        names.emplace_back(fields[0]);
    }
    return names;
}

void write_entity_list(const std::filesystem::path& path, const EntityIndex& index) {
    std::ofstream out(path);
    if (!out) {
        throw InputError("cannot write '" + path.string() + "'");
    }
    for (const auto& name : index.names()) {
        out << name << '\n';
    }
}

EntityIndex merge_index(std::span<const TripletFile> files, std::span<const std::string> extra_names) {
    std::vector<std::string> names(extra_names.begin(), extra_names.end());
    for (const auto& file : files) {
        for (const auto& rec : file.lines) {
            names.push_back(rec.a);
            names.push_back(rec.b);
        }
    }
    return EntityIndex::from_names(std::move(names));
}

InteractionStore to_interactions(const TripletFile& file, const EntityIndex& index) {
    if (file.lines.empty()) {
        throw InputError(file.source + ": no interactions");
    }
    std::vector<Interaction> pairs;
    pairs.reserve(file.lines.size());
    for (const auto& rec : file.lines) {
        auto a = index.find(rec.a);
        auto b = index.find(rec.b);
        if (!a || !b) {
            throw InputError(where(file.source, rec.line) + "entity not in index");
        }
        pairs.push_back(Interaction{make_pair_id(*a, *b), rec.value});
    }
    return InteractionStore(index.size(), std::move(pairs));
}

SimilarityStore to_similarity(const TripletFile& file, const EntityIndex& index, std::string tag) {
    std::vector<SimilarityStore::Entry> entries;
    entries.reserve(file.lines.size());
    std::size_t skipped = 0;
    bool overlap = false;
    for (const auto& rec : file.lines) {
        auto a = index.find(rec.a);
        auto b = index.find(rec.b);
        if (!a || !b) {
            ++skipped;
            continue;
        }
        overlap = true;
        entries.push_back(SimilarityStore::Entry{PairId{*a, *b}, rec.value});
    }
    if (!overlap) {
        throw InputError(file.source + ": no entities overlap with the index");
    }
    return SimilarityStore(index.size(), std::move(entries), std::move(tag), skipped);
}

LoadedInteractions load_interactions(const std::filesystem::path& path) {
    const TripletFile file = read_triplets(path, TripletKind::interaction);
    LoadedInteractions out;
    out.index = merge_index(std::span<const TripletFile>(&file, 1));
    out.store = to_interactions(file, out.index);
    return out;
}

InteractionStore load_interactions(const std::filesystem::path& path, const EntityIndex& index) {
    return to_interactions(read_triplets(path, TripletKind::interaction), index);
}

SimilarityStore load_similarity(const std::filesystem::path& path, const EntityIndex& index,
                                std::string tag) {
    return to_similarity(read_triplets(path, TripletKind::similarity), index, std::move(tag));
}

void write_interactions(const std::filesystem::path& path, const InteractionStore& store,
                        const EntityIndex& index) {
    std::ofstream out(path);
    if (!out) {
        throw InputError("cannot write '" + path.string() + "'");
    }
    for (const auto& p : store.pairs()) {
        out << index.name(p.pair.first) << '\t' << index.name(p.pair.second) << '\t';
        write_number(out, p.confidence);
        out << '\n';
    }
}

void write_similarity(const std::filesystem::path& path, const SimilarityStore& store,
                      const EntityIndex& index) {
    std::ofstream out(path);
    if (!out) {
        throw InputError("cannot write '" + path.string() + "'");
    }
    for (const auto& e : store.entries()) {
        out << index.name(e.pair.first) << '\t' << index.name(e.pair.second) << '\t';
        write_number(out, e.score);
        out << '\n';
    }
}

double density(const InteractionStore& store) {
    return static_cast<double>(store.size()) / pair_capacity(store.entity_count());
}

double density(const SimilarityStore& store) {
    return static_cast<double>(store.size()) / pair_capacity(store.entity_count());
}

Dataset load_dataset(const DataPaths& paths) {
    std::vector<TripletFile> files;
    files.push_back(read_triplets(paths.interactions, TripletKind::interaction));
    std::optional<std::size_t> go_slot;
    std::optional<std::size_t> ppi_slot;
    if (paths.similarity_go) {
        go_slot = files.size();
        files.push_back(read_triplets(*paths.similarity_go, TripletKind::similarity));
    }
    if (paths.similarity_ppi) {
        ppi_slot = files.size();
        files.push_back(read_triplets(*paths.similarity_ppi, TripletKind::similarity));
    }
    std::vector<std::string> extra;
    if (paths.entities) {
        extra = read_entity_list(*paths.entities);
    }

    Dataset data;
    data.index = merge_index(files, extra);
    data.interactions = to_interactions(files.front(), data.index);
    if (go_slot) {
        data.go = to_similarity(files[*go_slot], data.index, "GO");
    }
    if (ppi_slot) {
        data.ppi = to_similarity(files[*ppi_slot], data.index, "PPI");
    }
    return data;
}

}  // namespace lmfrank
