#pragma once

// Entity index, sparse symmetric interaction/similarity stores and the
// triplet text format they are read from.
//
// File format (both kinds): one record per line, whitespace separated,
//   name_a  name_b  value
// Blank lines and lines starting with '#' are ignored. The value column is
// optional for interaction files (default confidence 1.0).

#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace lmfrank {

using EntityId = std::uint32_t;

// Unordered entity pair stored canonically with first < second.
struct PairId {
    EntityId first = 0;
    EntityId second = 0;

    friend auto operator<=>(const PairId&, const PairId&) = default;
};

// Canonical pair for two distinct ids, in either order.
PairId make_pair_id(EntityId a, EntityId b);

class EntityIndex {
public:
    EntityIndex() = default;

    // Sorts and deduplicates, then assigns ids in lexicographic order.
    static EntityIndex from_names(std::vector<std::string> names);

    std::size_t size() const { return names_.size(); }
    std::optional<EntityId> find(std::string_view name) const;
    EntityId id(std::string_view name) const;  // throws InputError if unknown
    const std::string& name(EntityId id) const { return names_.at(id); }
    const std::vector<std::string>& names() const { return names_; }

    bool operator==(const EntityIndex& other) const { return names_ == other.names_; }

private:
    std::vector<std::string> names_;
    std::map<std::string, EntityId, std::less<>> ids_;
};

// Neighbor of a row entity together with the value stored for the pair.
struct Partner {
    EntityId id;
    double value;
};

struct Interaction {
    PairId pair;
    double confidence = 1.0;
};

// Sparse symmetric binary matrix Y with per-pair confidence scores.
class InteractionStore {
public:
    InteractionStore() = default;

    // Throws InputError on self-pairs, out-of-range ids or negative / non-finite
    // confidence. Duplicates (either orientation) collapse to the max confidence.
    InteractionStore(std::size_t entity_count, std::vector<Interaction> pairs);

    std::size_t entity_count() const { return m_; }
    std::size_t size() const { return pairs_.size(); }
    std::span<const Interaction> pairs() const { return pairs_; }

    bool contains(EntityId a, EntityId b) const;
    int label(EntityId a, EntityId b) const { return contains(a, b) ? 1 : 0; }
    std::optional<double> confidence(EntityId a, EntityId b) const;

    // Positives of row i (both orientations), sorted by partner id.
    std::span<const Partner> partners(EntityId i) const;

    // Copy with the given pairs removed (pairs absent from the store are ignored).
    InteractionStore without(std::span<const PairId> removed) const;

private:
    void build_rows();

    std::size_t m_ = 0;
    std::vector<Interaction> pairs_;  // sorted by pair
    std::vector<std::size_t> row_offsets_;
    std::vector<Partner> row_partners_;
};

// Sparse symmetric nonnegative similarity matrix from one source.
class SimilarityStore {
public:
    struct Entry {
        PairId pair;
        double score;
    };

    SimilarityStore() = default;

    // Diagonal entries are dropped; duplicates collapse to the max score.
    // Throws InputError on negative or non-finite scores.
    SimilarityStore(std::size_t entity_count, std::vector<Entry> entries, std::string tag,
                    std::size_t skipped_unknown = 0);

    std::size_t entity_count() const { return m_; }
    std::size_t size() const { return entries_.size(); }
    std::span<const Entry> entries() const { return entries_; }
    const std::string& tag() const { return tag_; }

    // Lines dropped at load time because a name was not in the index.
    std::size_t skipped_unknown() const { return skipped_; }

    double value(EntityId a, EntityId b) const;  // 0 when absent or a == b
    std::span<const Partner> neighbors(EntityId i) const;

private:
    std::size_t m_ = 0;
    std::vector<Entry> entries_;
    std::string tag_;
    std::size_t skipped_ = 0;
    std::vector<std::size_t> row_offsets_;
    std::vector<Partner> row_partners_;
};

// One parsed record of a triplet file.
struct TripletLine {
    std::string a;
    std::string b;
    double value = 1.0;
    std::size_t line = 0;
};

enum class TripletKind { interaction, similarity };

struct TripletFile {
    std::string source;
    TripletKind kind = TripletKind::interaction;
    std::vector<TripletLine> lines;
};

// Parses a triplet stream / file. Throws InputError with the line number on
// unparseable lines, negative values and (for interactions) self-pairs.
TripletFile parse_triplets(std::string_view text, TripletKind kind, std::string source = "<memory>");
TripletFile read_triplets(const std::filesystem::path& path, TripletKind kind);

// One entity name per line; blank and '#' lines ignored.
std::vector<std::string> read_entity_list(const std::filesystem::path& path);
void write_entity_list(const std::filesystem::path& path, const EntityIndex& index);

// Index over the union of all names in the given files plus any extra names.
EntityIndex merge_index(std::span<const TripletFile> files,
                        std::span<const std::string> extra_names = {});

InteractionStore to_interactions(const TripletFile& file, const EntityIndex& index);
SimilarityStore to_similarity(const TripletFile& file, const EntityIndex& index, std::string tag);

struct LoadedInteractions {
    EntityIndex index;
    InteractionStore store;
};

// Standalone load: the index covers only names in this file.
LoadedInteractions load_interactions(const std::filesystem::path& path);
InteractionStore load_interactions(const std::filesystem::path& path, const EntityIndex& index);
SimilarityStore load_similarity(const std::filesystem::path& path, const EntityIndex& index,
                                std::string tag);

void write_interactions(const std::filesystem::path& path, const InteractionStore& store,
                        const EntityIndex& index);
void write_similarity(const std::filesystem::path& path, const SimilarityStore& store,
                      const EntityIndex& index);

// Fraction of the m(m-1)/2 off-diagonal pairs that are stored. Requires m >= 2.
double density(const InteractionStore& store);
double density(const SimilarityStore& store);

struct DataPaths {
    std::filesystem::path interactions;
    std::optional<std::filesystem::path> similarity_go;
    std::optional<std::filesystem::path> similarity_ppi;
    std::optional<std::filesystem::path> entities;
};

// Everything one run consumes, over a single merged index.
struct Dataset {
    EntityIndex index;
    InteractionStore interactions;
    std::optional<SimilarityStore> go;
    std::optional<SimilarityStore> ppi;
};

Dataset load_dataset(const DataPaths& paths);

}  // namespace lmfrank
