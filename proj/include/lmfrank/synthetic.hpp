#pragma once

// Planted low-rank interaction data with similarity sources derived from the
// planted factors, used as a desk-scale ground truth.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "lmfrank/data.hpp"
#include "lmfrank/neighborhood.hpp"

namespace lmfrank {

struct SyntheticSpec {
    std::size_t m = 200;
    std::size_t d_true = 5;
    double positive_rate = 0.01;
    // Probability that each planted positive is moved to a random non-positive pair.
    double noise = 0.0;
    // Standard deviation of the Gaussian perturbation added to cosine similarities.
    double sim_noise = 0.1;
    // Each entity keeps its sim_top strongest similarities (union over both ends).
    std::size_t sim_top = 20;
    std::uint64_t seed = 1;

    void validate() const;  // throws InputError
};

struct SyntheticData {
    EntityIndex index;
    InteractionStore observed;            // labels after noise
    SimilarityStore sim_a;                // "GO"-like source
    SimilarityStore sim_b;                // "PPI"-like source
    std::vector<PairId> clean_positives;  // planted labels before noise, sorted
    Matrix factors;                       // planted factors, m x d_true
};

// Throws InputError when the positive rate rounds to zero pairs or to all pairs.
SyntheticData generate(const SyntheticSpec& spec);

struct SyntheticFiles {
    std::filesystem::path interactions;
    std::filesystem::path similarity_go;
    std::filesystem::path similarity_ppi;
    std::filesystem::path truth;
    std::filesystem::path entities;
};

// Writes interactions.tsv, sim_go.tsv, sim_ppi.tsv, truth.tsv and entities.txt.
SyntheticFiles write_synthetic(const std::filesystem::path& dir, const SyntheticData& data);

}  // namespace lmfrank
