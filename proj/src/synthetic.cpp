#include "lmfrank/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <string>

#include "lmfrank/error.hpp"

namespace lmfrank {

namespace {

std::string entity_name(std::size_t id, std::size_t width) {
    std::string digits = std::to_string(id);
    return "g" + std::string(width > digits.size() ? width - digits.size() : 0, '0') + digits;
}

double uniform01(std::mt19937_64& rng) {
    return std::generate_canonical<double, 53>(rng);
}

SimilarityStore derived_similarity(const Matrix& factors, const SyntheticSpec& spec,
                                   std::mt19937_64& rng, std::string tag) {
    const auto m = static_cast<std::size_t>(factors.rows());
    Eigen::VectorXd norms = factors.rowwise().norm();
    std::normal_distribution<double> perturb(0.0, 1.0);
    Matrix sim = Matrix::Zero(factors.rows(), factors.rows());
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = i + 1; j < m; ++j) {
            const double denom = norms[i] * norms[j];
            double s = denom > 0.0 ? factors.row(i).dot(factors.row(j)) / denom : 0.0;
            s += spec.sim_noise * perturb(rng);
            sim(i, j) = sim(j, i) = std::max(0.0, s);
        }
    }
    std::set<PairId> kept;
    std::vector<Partner> row;
    for (std::size_t i = 0; i < m; ++i) {
        row.clear();
        for (std::size_t j = 0; j < m; ++j) {
            if (j != i && sim(i, j) > 0.0) {
                row.push_back(Partner{static_cast<EntityId>(j), sim(i, j)});
            }
        }
        const std::size_t top = std::min(spec.sim_top, row.size());
        std::partial_sort(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(top), row.end(),
                          [](const Partner& a, const Partner& b) {
                              return a.value != b.value ? a.value > b.value : a.id < b.id;
                          });
        for (std::size_t t = 0; t < top; ++t) {
            kept.insert(make_pair_id(static_cast<EntityId>(i), row[t].id));
        }
    }
    std::vector<SimilarityStore::Entry> entries;
    entries.reserve(kept.size());
    for (const PairId& p : kept) {
        entries.push_back(SimilarityStore::Entry{p, sim(p.first, p.second)});
    }
    return SimilarityStore(m, std::move(entries), std::move(tag));
}

}  // namespace

void SyntheticSpec::validate() const {
    if (m < 2) {
        throw InputError("synthetic data needs at least 2 entities");
    }
    if (d_true < 1) {
        throw InputError("planted rank must be at least 1");
    }
    if (!(positive_rate > 0.0 && positive_rate < 1.0)) {
        throw InputError("positive_rate must lie strictly between 0 and 1");
    }
    if (!(noise >= 0.0 && noise < 0.5)) {
        throw InputError("noise must lie in [0, 0.5)");
    }
    if (!(sim_noise >= 0.0) || !std::isfinite(sim_noise)) {
        throw InputError("sim_noise must be nonnegative");
    }
}

SyntheticData generate(const SyntheticSpec& spec) {
    spec.validate();
    const std::size_t m = spec.m;
    const std::size_t total_pairs = m * (m - 1) / 2;
    const auto n_pos = static_cast<std::size_t>(
        std::llround(spec.positive_rate * static_cast<double>(total_pairs)));
    if (n_pos == 0 || n_pos >= total_pairs) {
        throw InputError("positive_rate " + std::to_string(spec.positive_rate) + " gives " +
                         std::to_string(n_pos) + " of " + std::to_string(total_pairs) + " pairs");
    }

    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    SyntheticData data;
    data.factors.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(spec.d_true));
    for (Eigen::Index i = 0; i < data.factors.rows(); ++i) {
        for (Eigen::Index k = 0; k < data.factors.cols(); ++k) {
            data.factors(i, k) = normal(rng);
        }
    }

    std::vector<std::string> names;
    const std::size_t width = std::max<std::size_t>(4, std::to_string(m - 1).size());
    for (std::size_t i = 0; i < m; ++i) {
        names.push_back(entity_name(i, width));
    }
    data.index = EntityIndex::from_names(std::move(names));

    // The pairs with the largest true probability become the planted positives.
    struct Scored {
        PairId pair;
        double margin;
    };
    std::vector<Scored> scored;
    scored.reserve(total_pairs);
    for (EntityId i = 0; i < m; ++i) {
        for (EntityId j = i + 1; j < m; ++j) {
            scored.push_back(Scored{PairId{i, j}, data.factors.row(i).dot(data.factors.row(j))});
        }
    }
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(n_pos), scored.end(),
                      [](const Scored& a, const Scored& b) {
                          return a.margin != b.margin ? a.margin > b.margin : a.pair < b.pair;
                      });
    for (std::size_t t = 0; t < n_pos; ++t) {
        data.clean_positives.push_back(scored[t].pair);
    }
    std::sort(data.clean_positives.begin(), data.clean_positives.end());

    std::set<PairId> observed(data.clean_positives.begin(), data.clean_positives.end());
    if (spec.noise > 0.0) {
        std::uniform_int_distribution<EntityId> pick(0, static_cast<EntityId>(m - 1));
        for (const PairId& p : data.clean_positives) {
            if (uniform01(rng) >= spec.noise) {
                continue;
            }
            PairId moved;
            do {
                const EntityId a = pick(rng);
                const EntityId b = pick(rng);
                moved = a == b ? p : make_pair_id(a, b);
            } while (observed.count(moved) != 0 ||
                     std::binary_search(data.clean_positives.begin(), data.clean_positives.end(), moved));
            observed.erase(p);
            observed.insert(moved);
        }
    }
    std::vector<Interaction> pairs;
    pairs.reserve(observed.size());
    for (const PairId& p : observed) {
        pairs.push_back(Interaction{p, 1.0});
    }
    data.observed = InteractionStore(m, std::move(pairs));

    data.sim_a = derived_similarity(data.factors, spec, rng, "GO");
    data.sim_b = derived_similarity(data.factors, spec, rng, "PPI");
    return data;
}

SyntheticFiles write_synthetic(const std::filesystem::path& dir, const SyntheticData& data) {
    std::filesystem::create_directories(dir);
    SyntheticFiles files{dir / "interactions.tsv", dir / "sim_go.tsv", dir / "sim_ppi.tsv",
                         dir / "truth.tsv", dir / "entities.txt"};
    write_interactions(files.interactions, data.observed, data.index);
    write_similarity(files.similarity_go, data.sim_a, data.index);
    write_similarity(files.similarity_ppi, data.sim_b, data.index);
    std::vector<Interaction> truth;
    for (const PairId& p : data.clean_positives) {
        truth.push_back(Interaction{p, 1.0});
    }
    write_interactions(files.truth, InteractionStore(data.index.size(), std::move(truth)), data.index);
    write_entity_list(files.entities, data.index);
    return files;
}

}  // namespace lmfrank
