#pragma once

// Independent reference computations and random instance builders shared by
// the unit tests and the acceptance suite. The oracles deliberately take the
// slow, literal route: pair loops, brute-force comparisons, dense matrices.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <unistd.h>

#include "lmfrank/data.hpp"
#include "lmfrank/factorization.hpp"
#include "lmfrank/neighborhood.hpp"
#include "lmfrank/weighting.hpp"

namespace lmfrank::testing {

// ---------------------------------------------------------------------------
// Random instances

struct Instance {
    std::size_t m = 0;
    std::size_t d = 0;
    InteractionStore store;
    WeightScheme scheme;
    KnnAdjacency adj_go;
    KnnAdjacency adj_ppi;
    Hyperparameters hyper;
    Matrix latent;
};

inline SimilarityStore random_similarity(std::size_t m, double density, std::mt19937_64& rng,
                                         std::string tag = "sim") {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<SimilarityStore::Entry> entries;
    for (EntityId i = 0; i < m; ++i) {
        for (EntityId j = i + 1; j < m; ++j) {
            if (unit(rng) < density) {
                entries.push_back({PairId{i, j}, 0.05 + unit(rng)});
            }
        }
    }
    return SimilarityStore(m, std::move(entries), std::move(tag));
}

inline InteractionStore random_interactions(std::size_t m, double density, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<Interaction> pairs;
    for (EntityId i = 0; i < m; ++i) {
        for (EntityId j = i + 1; j < m; ++j) {
            if (unit(rng) < density) {
                pairs.push_back({PairId{i, j}, 3.0 * unit(rng)});
            }
        }
    }
    if (pairs.empty()) {
        pairs.push_back({PairId{0, 1}, 1.0});
    }
    return InteractionStore(m, std::move(pairs));
}

inline Matrix random_matrix(std::size_t rows, std::size_t cols, double scale, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, scale);
    Matrix out(rows, cols);
    for (Eigen::Index r = 0; r < out.rows(); ++r) {
        for (Eigen::Index c = 0; c < out.cols(); ++c) {
            out(r, c) = normal(rng);
        }
    }
    return out;
}

// m <= 10, d <= 4, random scheme, nonzero alpha/beta with k-NN Laplacians.
inline Instance random_instance(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick_m(3, 10);
    std::uniform_int_distribution<std::size_t> pick_d(1, 4);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    Instance inst;
    inst.m = pick_m(rng);
    inst.d = pick_d(rng);
    inst.store = random_interactions(inst.m, 0.3, rng);
    const WeightKind kinds[] = {WeightKind::uniform, WeightKind::linear, WeightKind::loglinear};
    inst.scheme = WeightScheme{kinds[seed % 3], 0.5 + 20.0 * unit(rng)};

    std::uniform_int_distribution<std::size_t> pick_k(1, inst.m - 1);
    inst.adj_go = build_knn(random_similarity(inst.m, 0.7, rng, "GO"), pick_k(rng));
    inst.adj_ppi = build_knn(random_similarity(inst.m, 0.5, rng, "PPI"), pick_k(rng));

    inst.hyper.d = inst.d;
    inst.hyper.lambda = 0.01 + unit(rng);
    inst.hyper.alpha = 0.1 + 2.0 * unit(rng);
    inst.hyper.beta = 0.1 + 2.0 * unit(rng);
    inst.latent = random_matrix(inst.m, inst.d, 1.0, rng);
    return inst;
}

// ---------------------------------------------------------------------------
// Objective oracles

// Weight straight from the case analysis, without WeightView.
inline double weight_oracle(const InteractionStore& store, const WeightScheme& scheme, EntityId i,
                            EntityId j) {
    if (i == j) {
        return 0.0;
    }
    const auto eps = store.confidence(i, j);
    if (!eps) {
        return 1.0;
    }
    switch (scheme.kind) {
        case WeightKind::uniform:
            return scheme.c;
        case WeightKind::linear:
            return 1.0 + scheme.c * *eps;
        case WeightKind::loglinear:
            return 1.0 + scheme.c * std::log(1.0 + *eps);
    }
    return 1.0;
}

// 1/2 sum_i sum_{j in N(i)} s_ij ||U_i - U_j||^2
inline double neighbor_sum(const KnnAdjacency& adj, const Matrix& u) {
    double total = 0.0;
    for (std::size_t i = 0; i < adj.rows.size(); ++i) {
        for (const auto& nb : adj.rows[i]) {
            double dist2 = 0.0;
            for (Eigen::Index c = 0; c < u.cols(); ++c) {
                const double diff = u(static_cast<Eigen::Index>(i), c) - u(nb.id, c);
                dist2 += diff * diff;
            }
            total += nb.value * dist2;
        }
    }
    return 0.5 * total;
}

// Term-by-term objective over every ordered pair.
inline double loss_oracle(const Matrix& u, const InteractionStore& store, const WeightScheme& scheme,
                          const KnnAdjacency* go, const KnnAdjacency* ppi, const Hyperparameters& h) {
    const std::size_t m = store.entity_count();
    double data = 0.0;
    for (EntityId i = 0; i < m; ++i) {
        for (EntityId j = 0; j < m; ++j) {
            if (i == j) {
                continue;
            }
            double x = 0.0;
            for (Eigen::Index c = 0; c < u.cols(); ++c) {
                x += u(i, c) * u(j, c);
            }
            const double y = store.label(i, j);
            data += weight_oracle(store, scheme, i, j) * (std::log(1.0 + std::exp(x)) - y * x);
        }
    }
    double frob = 0.0;
    for (Eigen::Index r = 0; r < u.rows(); ++r) {
        for (Eigen::Index c = 0; c < u.cols(); ++c) {
            frob += u(r, c) * u(r, c);
        }
    }
    double total = 0.5 * data + 0.5 * h.lambda * frob;
    if (go != nullptr) {
        total += h.alpha * neighbor_sum(*go, u);
    }
    if (ppi != nullptr) {
        total += h.beta * neighbor_sum(*ppi, u);
    }
    return total;
}

// Central differences of an arbitrary scalar function of U.
template <typename F>
Matrix finite_difference(const Matrix& u, F&& f, double step = 1e-5) {
    Matrix grad(u.rows(), u.cols());
    Matrix probe = u;
    for (Eigen::Index r = 0; r < u.rows(); ++r) {
        for (Eigen::Index c = 0; c < u.cols(); ++c) {
            probe(r, c) = u(r, c) + step;
            const double up = f(probe);
            probe(r, c) = u(r, c) - step;
            const double down = f(probe);
            probe(r, c) = u(r, c);
            grad(r, c) = (up - down) / (2.0 * step);
        }
    }
    return grad;
}

// Largest entrywise |a - b| / max(|a|, |b|); entries where both sides are
// below `floor` in magnitude are compared against the floor instead.
inline double max_relative_error(const Matrix& a, const Matrix& b, double floor = 1e-6) {
    double worst = 0.0;
    for (Eigen::Index r = 0; r < a.rows(); ++r) {
        for (Eigen::Index c = 0; c < a.cols(); ++c) {
            const double scale = std::max({std::abs(a(r, c)), std::abs(b(r, c)), floor});
            worst = std::max(worst, std::abs(a(r, c) - b(r, c)) / scale);
        }
    }
    return worst;
}

// ---------------------------------------------------------------------------
// Metric oracles

// Every (positive, negative) comparison; ties count one half.
inline double auc_oracle(const std::vector<double>& scores, const std::vector<int>& labels) {
    double credit = 0.0;
    double comparisons = 0.0;
    for (std::size_t p = 0; p < scores.size(); ++p) {
        if (labels[p] != 1) {
            continue;
        }
        for (std::size_t n = 0; n < scores.size(); ++n) {
            if (labels[n] != 0) {
                continue;
            }
            comparisons += 1.0;
            if (scores[p] > scores[n]) {
                credit += 1.0;
            } else if (scores[p] == scores[n]) {
                credit += 0.5;
            }
        }
    }
    return credit / comparisons;
}

struct PrPoint {
    double recall;
    double precision;
};

// PR curve of tie-free scores: one point per rank cut-off, best first.
inline std::vector<PrPoint> pr_curve(const std::vector<double>& scores, const std::vector<int>& labels) {
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    const double total_pos = std::count(labels.begin(), labels.end(), 1);
    std::vector<PrPoint> curve;
    double tp = 0.0;
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
        tp += labels[order[rank]];
        curve.push_back({tp / total_pos, tp / static_cast<double>(rank + 1)});
    }
    return curve;
}

// Step integration: sum of (R_k - R_{k-1}) P_k.
inline double ap_oracle(const std::vector<double>& scores, const std::vector<int>& labels) {
    double area = 0.0;
    double prev_recall = 0.0;
    for (const auto& pt : pr_curve(scores, labels)) {
        area += (pt.recall - prev_recall) * pt.precision;
        prev_recall = pt.recall;
    }
    return area;
}

// Linear integration, starting from the first point's precision at recall 0.
inline double trapezoid_oracle(const std::vector<double>& scores, const std::vector<int>& labels) {
    const auto curve = pr_curve(scores, labels);
    double area = 0.0;
    double prev_recall = 0.0;
    double prev_precision = curve.front().precision;
    for (const auto& pt : curve) {
        area += (pt.recall - prev_recall) * 0.5 * (pt.precision + prev_precision);
        prev_recall = pt.recall;
        prev_precision = pt.precision;
    }
    return area;
}

// ---------------------------------------------------------------------------
// Files

class TempDir {
public:
    explicit TempDir(const std::string& name) {
        static std::size_t counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("lmfrank_" + name + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& leaf) const { return path_ / leaf; }

private:
    std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

inline void spit(const std::filesystem::path& path, const std::string& text) {
    std::ofstream(path, std::ios::binary) << text;
}

}  // namespace lmfrank::testing
