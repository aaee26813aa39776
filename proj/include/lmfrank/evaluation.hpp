#pragma once

// Cross-validation over positive pairs and ranking metrics over all
// candidate pairs.
//
// AUC is the Mann-Whitney statistic with ties credited 1/2. AUPR defaults to
// non-interpolated average precision: thresholds are the distinct scores in
// descending order and every positive in a tied block receives the precision
// measured after the whole block. The trapezoid mode instead integrates the
// PR curve linearly between consecutive thresholds.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "lmfrank/data.hpp"
#include "lmfrank/factorization.hpp"

namespace lmfrank {

enum class AuprMode { average_precision, trapezoid };

std::string_view to_string(AuprMode mode);
AuprMode parse_aupr_mode(std::string_view text);  // "ap" or "trapezoid"

struct FoldPlan {
    std::vector<std::vector<PairId>> folds;
    std::uint64_t seed = 0;
};

// Seeded shuffle of the positives dealt round-robin into n_folds folds.
// Throws InputError if n_folds < 2 or there are fewer positives than folds.
FoldPlan make_folds(const InteractionStore& interactions, std::size_t n_folds, std::uint64_t seed);

// labels are 0/1. auc needs both classes, aupr at least one positive;
// both throw InputError otherwise.
double auc(std::span<const double> scores, std::span<const int> labels);
double aupr(std::span<const double> scores, std::span<const int> labels,
            AuprMode mode = AuprMode::average_precision);

// Exact AUC / AUPR in O(P) memory: positive scores are fixed up front and
// negatives are streamed in any order.
class RankCounter {
public:
    explicit RankCounter(std::span<const double> positive_scores);

    void add_negative(double score);

    std::size_t positives() const { return total_pos_; }
    std::size_t negatives() const { return total_neg_; }

    double auc() const;
    double aupr(AuprMode mode = AuprMode::average_precision) const;

private:
    struct Totals {
        std::vector<std::size_t> neg_ge;  // negatives scoring >= level k
        std::vector<std::size_t> neg_gt;  // negatives scoring > level k
    };
    Totals totals() const;

    std::vector<double> levels_;  // distinct positive scores, descending
    std::vector<std::size_t> pos_count_;
    std::vector<std::size_t> ge_diff_;
    std::vector<std::size_t> gt_diff_;
    std::size_t total_pos_ = 0;
    std::size_t total_neg_ = 0;
};

struct FoldMetrics {
    double auc = 0.0;
    double aupr = 0.0;
    std::size_t test_positives = 0;
    std::size_t candidates = 0;
};

struct EvalOptions {
    AuprMode aupr_mode = AuprMode::average_precision;
    std::size_t block_size = 512;
};

// Candidates are all unordered pairs that are not training positives; held-out
// positives are labelled 1, everything else 0. Pairs are scored by their
// margin, which orders them exactly as the probability does.
// Throws LeakageError if a test positive is still a training positive.
FoldMetrics evaluate_fold(const InteractionStore& train, std::span<const PairId> test_positives,
                          const FactorModel& model, const EvalOptions& options = {});

struct MetricReport {
    std::vector<FoldMetrics> folds;
    double auc_mean = 0.0;
    double auc_sd = 0.0;  // sample standard deviation across folds
    double aupr_mean = 0.0;
    double aupr_sd = 0.0;

    static MetricReport from_folds(std::vector<FoldMetrics> folds);
};

struct CvOptions {
    std::size_t n_folds = 5;
    std::uint64_t seed = 1;
    std::size_t threads = 1;
    std::size_t block_size = 512;
    AuprMode aupr_mode = AuprMode::average_precision;
};

// For every fold: drop the fold's positives, train on the rest, evaluate.
// Folds run concurrently when threads > 1; results do not depend on it.
MetricReport cross_validate(const InteractionStore& interactions, const GraphLaplacian* go,
                            const GraphLaplacian* ppi, const Hyperparameters& hyper,
                            const WeightScheme& scheme, const CvOptions& options = {});

struct RankedPair {
    PairId pair;
    double score;   // probability
    double margin;  // U_i.U_j
};

// Descending by score, ties by (first, second) ascending, truncated to top_k.
std::vector<RankedPair> rank_candidates(const FactorModel& model, std::span<const PairId> candidates,
                                        std::size_t top_k);

// Same ordering over every pair that is not a positive in `known`.
std::vector<RankedPair> rank_unobserved(const FactorModel& model, const InteractionStore& known,
                                        std::size_t top_k, std::size_t block_size = 512);

}  // namespace lmfrank
