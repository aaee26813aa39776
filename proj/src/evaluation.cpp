#include "lmfrank/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <random>

#include "lmfrank/error.hpp"
#include "parallel.hpp"

namespace lmfrank {

namespace {

struct Counts {
    std::size_t pos = 0;
    std::size_t neg = 0;
};

Counts count_labels(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size()) {
        throw InputError("scores and labels differ in length");
    }
    Counts c;
    for (int y : labels) {
        if (y != 0 && y != 1) {
            throw InputError("labels must be 0 or 1");
        }
        (y == 1 ? c.pos : c.neg) += 1;
    }
    return c;
}

// Indices sorted by descending score.
std::vector<std::size_t> descending_order(std::span<const double> scores) {
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    return order;
}

bool ranks_before(const RankedPair& a, const RankedPair& b) {
    if (a.margin != b.margin) {
        return a.margin > b.margin;
    }
    return a.pair < b.pair;
}

}  // namespace

std::string_view to_string(AuprMode mode) {
    return mode == AuprMode::average_precision ? "ap" : "trapezoid";
}

AuprMode parse_aupr_mode(std::string_view text) {
    if (text == "ap") {
        return AuprMode::average_precision;
    }
    if (text == "trapezoid") {
        return AuprMode::trapezoid;
    }
    throw InputError("unknown AUPR mode '" + std::string(text) + "' (expected ap or trapezoid)");
}

FoldPlan make_folds(const InteractionStore& interactions, std::size_t n_folds, std::uint64_t seed) {
    if (n_folds < 2) {
        throw InputError("cross-validation needs at least 2 folds");
    }
    if (interactions.size() < n_folds) {
        throw InputError("only " + std::to_string(interactions.size()) + " positives for " +
                         std::to_string(n_folds) + " folds");
    }
    std::vector<PairId> positives;
    positives.reserve(interactions.size());
    for (const auto& p : interactions.pairs()) {
        positives.push_back(p.pair);
    }
    // Fisher-Yates with an explicit engine draw keeps folds identical across
    // standard library implementations.
    std::mt19937_64 rng(seed);
    for (std::size_t i = positives.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng() % i);
        std::swap(positives[i - 1], positives[j]);
    }
    FoldPlan plan;
    plan.seed = seed;
    plan.folds.resize(n_folds);
    for (std::size_t i = 0; i < positives.size(); ++i) {
        plan.folds[i % n_folds].push_back(positives[i]);
    }
    for (auto& fold : plan.folds) {
        std::sort(fold.begin(), fold.end());
    }
    return plan;
}

double auc(std::span<const double> scores, std::span<const int> labels) {
    const Counts c = count_labels(scores, labels);
    if (c.pos == 0 || c.neg == 0) {
        throw InputError("AUC needs at least one positive and one negative");
    }
    const auto order = descending_order(scores);
    // Walk tied blocks from the top; each positive beats every negative below
    // its block and ties with the negatives inside it.
    double credit = 0.0;
    std::size_t neg_above = 0;
    for (std::size_t start = 0; start < order.size();) {
        std::size_t end = start;
        std::size_t block_pos = 0;
        std::size_t block_neg = 0;
        while (end < order.size() && scores[order[end]] == scores[order[start]]) {
            (labels[order[end]] == 1 ? block_pos : block_neg) += 1;
            ++end;
        }
        const double below = static_cast<double>(c.neg - neg_above - block_neg);
        credit += static_cast<double>(block_pos) * (below + 0.5 * static_cast<double>(block_neg));
        neg_above += block_neg;
        start = end;
    }
    return credit / (static_cast<double>(c.pos) * static_cast<double>(c.neg));
}

double aupr(std::span<const double> scores, std::span<const int> labels, AuprMode mode) {
    const Counts c = count_labels(scores, labels);
    if (c.pos == 0) {
        throw InputError("AUPR needs at least one positive");
    }
    const auto order = descending_order(scores);
    const double total_pos = static_cast<double>(c.pos);
    double area = 0.0;
    std::size_t tp = 0;
    std::size_t seen = 0;
    double prev_precision = -1.0;  // precision at the previous threshold
    for (std::size_t start = 0; start < order.size();) {
        std::size_t end = start;
        std::size_t block_pos = 0;
        while (end < order.size() && scores[order[end]] == scores[order[start]]) {
            block_pos += labels[order[end]] == 1 ? 1 : 0;
            ++end;
        }
        tp += block_pos;
        seen += end - start;
        const double precision = static_cast<double>(tp) / static_cast<double>(seen);
        if (block_pos > 0) {
            const double recall_step = static_cast<double>(block_pos) / total_pos;
            if (mode == AuprMode::average_precision) {
                area += recall_step * precision;
            } else {
                const double left = prev_precision < 0.0 ? precision : prev_precision;
                area += recall_step * 0.5 * (left + precision);
            }
        }
        prev_precision = precision;
        start = end;
    }
    return area;
}

// ---------------------------------------------------------------------------
// RankCounter

RankCounter::RankCounter(std::span<const double> positive_scores) {
    if (positive_scores.empty()) {
        throw InputError("RankCounter needs at least one positive");
    }
    std::vector<double> sorted(positive_scores.begin(), positive_scores.end());
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    for (double s : sorted) {
        if (!std::isfinite(s)) {
            throw InputError("non-finite positive score");
        }
        if (levels_.empty() || levels_.back() != s) {
            levels_.push_back(s);
            pos_count_.push_back(0);
        }
        ++pos_count_.back();
    }
    total_pos_ = sorted.size();
    ge_diff_.assign(levels_.size() + 1, 0);
    gt_diff_.assign(levels_.size() + 1, 0);
}

void RankCounter::add_negative(double score) {
    // First level <= score, and first level < score (levels are descending).
    const auto ge = std::lower_bound(levels_.begin(), levels_.end(), score, std::greater<>());
    const auto gt = std::upper_bound(levels_.begin(), levels_.end(), score, std::greater<>());
    ++ge_diff_[static_cast<std::size_t>(ge - levels_.begin())];
    ++gt_diff_[static_cast<std::size_t>(gt - levels_.begin())];
    ++total_neg_;
}

RankCounter::Totals RankCounter::totals() const {
    Totals t;
    t.neg_ge.resize(levels_.size());
    t.neg_gt.resize(levels_.size());
    std::size_t ge = 0;
    std::size_t gt = 0;
    for (std::size_t k = 0; k < levels_.size(); ++k) {
        ge += ge_diff_[k];
        gt += gt_diff_[k];
        t.neg_ge[k] = ge;
        t.neg_gt[k] = gt;
    }
    return t;
}

double RankCounter::auc() const {
    if (total_neg_ == 0) {
        throw InputError("AUC needs at least one negative");
    }
    const Totals t = totals();
    double credit = 0.0;
    for (std::size_t k = 0; k < levels_.size(); ++k) {
        const double below = static_cast<double>(total_neg_ - t.neg_ge[k]);
        const double tied = static_cast<double>(t.neg_ge[k] - t.neg_gt[k]);
        credit += static_cast<double>(pos_count_[k]) * (below + 0.5 * tied);
    }
    return credit / (static_cast<double>(total_pos_) * static_cast<double>(total_neg_));
}

double RankCounter::aupr(AuprMode mode) const {
    const Totals t = totals();
    const double total_pos = static_cast<double>(total_pos_);
    double area = 0.0;
    std::size_t pos_ge = 0;
    for (std::size_t k = 0; k < levels_.size(); ++k) {
        const std::size_t pos_gt = pos_ge;
        pos_ge += pos_count_[k];
        const double precision =
            static_cast<double>(pos_ge) / static_cast<double>(pos_ge + t.neg_ge[k]);
        const double recall_step = static_cast<double>(pos_count_[k]) / total_pos;
        if (mode == AuprMode::average_precision) {
            area += recall_step * precision;
        } else {
            // Previous threshold: everything scoring strictly above this level.
            // Only when nothing does is the block its own left edge.
            const std::size_t above = pos_gt + t.neg_gt[k];
            const double left = above == 0 ? precision
                                           : static_cast<double>(pos_gt) / static_cast<double>(above);
            area += recall_step * 0.5 * (left + precision);
        }
    }
    return area;
}

// ---------------------------------------------------------------------------
// Fold evaluation and cross-validation

FoldMetrics evaluate_fold(const InteractionStore& train, std::span<const PairId> test_positives,
                          const FactorModel& model, const EvalOptions& options) {
    const std::size_t m = train.entity_count();
    if (model.entity_count() != m) {
        throw InputError("model covers " + std::to_string(model.entity_count()) +
                         " entities, training data " + std::to_string(m));
    }
    std::vector<PairId> tests;
    tests.reserve(test_positives.size());
    for (const PairId& p : test_positives) {
        if (p.first >= m || p.second >= m || p.first == p.second) {
            throw InputError("invalid test pair");
        }
        if (train.contains(p.first, p.second)) {
            throw LeakageError("test positive (" + std::to_string(p.first) + ", " +
                               std::to_string(p.second) + ") is also a training positive");
        }
        tests.push_back(make_pair_id(p.first, p.second));
    }
    std::sort(tests.begin(), tests.end());
    tests.erase(std::unique(tests.begin(), tests.end()), tests.end());
    if (tests.empty()) {
        throw InputError("fold has no test positives");
    }

    std::vector<double> pos_scores;
    pos_scores.reserve(tests.size());
    for (const PairId& p : tests) {
        pos_scores.push_back(margin(model, p.first, p.second));
    }
    RankCounter counter(pos_scores);

    const Matrix& u = model.latent;
    const std::size_t block = options.block_size == 0 ? 512 : options.block_size;
    auto test_it = tests.begin();
    for (std::size_t r0 = 0; r0 < m; r0 += block) {
        const std::size_t n = std::min(block, m - r0);
        const Matrix dots = u.middleRows(static_cast<Eigen::Index>(r0), static_cast<Eigen::Index>(n)) *
                            u.transpose();
        for (std::size_t b = 0; b < n; ++b) {
            const auto i = static_cast<EntityId>(r0 + b);
            const auto partners = train.partners(i);
            auto known = std::lower_bound(partners.begin(), partners.end(), i + 1,
                                          [](const Partner& p, EntityId id) { return p.id < id; });
            for (EntityId j = i + 1; j < m; ++j) {
                if (known != partners.end() && known->id == j) {
                    ++known;
                    continue;
                }
                if (test_it != tests.end() && test_it->first == i && test_it->second == j) {
                    ++test_it;
                    continue;
                }
                counter.add_negative(dots(static_cast<Eigen::Index>(b), j));
            }
        }
    }

    FoldMetrics out;
    out.auc = counter.auc();
    out.aupr = counter.aupr(options.aupr_mode);
    out.test_positives = counter.positives();
    out.candidates = counter.positives() + counter.negatives();
    return out;
}

MetricReport MetricReport::from_folds(std::vector<FoldMetrics> folds) {
    MetricReport report;
    report.folds = std::move(folds);
    const std::size_t n = report.folds.size();
    if (n == 0) {
        return report;
    }
    const auto mean_sd = [&](auto field, double& mean, double& sd) {
        double sum = 0.0;
        for (const auto& f : report.folds) {
            sum += f.*field;
        }
        mean = sum / static_cast<double>(n);
        double sq = 0.0;
        for (const auto& f : report.folds) {
            sq += (f.*field - mean) * (f.*field - mean);
        }
        sd = n > 1 ? std::sqrt(sq / static_cast<double>(n - 1)) : 0.0;
    };
    mean_sd(&FoldMetrics::auc, report.auc_mean, report.auc_sd);
    mean_sd(&FoldMetrics::aupr, report.aupr_mean, report.aupr_sd);
    return report;
}

MetricReport cross_validate(const InteractionStore& interactions, const GraphLaplacian* go,
                            const GraphLaplacian* ppi, const Hyperparameters& hyper,
                            const WeightScheme& scheme, const CvOptions& options) {
    hyper.validate();
    scheme.validate();
    const FoldPlan plan = make_folds(interactions, options.n_folds, options.seed);
    std::vector<FoldMetrics> results(plan.folds.size());

    const bool fold_parallel = options.threads > 1;
    KernelOptions kernel;
    kernel.block_size = options.block_size;
    kernel.threads = fold_parallel ? 1 : options.threads;

    detail::parallel_for(plan.folds.size(), options.threads, [&](std::size_t f) {
        const InteractionStore train_store = interactions.without(plan.folds[f]);
        const WeightView weights(train_store, scheme);
        const Objective objective{weights, go, ppi};
        TrainOptions train_options;
        train_options.kernel = kernel;
        const FactorModel model = train(objective, hyper, train_options);
        EvalOptions eval;
        eval.aupr_mode = options.aupr_mode;
        eval.block_size = options.block_size;
        results[f] = evaluate_fold(train_store, plan.folds[f], model, eval);
    });
    return MetricReport::from_folds(std::move(results));
}

// ---------------------------------------------------------------------------
// Ranking

std::vector<RankedPair> rank_candidates(const FactorModel& model, std::span<const PairId> candidates,
                                        std::size_t top_k) {
    std::vector<RankedPair> ranked;
    ranked.reserve(candidates.size());
    for (const PairId& p : candidates) {
        const PairId pair = make_pair_id(p.first, p.second);
        const double x = margin(model, pair.first, pair.second);
        ranked.push_back(RankedPair{pair, sigmoid(x), x});
    }
    std::sort(ranked.begin(), ranked.end(), ranks_before);
    ranked.erase(std::unique(ranked.begin(), ranked.end(),
                             [](const RankedPair& a, const RankedPair& b) { return a.pair == b.pair; }),
                 ranked.end());
    if (top_k != 0 && ranked.size() > top_k) {
        ranked.resize(top_k);
    }
    return ranked;
}

std::vector<RankedPair> rank_unobserved(const FactorModel& model, const InteractionStore& known,
                                        std::size_t top_k, std::size_t block_size) {
    const std::size_t m = known.entity_count();
    if (model.entity_count() != m) {
        throw InputError("model covers " + std::to_string(model.entity_count()) +
                         " entities, interaction data " + std::to_string(m));
    }
    const std::size_t total = m < 2 ? 0 : m * (m - 1) / 2 - known.size();
    const std::size_t keep = top_k == 0 ? total : std::min(top_k, total);
    // Max-heap under ranks_before: the top is the worst pair kept so far.
    std::priority_queue<RankedPair, std::vector<RankedPair>, decltype(&ranks_before)> heap(ranks_before);
    const Matrix& u = model.latent;
    const std::size_t block = block_size == 0 ? 512 : block_size;
    for (std::size_t r0 = 0; r0 < m && keep > 0; r0 += block) {
        const std::size_t n = std::min(block, m - r0);
        const Matrix dots = u.middleRows(static_cast<Eigen::Index>(r0), static_cast<Eigen::Index>(n)) *
                            u.transpose();
        for (std::size_t b = 0; b < n; ++b) {
            const auto i = static_cast<EntityId>(r0 + b);
            for (EntityId j = i + 1; j < m; ++j) {
                if (known.contains(i, j)) {
                    continue;
                }
                const double x = dots(static_cast<Eigen::Index>(b), j);
                const RankedPair candidate{PairId{i, j}, 0.0, x};
                if (heap.size() < keep) {
                    heap.push(candidate);
                } else if (ranks_before(candidate, heap.top())) {
                    heap.pop();
                    heap.push(candidate);
                }
            }
        }
    }
    std::vector<RankedPair> ranked;
    ranked.reserve(heap.size());
    while (!heap.empty()) {
        ranked.push_back(heap.top());
        heap.pop();
    }
    std::reverse(ranked.begin(), ranked.end());
    for (auto& r : ranked) {
        r.score = sigmoid(r.margin);
    }
    return ranked;
}

}  // namespace lmfrank
