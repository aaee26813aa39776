#pragma once

// Importance-weighted logistic matrix factorization with two Laplacian
// neighborhood regularizers, trained by full-gradient AdaGrad.
//
// Objective over the latent matrix U (m x d):
//
//   L(U) = 1/2 sum_{i,j} w_ij [ log(1 + exp(U_i.U_j)) - y_ij U_i.U_j ]
//        + lambda/2 ||U||_F^2 + alpha/2 tr(U^T Lgo U) + beta/2 tr(U^T Lppi U)
//
//   dL/dU = [ W o (P - Y) + lambda I + alpha Lgo + beta Lppi ] U
//
// The m x m data term is evaluated in row blocks; no dense m x m matrix is
// ever held.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lmfrank/neighborhood.hpp"
#include "lmfrank/weighting.hpp"

namespace lmfrank {

struct Hyperparameters {
    std::size_t d = 50;
    double lambda = 0.01;
    double alpha = 1.0;
    double beta = 10.0;
    double gamma = 1.0 / 32.0;
    std::size_t max_iter = 1000;
    std::uint64_t seed = 1;
    // Opt-in: stop once ||Z||_F / ||U||_F falls below early_stop_tol.
    bool early_stop = false;
    double early_stop_tol = 1e-6;

    void validate() const;  // throws InputError
};

// Data and regularizers the objective is evaluated over. A null Laplacian,
// or a zero coefficient, drops that regularizer entirely.
struct Objective {
    const WeightView& weights;
    const GraphLaplacian* go = nullptr;
    const GraphLaplacian* ppi = nullptr;
};

struct KernelOptions {
    std::size_t block_size = 512;
    std::size_t threads = 1;
};

double sigmoid(double x);
double softplus(double x);  // log(1 + exp(x)) without overflow

// Interaction probability 1 / (1 + exp(-a.b)).
double probability(const Eigen::Ref<const Eigen::RowVectorXd>& a,
                   const Eigen::Ref<const Eigen::RowVectorXd>& b);

// Throws InputError on dimension mismatch, DivergenceError on a non-finite result.
double loss(const Matrix& latent, const Objective& objective, const Hyperparameters& hyper,
            const KernelOptions& kernel = {});
Matrix gradient(const Matrix& latent, const Objective& objective, const Hyperparameters& hyper,
                const KernelOptions& kernel = {});

struct FactorModel {
    Matrix latent;
    Hyperparameters hyper;
    WeightScheme scheme;
    std::vector<std::string> entity_names;  // optional; empty when unnamed
    double initial_loss = 0.0;
    double final_loss = 0.0;
    std::size_t iterations = 0;

    std::size_t entity_count() const { return static_cast<std::size_t>(latent.rows()); }
};

// Gaussian initialization with standard deviation 1/sqrt(d), drawn from seed.
Matrix initial_factors(std::size_t m, const Hyperparameters& hyper);

struct TrainingLog {
    std::size_t iteration;
    double loss;
    double gradient_norm;
};

struct TrainOptions {
    KernelOptions kernel;
    std::size_t log_every = 0;  // 0 disables per-iteration loss evaluation
    std::function<void(const TrainingLog&)> on_log;
};

// Per-coordinate AdaGrad over the full gradient.
class AdaGradTrainer {
public:
    AdaGradTrainer(const Objective& objective, const Hyperparameters& hyper, KernelOptions kernel = {});

    // One iteration. Returns ||Z||_F of the gradient it applied.
    // Throws DivergenceError when the gradient turns non-finite.
    double step();

    const Matrix& latent() const { return latent_; }
    const Matrix& accumulator() const { return accum_; }
    std::size_t iteration() const { return iter_; }
    double last_gradient_ratio() const { return last_ratio_; }

private:
    const Objective& objective_;
    Hyperparameters hyper_;
    KernelOptions kernel_;
    Matrix latent_;
    Matrix accum_;
    std::size_t iter_ = 0;
    double last_ratio_ = 0.0;
};

FactorModel train(const Objective& objective, const Hyperparameters& hyper,
                  const TrainOptions& options = {});

// Probability for a pair of distinct entities. Throws InputError if i == j.
double score_pair(const FactorModel& model, EntityId i, EntityId j);

// Pre-sigmoid margin U_i.U_j; orders pairs identically to score_pair without
// saturating at 1.0.
double margin(const FactorModel& model, EntityId i, EntityId j);

void save_model(const std::filesystem::path& path, const FactorModel& model);
FactorModel load_model(const std::filesystem::path& path);

}  // namespace lmfrank
