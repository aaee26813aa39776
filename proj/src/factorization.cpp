#include "lmfrank/factorization.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>

#include "lmfrank/error.hpp"
#include "parallel.hpp"

namespace lmfrank {

namespace {

void check_objective(const Matrix& latent, const Objective& objective) {
    const std::size_t m = objective.weights.entity_count();
    if (static_cast<std::size_t>(latent.rows()) != m) {
        throw InputError("latent matrix has " + std::to_string(latent.rows()) + " rows, data has " +
                         std::to_string(m) + " entities");
    }
    for (const GraphLaplacian* lap : {objective.go, objective.ppi}) {
        if (lap != nullptr && lap->size() != m) {
            throw InputError("Laplacian size " + std::to_string(lap->size()) +
                             " does not match entity count " + std::to_string(m));
        }
    }
}

std::size_t block_count(std::size_t m, std::size_t block) {
    return (m + block - 1) / block;
}

std::size_t effective_block(const KernelOptions& kernel) {
    return kernel.block_size == 0 ? 512 : kernel.block_size;
}

// 1/2 sum_{j != i} w_ij [softplus(x_ij) - y_ij x_ij] over rows [r0, r0 + n).
double data_loss_rows(const Matrix& latent, const WeightView& weights, Eigen::Index r0,
                      Eigen::Index n) {
    Matrix dots = latent.middleRows(r0, n) * latent.transpose();
    double total = 0.0;
    for (Eigen::Index b = 0; b < n; ++b) {
        const auto i = static_cast<EntityId>(r0 + b);
        double* row = dots.row(b).data();
        double row_sum = 0.0;
        for (Eigen::Index j = 0; j < dots.cols(); ++j) {
            row_sum += softplus(row[j]);
        }
        row_sum -= softplus(row[i]);
        for (const Partner& p : weights.positives(i)) {
            // Replace the unit-weight unknown term by c_ij * softplus(-x).
            row_sum += p.value * softplus(-row[p.id]) - softplus(row[p.id]);
        }
        total += row_sum;
    }
    return 0.5 * total;
}

// Rows [r0, r0 + n) of [W o (P - Y)] U.
void data_gradient_rows(const Matrix& latent, const WeightView& weights, Eigen::Index r0,
                        Eigen::Index n, Matrix& out) {
    Matrix coeff = latent.middleRows(r0, n) * latent.transpose();
    for (Eigen::Index b = 0; b < n; ++b) {
        const auto i = static_cast<EntityId>(r0 + b);
        double* row = coeff.row(b).data();
        for (Eigen::Index j = 0; j < coeff.cols(); ++j) {
            row[j] = sigmoid(row[j]);
        }
        row[i] = 0.0;
        for (const Partner& p : weights.positives(i)) {
            row[p.id] = p.value * (row[p.id] - 1.0);
        }
    }
    out.middleRows(r0, n).noalias() = coeff * latent;
}

double regularizer_loss(const Matrix& latent, const Objective& objective, const Hyperparameters& h) {
    double total = 0.5 * h.lambda * latent.squaredNorm();
    if (objective.go != nullptr && h.alpha != 0.0) {
        total += h.alpha * quad_form(*objective.go, latent);
    }
    if (objective.ppi != nullptr && h.beta != 0.0) {
        total += h.beta * quad_form(*objective.ppi, latent);
    }
    return total;
}

double loss_value(const Matrix& latent, const Objective& objective, const Hyperparameters& h,
                  const KernelOptions& kernel) {
    const std::size_t m = static_cast<std::size_t>(latent.rows());
    const std::size_t block = effective_block(kernel);
    const std::size_t blocks = block_count(m, block);
    std::vector<double> partial(blocks, 0.0);
    detail::parallel_for(blocks, kernel.threads, [&](std::size_t t) {
        const auto r0 = static_cast<Eigen::Index>(t * block);
        const auto n = static_cast<Eigen::Index>(std::min(block, m - t * block));
        partial[t] = data_loss_rows(latent, objective.weights, r0, n);
    });
    double total = 0.0;
    for (double p : partial) {
        total += p;
    }
    return total + regularizer_loss(latent, objective, h);
}

// Little-endian binary helpers for the model file.
template <typename T>
void put(std::ostream& out, T value) {
    static_assert(std::is_trivially_copyable_v<T>);
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) {
        std::reverse(std::begin(bytes), std::end(bytes));
    }
    out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
    unsigned char bytes[sizeof(T)];
    if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T))) {
        throw InputError("model file truncated");
    }
    if constexpr (std::endian::native == std::endian::big) {
        std::reverse(std::begin(bytes), std::end(bytes));
    }
    T value;
    std::memcpy(&value, bytes, sizeof(T));
    return value;
}

constexpr char kModelMagic[8] = {'L', 'M', 'F', 'R', 'A', 'N', 'K', '\0'};
constexpr std::uint32_t kModelVersion = 1;

}  // namespace

void Hyperparameters::validate() const {
    if (d < 1) {
        throw InputError("latent dimension d must be at least 1");
    }
    if (!(gamma > 0.0) || !std::isfinite(gamma)) {
        throw InputError("learning rate gamma must be positive and finite");
    }
    for (double v : {lambda, alpha, beta}) {
        if (!std::isfinite(v) || v < 0.0) {
            throw InputError("lambda, alpha and beta must be nonnegative and finite");
        }
    }
    if (early_stop && !(early_stop_tol > 0.0)) {
        throw InputError("early-stop tolerance must be positive");
    }
}

double sigmoid(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double softplus(double x) {
    if (x > 0.0) {
        return x + std::log1p(std::exp(-x));
    }
    return std::log1p(std::exp(x));
}

double probability(const Eigen::Ref<const Eigen::RowVectorXd>& a,
                   const Eigen::Ref<const Eigen::RowVectorXd>& b) {
    return sigmoid(a.dot(b));
}

double loss(const Matrix& latent, const Objective& objective, const Hyperparameters& hyper,
            const KernelOptions& kernel) {
    check_objective(latent, objective);
    const double value = loss_value(latent, objective, hyper, kernel);
    if (!std::isfinite(value)) {
        throw DivergenceError("loss is not finite");
    }
    return value;
}

Matrix gradient(const Matrix& latent, const Objective& objective, const Hyperparameters& hyper,
                const KernelOptions& kernel) {
    check_objective(latent, objective);
    const std::size_t m = static_cast<std::size_t>(latent.rows());
    Matrix grad(latent.rows(), latent.cols());
    const std::size_t block = effective_block(kernel);
    detail::parallel_for(block_count(m, block), kernel.threads, [&](std::size_t t) {
        const auto r0 = static_cast<Eigen::Index>(t * block);
        const auto n = static_cast<Eigen::Index>(std::min(block, m - t * block));
        data_gradient_rows(latent, objective.weights, r0, n, grad);
    });
    if (hyper.lambda != 0.0) {
        grad += hyper.lambda * latent;
    }
    if (objective.go != nullptr && hyper.alpha != 0.0) {
        grad += hyper.alpha * (objective.go->matrix() * latent);
    }
    if (objective.ppi != nullptr && hyper.beta != 0.0) {
        grad += hyper.beta * (objective.ppi->matrix() * latent);
    }
    if (!grad.allFinite()) {
        throw DivergenceError("gradient is not finite");
    }
    return grad;
}

Matrix initial_factors(std::size_t m, const Hyperparameters& hyper) {
    hyper.validate();
    std::mt19937_64 rng(hyper.seed);
    std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(hyper.d)));
    Matrix latent(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(hyper.d));
    for (Eigen::Index i = 0; i < latent.rows(); ++i) {
        for (Eigen::Index k = 0; k < latent.cols(); ++k) {
            latent(i, k) = normal(rng);
        }
    }
    return latent;
}

AdaGradTrainer::AdaGradTrainer(const Objective& objective, const Hyperparameters& hyper,
                               KernelOptions kernel)
    : objective_(objective), hyper_(hyper), kernel_(kernel) {
    hyper_.validate();
    latent_ = initial_factors(objective.weights.entity_count(), hyper_);
    accum_ = Matrix::Zero(latent_.rows(), latent_.cols());
}

double AdaGradTrainer::step() {
    Matrix grad;
    try {
        grad = gradient(latent_, objective_, hyper_, kernel_);
    } catch (const DivergenceError&) {
        std::ostringstream msg;
        msg << "gradient became non-finite at iteration " << iter_ + 1
            << " (max |U| = " << latent_.cwiseAbs().maxCoeff() << ")";
        throw DivergenceError(msg.str());
    }
    const double grad_norm = grad.norm();
    const double latent_norm = latent_.norm();
    last_ratio_ = latent_norm > 0.0 ? grad_norm / latent_norm : grad_norm;
    const double rate = hyper_.gamma;
    for (Eigen::Index i = 0; i < latent_.rows(); ++i) {
        for (Eigen::Index k = 0; k < latent_.cols(); ++k) {
            const double z = grad(i, k);
            double& phi = accum_(i, k);
            phi += z * z;
            if (phi > 0.0) {
                latent_(i, k) -= rate * z / std::sqrt(phi);
            }
        }
    }
    ++iter_;
    return grad_norm;
}

FactorModel train(const Objective& objective, const Hyperparameters& hyper,
                  const TrainOptions& options) {
    AdaGradTrainer trainer(objective, hyper, options.kernel);
    const auto checked_loss = [&](const Matrix& latent, std::size_t iteration) {
        const double value = loss_value(latent, objective, hyper, options.kernel);
        if (!std::isfinite(value)) {
            std::ostringstream msg;
            msg << "loss became non-finite at iteration " << iteration
                << " (max |U| = " << latent.cwiseAbs().maxCoeff() << ")";
            throw DivergenceError(msg.str());
        }
        return value;
    };

    FactorModel model;
    model.hyper = hyper;
    model.scheme = objective.weights.scheme();
    model.initial_loss = checked_loss(trainer.latent(), 0);
    if (options.on_log && options.log_every > 0) {
        options.on_log(TrainingLog{0, model.initial_loss, 0.0});
    }

    for (std::size_t it = 1; it <= hyper.max_iter; ++it) {
        if (hyper.early_stop && it > 1 && trainer.last_gradient_ratio() < hyper.early_stop_tol) {
            break;
        }
        const double grad_norm = trainer.step();
        if (options.log_every > 0 && it % options.log_every == 0) {
            const double value = checked_loss(trainer.latent(), it);
            if (options.on_log) {
                options.on_log(TrainingLog{it, value, grad_norm});
            }
        }
    }

    model.latent = trainer.latent();
    model.iterations = trainer.iteration();
    model.final_loss = checked_loss(model.latent, model.iterations);
    return model;
}

double margin(const FactorModel& model, EntityId i, EntityId j) {
    const auto m = model.entity_count();
    if (i >= m || j >= m) {
        throw InputError("entity id out of range");
    }
    if (i == j) {
        throw InputError("self-pairs cannot be scored");
    }
    return model.latent.row(i).dot(model.latent.row(j));
}

double score_pair(const FactorModel& model, EntityId i, EntityId j) {
    return sigmoid(margin(model, i, j));
}

void save_model(const std::filesystem::path& path, const FactorModel& model) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw InputError("cannot write model '" + path.string() + "'");
    }
    const Hyperparameters& h = model.hyper;
    out.write(kModelMagic, sizeof(kModelMagic));
    put<std::uint32_t>(out, kModelVersion);
    put<std::uint64_t>(out, static_cast<std::uint64_t>(model.latent.rows()));
    put<std::uint64_t>(out, static_cast<std::uint64_t>(model.latent.cols()));
    put<std::uint64_t>(out, h.seed);
    put<std::uint64_t>(out, h.max_iter);
    put<std::uint64_t>(out, model.iterations);
    put<double>(out, h.lambda);
    put<double>(out, h.alpha);
    put<double>(out, h.beta);
    put<double>(out, h.gamma);
    put<std::uint8_t>(out, h.early_stop ? 1 : 0);
    put<double>(out, h.early_stop_tol);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(model.scheme.kind));
    put<double>(out, model.scheme.c);
    put<double>(out, model.initial_loss);
    put<double>(out, model.final_loss);
    put<std::uint64_t>(out, model.entity_names.size());
    for (const auto& name : model.entity_names) {
        put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
    }
    for (Eigen::Index i = 0; i < model.latent.rows(); ++i) {
        for (Eigen::Index k = 0; k < model.latent.cols(); ++k) {
            put<double>(out, model.latent(i, k));
        }
    }
    if (!out) {
        throw InputError("failed writing model '" + path.string() + "'");
    }
}

FactorModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InputError("cannot open model '" + path.string() + "'");
    }
    char magic[sizeof(kModelMagic)];
    if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kModelMagic, sizeof(magic)) != 0) {
        throw InputError("'" + path.string() + "' is not a model file");
    }
    const auto version = get<std::uint32_t>(in);
    if (version != kModelVersion) {
        throw InputError("unsupported model version " + std::to_string(version));
    }
    FactorModel model;
    Hyperparameters& h = model.hyper;
    const auto m = get<std::uint64_t>(in);
    h.d = get<std::uint64_t>(in);
    h.seed = get<std::uint64_t>(in);
    h.max_iter = get<std::uint64_t>(in);
    model.iterations = get<std::uint64_t>(in);
    h.lambda = get<double>(in);
    h.alpha = get<double>(in);
    h.beta = get<double>(in);
    h.gamma = get<double>(in);
    h.early_stop = get<std::uint8_t>(in) != 0;
    h.early_stop_tol = get<double>(in);
    const auto kind = get<std::uint32_t>(in);
    if (kind > static_cast<std::uint32_t>(WeightKind::loglinear)) {
        throw InputError("model file has an unknown weight scheme");
    }
    model.scheme.kind = static_cast<WeightKind>(kind);
    model.scheme.c = get<double>(in);
    model.initial_loss = get<double>(in);
    model.final_loss = get<double>(in);
    const auto names = get<std::uint64_t>(in);
    if (names != 0 && names != m) {
        throw InputError("model file name table does not match its row count");
    }
    model.entity_names.reserve(names);
    for (std::uint64_t n = 0; n < names; ++n) {
        const auto len = get<std::uint32_t>(in);
        std::string name(len, '\0');
        if (!in.read(name.data(), len)) {
            throw InputError("model file truncated");
        }
        model.entity_names.push_back(std::move(name));
    }
    model.latent.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(h.d));
    for (Eigen::Index i = 0; i < model.latent.rows(); ++i) {
        for (Eigen::Index k = 0; k < model.latent.cols(); ++k) {
            model.latent(i, k) = get<double>(in);
        }
    }
    return model;
}

}  // namespace lmfrank
