#include "doctest.h"

#include <cmath>
#include <limits>
#include <random>

#include "lmfrank/error.hpp"
#include "lmfrank/evaluation.hpp"
#include "lmfrank/factorization.hpp"
#include "lmfrank/synthetic.hpp"
#include "support.hpp"

using namespace lmfrank;
namespace t = lmfrank::testing;

namespace {

Hyperparameters only_lambda(std::size_t d, double lambda) {
    Hyperparameters h;
    h.d = d;
    h.lambda = lambda;
    h.alpha = 0.0;
    h.beta = 0.0;
    return h;
}

// Seed-1 synthetic suite with its two similarity Laplacians (k = 10).
struct Suite {
    SyntheticData data = generate(SyntheticSpec{});
    GraphLaplacian go = laplacian(build_knn(data.sim_a, 10));
    GraphLaplacian ppi = laplacian(build_knn(data.sim_b, 10));
};

const Suite& suite() {
    static const Suite s;
    return s;
}

Hyperparameters suite_hyper(std::size_t max_iter) {
    Hyperparameters h;
    h.d = 10;
    h.alpha = 1.0;
    h.beta = 1.0;
    h.max_iter = max_iter;
    return h;
}

}  // namespace

TEST_CASE("probability at simple margins") {
    Eigen::RowVectorXd zero = Eigen::RowVectorXd::Zero(3);
    Eigen::RowVectorXd a(1), b(1);
    a << 1.0;
    CHECK(probability(zero, Eigen::RowVectorXd::Ones(3)) == 0.5);
    b << std::log(3.0);
    CHECK(probability(a, b) == doctest::Approx(0.75).epsilon(1e-15));
    b << -700.0;
    const double tiny = probability(a, b);
    CHECK(tiny > 0.0);
    CHECK(tiny <= 1e-300);
}

TEST_CASE("sigmoid and softplus stay finite at extreme margins") {
    for (double x : {-1e6, -745.0, -700.0, -30.0, 0.0, 30.0, 700.0, 745.0, 1e6}) {
        CHECK(std::isfinite(sigmoid(x)));
        CHECK(std::isfinite(softplus(x)));
        CHECK(softplus(x) >= 0.0);
    }
    CHECK(softplus(0.0) == doctest::Approx(std::log(2.0)));
    CHECK(softplus(1e6) == 1e6);
    CHECK(softplus(-40.0) == doctest::Approx(std::exp(-40.0)).epsilon(1e-12));
}

TEST_CASE("loss at U = 0 with no positives is 3 ln 2 for m = 3") {
    InteractionStore store(3, {});
    WeightView w(store, {WeightKind::uniform, 50});
    Objective obj{w};
    CHECK(loss(Matrix::Zero(3, 2), obj, only_lambda(2, 0.5)) ==
          doctest::Approx(3.0 * std::log(2.0)).epsilon(1e-15));
}

TEST_CASE("regularizers vanish at U = 0") {
    auto inst = t::random_instance(7);
    auto go = laplacian(inst.adj_go);
    auto ppi = laplacian(inst.adj_ppi);
    WeightView w(inst.store, inst.scheme);
    const Matrix zero = Matrix::Zero(inst.m, inst.d);
    const double with = loss(zero, Objective{w, &go, &ppi}, inst.hyper);
    const double without = loss(zero, Objective{w}, only_lambda(inst.d, 0.0));
    CHECK(with == doctest::Approx(without).epsilon(1e-15));
}

TEST_CASE("loss matches the pair-loop oracle") {
    for (std::uint64_t seed = 100; seed < 110; ++seed) {
        auto inst = t::random_instance(seed);
        std::mt19937_64 rng(seed);
        auto store = t::random_interactions(8, 0.3, rng);
        auto u = t::random_matrix(8, 3, 1.0, rng);
        auto adj_go = build_knn(t::random_similarity(8, 0.6, rng), 3);
        auto adj_ppi = build_knn(t::random_similarity(8, 0.6, rng), 2);
        auto go = laplacian(adj_go);
        auto ppi = laplacian(adj_ppi);
        WeightView w(store, inst.scheme);
        inst.hyper.d = 3;
        const double expected = t::loss_oracle(u, store, inst.scheme, &adj_go, &adj_ppi, inst.hyper);
        CHECK(loss(u, Objective{w, &go, &ppi}, inst.hyper) == doctest::Approx(expected).epsilon(1e-10));
    }
}

TEST_CASE("gradient at U = 0 without regularization is zero") {
    InteractionStore store(4, {});
    WeightView w(store, {WeightKind::uniform, 50});
    auto h = only_lambda(3, 0.0);
    CHECK(gradient(Matrix::Zero(4, 3), Objective{w}, h).isZero());
}

TEST_CASE("gradient matches central finite differences") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        auto inst = t::random_instance(seed);
        auto go = laplacian(inst.adj_go);
        auto ppi = laplacian(inst.adj_ppi);
        WeightView w(inst.store, inst.scheme);
        Objective obj{w, &go, &ppi};
        const Matrix analytic = gradient(inst.latent, obj, inst.hyper);
        const Matrix numeric =
            t::finite_difference(inst.latent, [&](const Matrix& u) { return loss(u, obj, inst.hyper); });
        CAPTURE(seed);
        CHECK(t::max_relative_error(analytic, numeric) <= 1e-4);
    }
}

TEST_CASE("with only the L2 term the gradient is lambda U") {
    InteractionStore single(1, {});
    WeightView w(single, {WeightKind::uniform, 50});
    std::mt19937_64 rng(3);
    const Matrix u = t::random_matrix(1, 4, 1.0, rng);
    CHECK(gradient(u, Objective{w}, only_lambda(4, 0.3)) == 0.3 * u);
}

TEST_CASE("block size and threads do not change the objective") {
    auto inst = t::random_instance(55);
    std::mt19937_64 rng(55);
    auto store = t::random_interactions(40, 0.1, rng);
    auto u = t::random_matrix(40, 3, 1.0, rng);
    WeightView w(store, inst.scheme);
    Objective obj{w};
    auto h = only_lambda(3, 0.1);
    const double ref_loss = loss(u, obj, h);
    const Matrix ref_grad = gradient(u, obj, h);
    for (KernelOptions k : {KernelOptions{1, 1}, KernelOptions{7, 3}, KernelOptions{64, 4}}) {
        CHECK(loss(u, obj, h, k) == doctest::Approx(ref_loss).epsilon(1e-12));
        CHECK(t::max_relative_error(gradient(u, obj, h, k), ref_grad, 1e-12) <= 1e-12);
    }
}

TEST_CASE("loss and gradient stay finite for entries up to 50") {
    std::mt19937_64 rng(61);
    std::uniform_real_distribution<double> spread(-50.0, 50.0);
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        auto inst = t::random_instance(seed);
        Matrix u(inst.m, inst.d);
        for (auto& x : u.reshaped()) {
            x = spread(rng);
        }
        u(0, 0) = 50.0;
        auto go = laplacian(inst.adj_go);
        auto ppi = laplacian(inst.adj_ppi);
        WeightView w(inst.store, inst.scheme);
        Objective obj{w, &go, &ppi};
        CHECK(std::isfinite(loss(u, obj, inst.hyper)));
        CHECK(gradient(u, obj, inst.hyper).allFinite());
    }
}

TEST_CASE("dimension mismatches are rejected") {
    InteractionStore store(3, {});
    WeightView w(store, {});
    CHECK_THROWS_AS(loss(Matrix::Zero(4, 2), Objective{w}, only_lambda(2, 0.1)), InputError);
    CHECK_THROWS_AS(gradient(Matrix::Zero(2, 2), Objective{w}, only_lambda(2, 0.1)), InputError);
}

TEST_CASE("initialization has standard deviation 1/sqrt(d)") {
    Hyperparameters h;
    h.d = 16;
    const Matrix u = initial_factors(2000, h);
    const double mean = u.mean();
    const double var = (u.array() - mean).square().mean();
    CHECK(std::abs(mean) < 0.01);
    CHECK(var == doctest::Approx(1.0 / 16.0).epsilon(0.03));
    CHECK(initial_factors(2000, h) == u);
}

TEST_CASE("max_iter = 0 returns the initial factors") {
    auto inst = t::random_instance(9);
    WeightView w(inst.store, inst.scheme);
    auto h = inst.hyper;
    h.max_iter = 0;
    auto model = train(Objective{w}, h);
    CHECK(model.iterations == 0);
    CHECK(model.latent == initial_factors(inst.m, h));
    CHECK(model.final_loss == model.initial_loss);
}

TEST_CASE("AdaGrad accumulator never decreases") {
    auto inst = t::random_instance(13);
    auto go = laplacian(inst.adj_go);
    WeightView w(inst.store, inst.scheme);
    Objective obj{w, &go};
    AdaGradTrainer trainer(obj, inst.hyper);
    CHECK(trainer.accumulator().isZero());
    Matrix prev = trainer.accumulator();
    for (int it = 0; it < 30; ++it) {
        trainer.step();
        CHECK((trainer.accumulator().array() >= prev.array()).all());
        prev = trainer.accumulator();
    }
    CHECK(trainer.iteration() == 30);
}

TEST_CASE("one AdaGrad step moves each coordinate by gamma against the gradient sign") {
    auto inst = t::random_instance(21);
    WeightView w(inst.store, inst.scheme);
    Objective obj{w};
    auto h = inst.hyper;
    AdaGradTrainer trainer(obj, h);
    const Matrix before = trainer.latent();
    const Matrix z = gradient(before, obj, h);
    trainer.step();
    const Matrix moved = before - trainer.latent();
    for (Eigen::Index r = 0; r < z.rows(); ++r) {
        for (Eigen::Index c = 0; c < z.cols(); ++c) {
            const double expected = z(r, c) == 0.0 ? 0.0 : std::copysign(h.gamma, z(r, c));
            CHECK(moved(r, c) == doctest::Approx(expected).epsilon(1e-12));
        }
    }
}

TEST_CASE("training is deterministic, including across thread counts") {
    auto inst = t::random_instance(17);
    std::mt19937_64 rng(17);
    auto store = t::random_interactions(30, 0.1, rng);
    auto go = laplacian(build_knn(t::random_similarity(30, 0.5, rng), 4));
    WeightView w(store, inst.scheme);
    Objective obj{w, &go};
    auto h = inst.hyper;
    h.max_iter = 50;
    auto a = train(obj, h);
    auto b = train(obj, h);
    CHECK(a.latent == b.latent);
    TrainOptions parallel;
    parallel.kernel = KernelOptions{4, 4};
    auto c = train(obj, h, parallel);
    CHECK(t::max_relative_error(a.latent, c.latent, 1e-12) <= 1e-12);
}

TEST_CASE("early stop ends training once the gradient ratio is below tolerance") {
    auto inst = t::random_instance(19);
    WeightView w(inst.store, inst.scheme);
    auto h = inst.hyper;
    h.max_iter = 500;
    h.early_stop = true;
    h.early_stop_tol = 1e6;
    auto model = train(Objective{w}, h);
    CHECK(model.iterations == 1);
    h.early_stop = false;
    CHECK(train(Objective{w}, h).iterations == 500);
}

TEST_CASE("invalid hyperparameters are rejected") {
    Hyperparameters h;
    h.d = 0;
    CHECK_THROWS_AS(h.validate(), InputError);
    h = Hyperparameters{};
    h.gamma = 0.0;
    CHECK_THROWS_AS(h.validate(), InputError);
    h = Hyperparameters{};
    h.lambda = -1.0;
    CHECK_THROWS_AS(h.validate(), InputError);
    CHECK_NOTHROW(Hyperparameters{}.validate());
}

TEST_CASE("score_pair is symmetric and in (0, 1)") {
    FactorModel model;
    Hyperparameters h;
    h.d = 4;
    model.latent = initial_factors(6, h);
    for (EntityId i = 0; i < 6; ++i) {
        for (EntityId j = 0; j < 6; ++j) {
            if (i == j) {
                CHECK_THROWS_AS(score_pair(model, i, j), InputError);
                continue;
            }
            const double s = score_pair(model, i, j);
            CHECK(s > 0.0);
            CHECK(s < 1.0);
            CHECK(s == score_pair(model, j, i));
        }
    }
    model.latent.row(2).setZero();
    CHECK(score_pair(model, 2, 4) == 0.5);
}

TEST_CASE("planted structure is recovered on a held-out fold") {
    const auto& s = suite();
    auto plan = make_folds(s.data.observed, 5, 1);
    auto train_store = s.data.observed.without(plan.folds[0]);
    WeightView w(train_store, WeightScheme{});
    Objective obj{w, &s.go, &s.ppi};
    auto model = train(obj, suite_hyper(500));
    CHECK(model.final_loss < model.initial_loss);
    const auto metrics = evaluate_fold(train_store, plan.folds[0], model);
    CHECK(metrics.auc >= 0.90);

    // Mean probability over planted positives beats the mean over true negatives.
    const auto& truth = s.data.clean_positives;
    double pos = 0.0;
    for (const auto& p : truth) {
        pos += score_pair(model, p.first, p.second);
    }
    pos /= static_cast<double>(truth.size());
    double neg = 0.0;
    std::size_t neg_count = 0;
    const auto m = static_cast<EntityId>(model.entity_count());
    for (EntityId i = 0; i < m; ++i) {
        for (EntityId j = i + 1; j < m; ++j) {
            if (!std::binary_search(truth.begin(), truth.end(), PairId{i, j})) {
                neg += score_pair(model, i, j);
                ++neg_count;
            }
        }
    }
    neg /= static_cast<double>(neg_count);
    CHECK(pos > neg);
}

TEST_CASE("a heavier first regularizer lowers its quadratic form") {
    const auto& s = suite();
    WeightView w(s.data.observed, WeightScheme{});
    auto h = suite_hyper(200);
    h.beta = 0.0;
    h.alpha = 0.0;
    auto free = train(Objective{w, &s.go}, h);
    h.alpha = 100.0;
    auto pulled = train(Objective{w, &s.go}, h);
    CHECK(quad_form(s.go, pulled.latent) < quad_form(s.go, free.latent));
}

TEST_CASE("models survive a save and load unchanged") {
    t::TempDir dir("model");
    auto inst = t::random_instance(23);
    WeightView w(inst.store, {WeightKind::loglinear, 12.5});
    auto h = inst.hyper;
    h.max_iter = 5;
    h.early_stop = true;
    auto model = train(Objective{w}, h);
    for (std::size_t i = 0; i < inst.m; ++i) {
        model.entity_names.push_back("gene" + std::to_string(i));
    }
    save_model(dir / "model.bin", model);
    auto back = load_model(dir / "model.bin");
    CHECK(back.latent == model.latent);
    CHECK(back.entity_names == model.entity_names);
    CHECK(back.hyper.d == h.d);
    CHECK(back.hyper.lambda == h.lambda);
    CHECK(back.hyper.alpha == h.alpha);
    CHECK(back.hyper.beta == h.beta);
    CHECK(back.hyper.gamma == h.gamma);
    CHECK(back.hyper.seed == h.seed);
    CHECK(back.hyper.max_iter == h.max_iter);
    CHECK(back.hyper.early_stop == h.early_stop);
    CHECK(back.scheme.kind == WeightKind::loglinear);
    CHECK(back.scheme.c == 12.5);
    CHECK(back.initial_loss == model.initial_loss);
    CHECK(back.final_loss == model.final_loss);
    CHECK(back.iterations == model.iterations);
}

TEST_CASE("loading something that is not a model fails cleanly") {
    t::TempDir dir("badmodel");
    t::spit(dir / "junk.bin", "not a model at all");
    CHECK_THROWS_AS(load_model(dir / "junk.bin"), InputError);
    CHECK_THROWS_AS(load_model(dir / "missing.bin"), InputError);
}
