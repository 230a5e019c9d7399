#include "model_util.hpp"

#include "ttf/error.hpp"
#include "ttf/serialize.hpp"
#include "ttf/training.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <sstream>

using namespace ttf;
using namespace ttf::testing;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode::internal;
}

Matrix random_matrix(Rng& rng, int r, int c) {
    Matrix m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
    return m;
}

std::vector<Sample> window_series(const WindowSpec& spec, int count, int c_sta, int c_dyn) {
    std::vector<Sample> out;
    for (int i = 0; i < count; ++i) {
        TrapezoidWindow w = random_window(spec, static_cast<std::uint64_t>(i) + 1);
        w.start_day = Day{19000 + i};
        out.push_back({w, random_covariates(spec, c_sta, c_dyn, static_cast<std::uint64_t>(i) + 50)});
    }
    return out;
}

} // namespace

TEST(Loss, UtilitarianExamples) {
    Matrix pred(2, 3), target(2, 3);
    pred << 9, -4, 1, //
        7, 2, 3;
    target << 0, 0, 0, //
        0, 0, 1;
    EXPECT_EQ(utilitarian_loss(pred, target), 2.5);
    Matrix same = target;
    same.col(0) << 100, -100;
    same.col(1) << 5, 6;
    EXPECT_EQ(utilitarian_loss(same, target), 0.0);
    EXPECT_EQ(code_of([&] { utilitarian_loss(pred, Matrix::Zero(3, 3)); }), ErrorCode::shape_mismatch);
}

TEST(Loss, MseExamples) {
    EXPECT_EQ(mse_loss(Matrix::Constant(1, 1, 2.0), Matrix::Zero(1, 1)), 4.0);
    EXPECT_EQ(mse_loss(Matrix::Ones(2, 2), Matrix::Zero(2, 2)), 1.0);
    Matrix a = Matrix::Random(3, 3);
    EXPECT_EQ(mse_loss(a, a), 0.0);
}

TEST(Loss, UtilitarianIgnoresEarlierColumns) {
    Rng rng(1);
    for (int t = 0; t < 200; ++t) {
        const int n = static_cast<int>(rng.uniform_int(1, 8)), k = static_cast<int>(rng.uniform_int(1, 6));
        const Matrix pred = random_matrix(rng, n, k), target = random_matrix(rng, n, k);
        const double base = utilitarian_loss(pred, target);
        EXPECT_GE(base, 0.0);
        Matrix perturbed = pred;
        perturbed.leftCols(k - 1) = random_matrix(rng, n, k - 1) * 1e6;
        EXPECT_EQ(utilitarian_loss(perturbed, target), base);
        if (k == 1) EXPECT_NEAR(base, mse_loss(pred, target), 1e-15);
        const Matrix g = loss_gradient(LossKind::utilitarian, pred, target);
        EXPECT_TRUE(g.leftCols(k - 1).isZero(0.0));
    }
}

TEST(Loss, GradientMatchesFiniteDifference) {
    Rng rng(2);
    const Matrix pred = random_matrix(rng, 4, 3), target = random_matrix(rng, 4, 3);
    for (auto kind : {LossKind::utilitarian, LossKind::mse}) {
        const Matrix g = loss_gradient(kind, pred, target);
        for (Eigen::Index i = 0; i < pred.size(); ++i) {
            Matrix p = pred, q = pred;
            p.data()[i] += 1e-6;
            q.data()[i] -= 1e-6;
            EXPECT_NEAR(g.data()[i], (compute_loss(kind, p, target) - compute_loss(kind, q, target)) / 2e-6, 1e-8);
        }
    }
}

TEST(Adam, MatchesScalarReference) {
    TrainConfig cfg;
    cfg.learning_rate = 0.05;
    std::vector<Tensor> params{{"x", Matrix::Constant(1, 1, 3.0)}};
    Adam adam(cfg, params);
    double x = 3.0, m = 0.0, v = 0.0;
    for (int t = 1; t <= 100; ++t) {
        const double g = 2.0 * (params[0].value(0, 0) - 1.0);
        adam.step(params, {Matrix::Constant(1, 1, g)});
        const double gr = 2.0 * (x - 1.0);
        m = 0.9 * m + 0.1 * gr;
        v = 0.999 * v + 0.001 * gr * gr;
        const double mh = m / (1.0 - std::pow(0.9, t)), vh = v / (1.0 - std::pow(0.999, t));
        x -= 0.05 * mh / (std::sqrt(vh) + 1e-8);
        EXPECT_NEAR(params[0].value(0, 0), x, 1e-12);
    }
    EXPECT_EQ(adam.steps_taken(), 100);
}

TEST(TrainConfig, JsonRoundTripAndValidation) {
    TrainConfig c;
    c.loss_kind = LossKind::mse;
    c.learning_rate = 0.01;
    c.seed = 42;
    EXPECT_EQ(train_config_from_json(to_json(c)), c);
    auto j = to_json(c);
    j["momentum"] = 0.9;
    EXPECT_EQ(code_of([&] { train_config_from_json(j); }), ErrorCode::invalid_config);
    j = to_json(c);
    j["val_fraction"] = 1.0;
    EXPECT_EQ(code_of([&] { train_config_from_json(j); }), ErrorCode::invalid_config);
    EXPECT_EQ(code_of([] { parse_loss_kind("huber"); }), ErrorCode::invalid_config);
}

TEST(TemporalSplit, NewestAnchorsValidateWithoutOverlap) {
    const WindowSpec spec{4, 6, 3, 2};
    const auto samples = window_series(spec, 40, 0, 0);
    const TemporalSplit split = temporal_split(samples, 0.1);
    EXPECT_EQ(split.val.size(), 4u);
    Day val_start = samples[split.val.front()].window.start_day;
    for (std::size_t i : split.val) {
        val_start = std::min(val_start, samples[i].window.start_day);
        EXPECT_GE(i, 36u);
    }
    for (std::size_t i : split.train) EXPECT_LT(samples[i].window.target_end(), val_start);
    EXPECT_EQ(split.train.size() + split.val.size() + split.excluded, samples.size());
    EXPECT_GT(split.excluded, 0u);
    // Single window: everything trains.
    const TemporalSplit one = temporal_split(std::span(samples).first(1), 0.1);
    EXPECT_EQ(one.train.size(), 1u);
    EXPECT_TRUE(one.val.empty());
}

TEST(Train, ZeroEpochsReturnsModelUnchanged) {
    const ModelConfig c = tiny_config(BackboneKind::linear, {1}, 0, 0);
    const MtFusionNet model(c);
    TrainConfig cfg;
    cfg.max_epochs = 0;
    const auto samples = window_series(c.spec, 3, 0, 0);
    const TrainResult r = train(model, samples, cfg);
    EXPECT_TRUE(r.report.epochs.empty());
    EXPECT_EQ(parameter_hash(r.model), parameter_hash(model));
}

TEST(Train, RejectsEmptyAndNonFinite) {
    const ModelConfig c = tiny_config(BackboneKind::linear, {1}, 0, 0);
    TrainConfig cfg;
    EXPECT_EQ(code_of([&] { train(MtFusionNet(c), {}, cfg); }), ErrorCode::empty_dataset);
    auto samples = window_series(c.spec, 3, 0, 0);
    samples[1].window.target(0, 2) = std::numeric_limits<double>::quiet_NaN();
    const ErrorCode code = code_of([&] { train(MtFusionNet(c), samples, cfg); });
    EXPECT_TRUE(code == ErrorCode::non_finite_input || code == ErrorCode::divergence_detected);
}

TEST(Train, SameSeedIsBitIdentical) {
    ModelConfig c = tiny_config(BackboneKind::mixer, {1, 3}, 2, 3);
    c.hparams.dropout = 0.1;
    TrainConfig cfg;
    cfg.max_epochs = 3;
    cfg.batch_size = 4;
    cfg.seed = 7;
    const auto samples = window_series(c.spec, 30, 2, 3);
    const TrainResult a = train(MtFusionNet(c), samples, cfg);
    const TrainResult b = train(MtFusionNet(c), samples, cfg);
    EXPECT_TRUE(a.report.same_outcome(b.report));
    EXPECT_EQ(a.report.parameter_hash, b.report.parameter_hash);
    EXPECT_EQ(serialize_model(a.model), serialize_model(b.model));
    cfg.seed = 8;
    const TrainResult d = train(MtFusionNet(c), samples, cfg);
    EXPECT_NE(d.report.parameter_hash, a.report.parameter_hash);

    std::ostringstream csv;
    write_epoch_csv(a.report, csv);
    EXPECT_EQ(csv.str().rfind("epoch,train_loss,val_loss\n", 0), 0u);
    EXPECT_EQ(to_json(a.report).at("epochs").size(), a.report.epochs.size());
}

TEST(Train, BestEpochChosenByValidationLoss) {
    const ModelConfig c = tiny_config(BackboneKind::linear, {1, 3}, 0, 0);
    TrainConfig cfg;
    cfg.max_epochs = 6;
    cfg.learning_rate = 0.05;
    const auto samples = window_series(c.spec, 40, 0, 0);
    const TrainResult r = train(MtFusionNet(c), samples, cfg);
    ASSERT_FALSE(r.report.epochs.empty());
    double best = std::numeric_limits<double>::infinity();
    for (const auto& e : r.report.epochs) best = std::min(best, e.val_loss);
    EXPECT_EQ(r.report.epochs[static_cast<std::size_t>(r.report.chosen_epoch)].val_loss, best);
    EXPECT_EQ(r.report.parameter_hash, parameter_hash(r.model));
}

TEST(Train, MemorizesSingleWindow) {
    for (auto kind : {BackboneKind::linear, BackboneKind::dlinear, BackboneKind::mixer}) {
        const ModelConfig c = tiny_config(kind, {1, 3}, 0, 0);
        TrainConfig cfg;
        cfg.max_epochs = 200;
        cfg.patience = 200;
        cfg.batch_size = 1;
        cfg.learning_rate = 1e-2;
        const auto samples = window_series(c.spec, 1, 0, 0);
        const TrainResult r = train(MtFusionNet(c), samples, cfg);
        ASSERT_EQ(r.report.epochs.size(), 200u);
        EXPECT_LE(r.report.epochs.back().train_loss, 0.1 * r.report.epochs.front().train_loss) << to_string(kind);
    }
}

TEST(GradCheck, AllBackbones) {
    for (auto kind : {BackboneKind::linear, BackboneKind::dlinear, BackboneKind::mixer})
        for (auto loss : {LossKind::utilitarian, LossKind::mse}) {
            const ModelConfig c = tiny_config(kind, {1, 3}, 2, 3);
            const MtFusionNet model(c);
            const GradCheckResult r =
                grad_check(model, random_window(c.spec, 12), random_covariates(c.spec, 2, 3, 13), loss);
            EXPECT_LT(r.max_relative_error, kind == BackboneKind::linear ? 1e-6 : 1e-4) << to_string(kind);
            EXPECT_FALSE(r.per_tensor.empty());
        }
}

TEST(GradCheck, NoCovariatesSingleTower) {
    const ModelConfig c = tiny_config(BackboneKind::mixer, {1}, 0, 0);
    const MtFusionNet model(c);
    const GradCheckResult r =
        grad_check(model, random_window(c.spec, 1), empty_covariates(c.spec), LossKind::utilitarian);
    EXPECT_LT(r.max_relative_error, 1e-4);
    for (const auto& [name, err] : r.per_tensor) EXPECT_EQ(name.find("covariate"), std::string::npos);
}
