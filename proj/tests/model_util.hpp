#pragma once

#include "ttf/covariates.hpp"
#include "ttf/model.hpp"
#include "ttf/rng.hpp"
#include "ttf/trapezoid.hpp"

namespace ttf::testing {

// Positive random window with the trapezoid's zero prefix.
inline TrapezoidWindow random_window(const WindowSpec& spec, std::uint64_t seed, bool with_target = true) {
    Rng rng(seed);
    TrapezoidWindow w;
    w.channel = ChannelId{"c0"};
    w.start_day = Day{19000};
    w.spec = spec;
    const int l = spec.input_length();
    w.input = Matrix::Zero(l, spec.k);
    for (int j = 0; j < spec.k; ++j)
        for (int p = spec.s * j; p < l; ++p) w.input(p, j) = rng.uniform(0.5, 3.0) / (1.0 + 0.2 * (p - spec.s * j));
    if (with_target) {
        w.target = Matrix(spec.n, spec.k);
        for (Eigen::Index i = 0; i < w.target.size(); ++i) w.target.data()[i] = rng.uniform(0.1, 1.0);
    }
    w.user_counts.assign(static_cast<std::size_t>(spec.k), 100);
    return w;
}

inline CovariateBundle random_covariates(const WindowSpec& spec, int c_sta, int c_dyn, std::uint64_t seed) {
    Rng rng(seed);
    CovariateBundle cov;
    cov.static_cov = Vector::Zero(c_sta);
    if (c_sta > 0) cov.static_cov(static_cast<Eigen::Index>(rng.uniform_int(0, c_sta - 1))) = 1.0;
    cov.dyn_past = Matrix(spec.input_length(), c_dyn);
    cov.dyn_future = Matrix(spec.n, c_dyn);
    for (Eigen::Index i = 0; i < cov.dyn_past.size(); ++i) cov.dyn_past.data()[i] = rng.uniform(-1.0, 1.0);
    for (Eigen::Index i = 0; i < cov.dyn_future.size(); ++i) cov.dyn_future.data()[i] = rng.uniform(-1.0, 1.0);
    return cov;
}

inline ModelConfig tiny_config(BackboneKind kind, std::vector<int> scales, int c_sta, int c_dyn) {
    ModelConfig c;
    c.spec = WindowSpec{4, 6, 3, 2}; // l = 8
    c.scales = std::move(scales);
    c.backbone = kind;
    c.hparams.hidden = 5;
    c.hparams.blocks = 2;
    c.hparams.dropout = 0.0;
    c.hparams.decomposition_kernel = 3;
    c.static_width = c_sta;
    c.dynamic_width = c_dyn;
    c.fusion_hidden = 7;
    c.seed = 99;
    return c;
}

} // namespace ttf::testing
