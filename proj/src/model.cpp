#include "ttf/model.hpp"

#include "ttf/error.hpp"
#include "ttf/rng.hpp"

#include <cmath>
#include <numbers>

namespace ttf {

std::string_view to_string(BackboneKind kind) {
    switch (kind) {
    case BackboneKind::linear: return "linear";
    case BackboneKind::dlinear: return "dlinear";
    case BackboneKind::mixer: return "mixer";
    }
    return "unknown";
}

std::string_view to_string(Activation activation) {
    switch (activation) {
    case Activation::gelu: return "gelu";
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
    case Activation::identity: return "identity";
    }
    return "unknown";
}

BackboneKind parse_backbone_kind(std::string_view name) {
    if (name == "linear") return BackboneKind::linear;
    if (name == "dlinear") return BackboneKind::dlinear;
    if (name == "mixer") return BackboneKind::mixer;
    throw Error(ErrorCode::unknown_backbone, "unknown backbone '" + std::string(name) + "'");
}

Activation parse_activation(std::string_view name) {
    if (name == "gelu") return Activation::gelu;
    if (name == "relu") return Activation::relu;
    if (name == "tanh") return Activation::tanh;
    if (name == "identity") return Activation::identity;
    throw Error(ErrorCode::invalid_config, "unknown activation '" + std::string(name) + "'");
}

double activate(Activation a, double x) {
    switch (a) {
    case Activation::gelu: return 0.5 * x * (1.0 + std::erf(x / std::numbers::sqrt2));
    case Activation::relu: return x > 0.0 ? x : 0.0;
    case Activation::tanh: return std::tanh(x);
    case Activation::identity: return x;
    }
    return x;
}

double activate_derivative(Activation a, double x) {
    switch (a) {
    case Activation::gelu: {
        const double cdf = 0.5 * (1.0 + std::erf(x / std::numbers::sqrt2));
        const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
        return cdf + x * pdf;
    }
    case Activation::relu: return x > 0.0 ? 1.0 : 0.0;
    case Activation::tanh: {
        const double t = std::tanh(x);
        return 1.0 - t * t;
    }
    case Activation::identity: return 1.0;
    }
    return 1.0;
}

void ModelConfig::validate() const {
    spec.validate();
    if (scales.empty() || scales.front() != 1)
        throw Error(ErrorCode::invalid_config, "scales must start with 1 (tower 0 is the raw input)");
    for (std::size_t i = 0; i < scales.size(); ++i) {
        if (scales[i] < 1) throw Error(ErrorCode::invalid_config, "scales must be positive");
        if (i > 0 && scales[i] <= scales[i - 1]) throw Error(ErrorCode::invalid_config, "scales must be strictly increasing");
        if (scales[i] > spec.input_length())
            throw Error(ErrorCode::scale_too_large, "scale " + std::to_string(scales[i]) + " exceeds input length " +
                                                        std::to_string(spec.input_length()));
    }
    if (hparams.dropout < 0.0 || hparams.dropout >= 1.0) throw Error(ErrorCode::invalid_config, "dropout must be in [0, 1)");
    if (hparams.hidden < 1 || hparams.blocks < 0) throw Error(ErrorCode::invalid_config, "invalid mixer hyperparameters");
    if (backbone == BackboneKind::dlinear &&
        (hparams.decomposition_kernel < 1 || hparams.decomposition_kernel > spec.input_length()))
        throw Error(ErrorCode::invalid_config, "decomposition kernel must be in [1, l]");
    if (static_width < 0 || dynamic_width < 0) throw Error(ErrorCode::invalid_config, "covariate widths must be >= 0");
    if (!static_channels.empty() && static_cast<int>(static_channels.size()) != static_width)
        throw Error(ErrorCode::invalid_config, "static_channels size must equal static_width");
    if (fusion_hidden < 0) throw Error(ErrorCode::invalid_config, "fusion_hidden must be >= 1 (or 0 for n)");
}

Matrix positional_encoding(int length, int dim) {
    if (length < 1 || dim < 1) throw Error(ErrorCode::invalid_argument, "positional encoding needs length, dim >= 1");
    Matrix pe(length, dim);
    for (int pos = 0; pos < length; ++pos) {
        for (int c = 0; c < dim; ++c) {
            const int i = c / 2;
            const double angle = pos / std::pow(10000.0, (2.0 * i) / dim);
            pe(pos, c) = (c % 2 == 0) ? std::sin(angle) : std::cos(angle);
        }
    }
    return pe;
}

ScaledWindow scale_window_input(const TrapezoidWindow& window) {
    std::vector<int> zeros(static_cast<std::size_t>(window.spec.k));
    for (int j = 0; j < window.spec.k; ++j) zeros[static_cast<std::size_t>(j)] = window.leading_zeros(j);
    return robust_scale_window(window.input, zeros);
}

namespace {

// Per-tower tensor slots.
constexpr std::size_t kLinW = 0, kLinB = 1;
constexpr std::size_t kTrendW = 0, kTrendB = 1, kRemW = 2, kRemB = 3;
constexpr std::size_t kMixTimeW = 0, kMixTimeB = 1, kMixInW = 2, kMixInB = 3, kMixOutW = 4, kMixOutB = 5;
constexpr std::size_t kMixPerBlock = 6;
// After the backbone tensors:
constexpr std::size_t kCovReadout = 0, kCovStatic = 1, kCovFuture = 2;
// Fusion head:
constexpr std::size_t kFusInW = 0, kFusInB = 1, kFusOutW = 2, kFusOutB = 3;

std::size_t backbone_tensor_count(const ModelConfig& c) {
    switch (c.backbone) {
    case BackboneKind::linear: return 2;
    case BackboneKind::dlinear: return 4;
    case BackboneKind::mixer: return kMixPerBlock * static_cast<std::size_t>(c.hparams.blocks) + 2;
    }
    return 0;
}

Matrix apply_act(Activation a, const Matrix& x) {
    return x.unaryExpr([a](double v) { return activate(a, v); });
}

Matrix act_grad(Activation a, const Matrix& pre, const Matrix& upstream) {
    return upstream.cwiseProduct(pre.unaryExpr([a](double v) { return activate_derivative(a, v); }));
}

// Inverted-dropout mask, empty when inactive.
Matrix dropout_mask(const ForwardOptions& options, double rate, Eigen::Index rows, Eigen::Index cols,
                    std::uint64_t site) {
    if (!options.training || rate <= 0.0) return {};
    Rng rng(derive_seed(options.dropout_seed, site));
    const double keep_scale = 1.0 / (1.0 - rate);
    Matrix mask(rows, cols);
    for (Eigen::Index c = 0; c < cols; ++c)
        for (Eigen::Index r = 0; r < rows; ++r) mask(r, c) = rng.uniform() < rate ? 0.0 : keep_scale;
    return mask;
}

void apply_mask(Matrix& x, const Matrix& mask) {
    if (mask.size() != 0) x = x.cwiseProduct(mask);
}

} // namespace

MtFusionNet::MtFusionNet(ModelConfig config) : config_(std::move(config)) {
    config_.validate();
    build_layout();
    for (std::size_t i = 0; i < params_.size(); ++i) {
        Matrix& v = params_[i].value;
        if (v.size() == 0) continue;
        // Fan-in is stored temporarily in the first element by build_layout.
        const double fan_in = v(0, 0);
        const double bound = 1.0 / std::sqrt(std::max(1.0, fan_in));
        Rng rng(derive_seed(config_.seed, i));
        for (Eigen::Index c = 0; c < v.cols(); ++c)
            for (Eigen::Index r = 0; r < v.rows(); ++r) v(r, c) = rng.uniform(-bound, bound);
    }
}

MtFusionNet::MtFusionNet(ModelConfig config, std::vector<Tensor> parameters) : config_(std::move(config)) {
    config_.validate();
    build_layout();
    if (parameters.size() != params_.size())
        throw Error(ErrorCode::shape_mismatch, "expected " + std::to_string(params_.size()) + " tensors, got " +
                                                   std::to_string(parameters.size()));
    for (std::size_t i = 0; i < params_.size(); ++i) {
        if (parameters[i].name != params_[i].name || parameters[i].value.rows() != params_[i].value.rows() ||
            parameters[i].value.cols() != params_[i].value.cols())
            throw Error(ErrorCode::shape_mismatch, "tensor " + std::to_string(i) + " '" + parameters[i].name +
                                                       "' does not match layout '" + params_[i].name + "'");
    }
    params_ = std::move(parameters);
}

void MtFusionNet::build_layout() {
    const ModelConfig& c = config_;
    const int l = c.spec.input_length(), n = c.spec.n, k = c.spec.k;
    const int width = k + c.dynamic_width;
    const int hf = c.effective_fusion_hidden();

    params_.clear();
    tower_begin_.clear();
    // Fan-in goes into element (0,0) until the constructor overwrites it.
    auto add = [&](std::string name, int rows, int cols, int fan_in) {
        Matrix m = Matrix::Zero(rows, cols);
        if (m.size() != 0) m(0, 0) = fan_in;
        params_.push_back({std::move(name), std::move(m)});
    };

    for (int q = 0; q < c.tower_count(); ++q) {
        tower_begin_.push_back(params_.size());
        const std::string t = "tower" + std::to_string(q) + ".";
        switch (c.backbone) {
        case BackboneKind::linear:
            add(t + "linear.weight", n, l, l);
            add(t + "linear.bias", n, 1, l);
            break;
        case BackboneKind::dlinear:
            add(t + "trend.weight", n, l, l);
            add(t + "trend.bias", n, 1, l);
            add(t + "remainder.weight", n, l, l);
            add(t + "remainder.bias", n, 1, l);
            break;
        case BackboneKind::mixer:
            for (int b = 0; b < c.hparams.blocks; ++b) {
                const std::string blk = t + "block" + std::to_string(b) + ".";
                add(blk + "time.weight", l, l, l);
                add(blk + "time.bias", l, 1, l);
                add(blk + "feature_in.weight", c.hparams.hidden, width, width);
                add(blk + "feature_in.bias", c.hparams.hidden, 1, width);
                add(blk + "feature_out.weight", width, c.hparams.hidden, c.hparams.hidden);
                add(blk + "feature_out.bias", width, 1, c.hparams.hidden);
            }
            add(t + "projection.weight", n, l, l);
            add(t + "projection.bias", n, 1, l);
            break;
        }
        add(t + "covariate.dynamic_readout", c.dynamic_width, k, c.dynamic_width);
        add(t + "covariate.static_embedding", n, c.static_width, c.static_width);
        add(t + "covariate.future", c.dynamic_width, k, c.dynamic_width);
    }
    tower_begin_.push_back(params_.size());
    const int fused = c.tower_count() * n;
    add("fusion.in.weight", hf, fused, fused);
    add("fusion.in.bias", hf, 1, fused);
    add("fusion.out.weight", n, hf, hf);
    add("fusion.out.bias", n, 1, hf);
}

std::size_t MtFusionNet::parameter_count() const {
    std::size_t total = 0;
    for (const auto& t : params_) total += static_cast<std::size_t>(t.value.size());
    return total;
}

std::pair<std::size_t, std::size_t> MtFusionNet::tower_tensor_range(int q) const {
    if (q < 0 || q >= tower_count()) throw Error(ErrorCode::out_of_range, "tower index out of range");
    return {tower_begin_[static_cast<std::size_t>(q)], tower_begin_[static_cast<std::size_t>(q) + 1]};
}

std::vector<Matrix> MtFusionNet::zero_gradients() const {
    std::vector<Matrix> grads;
    grads.reserve(params_.size());
    for (const auto& t : params_) grads.push_back(Matrix::Zero(t.value.rows(), t.value.cols()));
    return grads;
}

void MtFusionNet::check_shapes(const Matrix& scaled_input, const CovariateBundle& cov) const {
    const auto& s = config_.spec;
    const int l = s.input_length();
    if (scaled_input.rows() != l || scaled_input.cols() != s.k)
        throw Error(ErrorCode::shape_mismatch, "input is " + std::to_string(scaled_input.rows()) + "x" +
                                                   std::to_string(scaled_input.cols()) + ", model expects " +
                                                   std::to_string(l) + "x" + std::to_string(s.k));
    if (cov.static_cov.size() != config_.static_width || cov.dyn_past.rows() != l ||
        cov.dyn_past.cols() != config_.dynamic_width || cov.dyn_future.rows() != s.n ||
        cov.dyn_future.cols() != config_.dynamic_width)
        throw Error(ErrorCode::shape_mismatch, "covariate bundle does not match model covariate widths");
}

Matrix MtFusionNet::tower_forward(int q, const Matrix& smoothed_input, const CovariateBundle& cov,
                                  const ForwardOptions& options, TowerTrace* trace) const {
    TowerTrace local;
    TowerTrace& tr = trace ? *trace : local;
    const auto [base, end] = tower_tensor_range(q);
    (void)end;
    const int k = config_.spec.k;
    const int cd = config_.dynamic_width;
    const int l = config_.spec.input_length();
    if (smoothed_input.rows() != l || smoothed_input.cols() != k)
        throw Error(ErrorCode::shape_mismatch, "tower input shape mismatch");

    // Dynamic past covariates ride along as extra columns, unsmoothed.
    tr.backbone_input.resize(l, k + cd);
    tr.backbone_input.leftCols(k) = smoothed_input;
    tr.backbone_input.rightCols(cd) = cov.dyn_past;

    const Activation act = config_.hparams.activation;
    std::size_t cov_base = base;
    switch (config_.backbone) {
    case BackboneKind::linear:
        tr.backbone_output = p(base + kLinW) * tr.backbone_input;
        tr.backbone_output.colwise() += p(base + kLinB).col(0);
        cov_base = base + 2;
        break;
    case BackboneKind::dlinear: {
        tr.trend = moving_average(tr.backbone_input, config_.hparams.decomposition_kernel);
        tr.backbone_output = p(base + kTrendW) * tr.trend + p(base + kRemW) * (tr.backbone_input - tr.trend);
        tr.backbone_output.colwise() += p(base + kTrendB).col(0) + p(base + kRemB).col(0);
        cov_base = base + 4;
        break;
    }
    case BackboneKind::mixer: {
        Matrix z = tr.backbone_input;
        tr.blocks.assign(static_cast<std::size_t>(config_.hparams.blocks), {});
        for (int b = 0; b < config_.hparams.blocks; ++b) {
            const std::size_t o = base + kMixPerBlock * static_cast<std::size_t>(b);
            MixerBlockTrace& bt = tr.blocks[static_cast<std::size_t>(b)];
            const std::uint64_t site = (static_cast<std::uint64_t>(q) << 20) | (static_cast<std::uint64_t>(b) << 2);
            bt.input = z;
            // Time mixing: shared across columns.
            bt.time_pre = p(o + kMixTimeW) * z;
            bt.time_pre.colwise() += p(o + kMixTimeB).col(0);
            Matrix a = apply_act(act, bt.time_pre);
            bt.time_mask = dropout_mask(options, config_.hparams.dropout, a.rows(), a.cols(), site);
            apply_mask(a, bt.time_mask);
            bt.mid = z + a;
            // Feature mixing: shared across time.
            bt.feat_pre = bt.mid * p(o + kMixInW).transpose();
            bt.feat_pre.rowwise() += p(o + kMixInB).col(0).transpose();
            bt.feat_act = apply_act(act, bt.feat_pre);
            bt.feat_mask = dropout_mask(options, config_.hparams.dropout, bt.feat_act.rows(), bt.feat_act.cols(),
                                        site | 1);
            apply_mask(bt.feat_act, bt.feat_mask);
            Matrix f = bt.feat_act * p(o + kMixOutW).transpose();
            f.rowwise() += p(o + kMixOutB).col(0).transpose();
            z = bt.mid + f;
        }
        tr.mixer_output = z;
        const std::size_t proj = base + kMixPerBlock * static_cast<std::size_t>(config_.hparams.blocks);
        tr.backbone_output = p(proj) * z;
        tr.backbone_output.colwise() += p(proj + 1).col(0);
        cov_base = proj + 2;
        break;
    }
    }

    tr.output = tr.backbone_output.leftCols(k);
    if (cd > 0) {
        tr.output += tr.backbone_output.rightCols(cd) * p(cov_base + kCovReadout);
        tr.output += cov.dyn_future * p(cov_base + kCovFuture);
    }
    if (config_.static_width > 0) tr.output.colwise() += p(cov_base + kCovStatic) * cov.static_cov;
    return tr.output;
}

Matrix MtFusionNet::forward_scaled(const Matrix& scaled_input, const CovariateBundle& cov,
                                   const ForwardOptions& options, ForwardTrace* trace) const {
    check_shapes(scaled_input, cov);
    ForwardTrace local;
    ForwardTrace& tr = trace ? *trace : local;
    const int n = config_.spec.n, k = config_.spec.k;
    const int towers = tower_count();

    tr.towers.assign(static_cast<std::size_t>(towers), {});
    tr.static_cov = cov.static_cov;
    tr.dyn_future = cov.dyn_future;
    tr.fused_input.resize(static_cast<Eigen::Index>(towers) * n, k);
    const Matrix pe = config_.positional_encoding ? positional_encoding(n, k) : Matrix::Zero(n, k);

    for (int q = 0; q < towers; ++q) {
        const Matrix smoothed = moving_average(scaled_input, config_.scales[static_cast<std::size_t>(q)]);
        Matrix out = tower_forward(q, smoothed, cov, options, &tr.towers[static_cast<std::size_t>(q)]);
        tr.fused_input.middleRows(static_cast<Eigen::Index>(q) * n, n) = out + pe;
    }

    const std::size_t f = tower_begin_.back();
    tr.fusion_pre = p(f + kFusInW) * tr.fused_input;
    tr.fusion_pre.colwise() += p(f + kFusInB).col(0);
    tr.fusion_act = apply_act(config_.hparams.activation, tr.fusion_pre);
    tr.fusion_mask = dropout_mask(options, config_.hparams.dropout, tr.fusion_act.rows(), tr.fusion_act.cols(),
                                  0xFFFFFFFFULL << 24);
    apply_mask(tr.fusion_act, tr.fusion_mask);
    tr.output = p(f + kFusOutW) * tr.fusion_act;
    tr.output.colwise() += p(f + kFusOutB).col(0);
    return tr.output;
}

Matrix MtFusionNet::forward(const TrapezoidWindow& window, const CovariateBundle& cov, bool training_mode,
                            std::uint64_t dropout_seed) const {
    if (window.spec != config_.spec) throw Error(ErrorCode::shape_mismatch, "window spec does not match model spec");
    const ScaledWindow scaled = scale_window_input(window);
    const Matrix out = forward_scaled(scaled.input, cov, ForwardOptions{training_mode, dropout_seed});
    return invert_robust_scale(out, scaled.params);
}

void MtFusionNet::tower_backward(int q, const TowerTrace& tr, const Vector& static_cov, const Matrix& dyn_future,
                                 const Matrix& d_out, std::vector<Matrix>& grads) const {
    const std::size_t base = tower_begin_[static_cast<std::size_t>(q)];
    const int k = config_.spec.k;
    const int cd = config_.dynamic_width;
    const Activation act = config_.hparams.activation;
    const std::size_t cov_base = base + backbone_tensor_count(config_);

    Matrix d_bb(d_out.rows(), k + cd);
    d_bb.leftCols(k) = d_out;
    if (cd > 0) {
        d_bb.rightCols(cd) = d_out * p(cov_base + kCovReadout).transpose();
        grads[cov_base + kCovReadout] += tr.backbone_output.rightCols(cd).transpose() * d_out;
        grads[cov_base + kCovFuture] += dyn_future.transpose() * d_out;
    }
    if (config_.static_width > 0)
        grads[cov_base + kCovStatic] += d_out.rowwise().sum() * static_cov.transpose();

    switch (config_.backbone) {
    case BackboneKind::linear:
        grads[base + kLinW] += d_bb * tr.backbone_input.transpose();
        grads[base + kLinB] += d_bb.rowwise().sum();
        break;
    case BackboneKind::dlinear:
        grads[base + kTrendW] += d_bb * tr.trend.transpose();
        grads[base + kTrendB] += d_bb.rowwise().sum();
        grads[base + kRemW] += d_bb * (tr.backbone_input - tr.trend).transpose();
        grads[base + kRemB] += d_bb.rowwise().sum();
        break;
    case BackboneKind::mixer: {
        const std::size_t proj = base + kMixPerBlock * static_cast<std::size_t>(config_.hparams.blocks);
        grads[proj] += d_bb * tr.mixer_output.transpose();
        grads[proj + 1] += d_bb.rowwise().sum();
        Matrix dz = p(proj).transpose() * d_bb;
        for (int b = config_.hparams.blocks - 1; b >= 0; --b) {
            const std::size_t o = base + kMixPerBlock * static_cast<std::size_t>(b);
            const MixerBlockTrace& bt = tr.blocks[static_cast<std::size_t>(b)];
            // Feature-mixing residual branch.
            grads[o + kMixOutW] += dz.transpose() * bt.feat_act;
            grads[o + kMixOutB] += dz.colwise().sum().transpose();
            Matrix d_act = dz * p(o + kMixOutW);
            apply_mask(d_act, bt.feat_mask);
            const Matrix d_feat_pre = act_grad(act, bt.feat_pre, d_act);
            grads[o + kMixInW] += d_feat_pre.transpose() * bt.mid;
            grads[o + kMixInB] += d_feat_pre.colwise().sum().transpose();
            Matrix d_mid = dz + d_feat_pre * p(o + kMixInW);
            // Time-mixing residual branch.
            Matrix d_time = d_mid;
            apply_mask(d_time, bt.time_mask);
            const Matrix d_time_pre = act_grad(act, bt.time_pre, d_time);
            grads[o + kMixTimeW] += d_time_pre * bt.input.transpose();
            grads[o + kMixTimeB] += d_time_pre.rowwise().sum();
            dz = d_mid + p(o + kMixTimeW).transpose() * d_time_pre;
        }
        break;
    }
    }
}

void MtFusionNet::backward(const ForwardTrace& tr, const Matrix& grad_output, std::vector<Matrix>& grads) const {
    if (grads.size() != params_.size()) throw Error(ErrorCode::shape_mismatch, "gradient list does not match parameters");
    if (grad_output.rows() != tr.output.rows() || grad_output.cols() != tr.output.cols())
        throw Error(ErrorCode::shape_mismatch, "output gradient shape mismatch");
    const std::size_t f = tower_begin_.back();
    const int n = config_.spec.n;

    grads[f + kFusOutW] += grad_output * tr.fusion_act.transpose();
    grads[f + kFusOutB] += grad_output.rowwise().sum();
    Matrix d_act = p(f + kFusOutW).transpose() * grad_output;
    apply_mask(d_act, tr.fusion_mask);
    const Matrix d_pre = act_grad(config_.hparams.activation, tr.fusion_pre, d_act);
    grads[f + kFusInW] += d_pre * tr.fused_input.transpose();
    grads[f + kFusInB] += d_pre.rowwise().sum();
    const Matrix d_fused = p(f + kFusInW).transpose() * d_pre;

    for (int q = 0; q < tower_count(); ++q) {
        tower_backward(q, tr.towers[static_cast<std::size_t>(q)], tr.static_cov, tr.dyn_future,
                       d_fused.middleRows(static_cast<Eigen::Index>(q) * n, n), grads);
    }
}

} // namespace ttf
