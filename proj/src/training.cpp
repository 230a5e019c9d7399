#include "ttf/training.hpp"

#include "ttf/error.hpp"
#include "ttf/rng.hpp"
#include "ttf/serialize.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>
#include <set>

namespace ttf {

using nlohmann::json;

std::string_view to_string(LossKind kind) { return kind == LossKind::utilitarian ? "utilitarian" : "mse"; }

LossKind parse_loss_kind(std::string_view name) {
    if (name == "utilitarian") return LossKind::utilitarian;
    if (name == "mse") return LossKind::mse;
    throw Error(ErrorCode::invalid_config, "unknown loss kind '" + std::string(name) + "'");
}

namespace {

void require_same_shape(const Matrix& pred, const Matrix& target) {
    if (pred.rows() != target.rows() || pred.cols() != target.cols() || pred.size() == 0)
        throw Error(ErrorCode::shape_mismatch, "prediction " + std::to_string(pred.rows()) + "x" +
                                                   std::to_string(pred.cols()) + " vs target " +
                                                   std::to_string(target.rows()) + "x" + std::to_string(target.cols()));
}

bool all_finite(const Matrix& m) { return m.allFinite(); }

} // namespace

double utilitarian_loss(const Matrix& pred, const Matrix& target) {
    require_same_shape(pred, target);
    const Eigen::Index last = pred.cols() - 1;
    return (pred.col(last) - target.col(last)).squaredNorm() / static_cast<double>(pred.rows());
}

double mse_loss(const Matrix& pred, const Matrix& target) {
    require_same_shape(pred, target);
    return (pred - target).squaredNorm() / static_cast<double>(pred.size());
}

double compute_loss(LossKind kind, const Matrix& pred, const Matrix& target) {
    return kind == LossKind::utilitarian ? utilitarian_loss(pred, target) : mse_loss(pred, target);
}

Matrix loss_gradient(LossKind kind, const Matrix& pred, const Matrix& target) {
    require_same_shape(pred, target);
    if (kind == LossKind::mse) return 2.0 * (pred - target) / static_cast<double>(pred.size());
    Matrix g = Matrix::Zero(pred.rows(), pred.cols());
    const Eigen::Index last = pred.cols() - 1;
    g.col(last) = 2.0 * (pred.col(last) - target.col(last)) / static_cast<double>(pred.rows());
    return g;
}

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) throw Error(ErrorCode::invalid_config, "learning_rate must be positive");
    if (batch_size < 1) throw Error(ErrorCode::invalid_config, "batch_size must be positive");
    if (max_epochs < 0) throw Error(ErrorCode::invalid_config, "max_epochs must be >= 0");
    if (patience < 1) throw Error(ErrorCode::invalid_config, "patience must be positive");
    if (optimizer != "adam") throw Error(ErrorCode::invalid_config, "only the adam optimizer is supported");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0) || !(epsilon > 0.0))
        throw Error(ErrorCode::invalid_config, "invalid adam coefficients");
    if (!(val_fraction > 0.0 && val_fraction < 1.0)) throw Error(ErrorCode::invalid_config, "val_fraction must be in (0, 1)");
}

json to_json(const TrainConfig& c) {
    return json{{"loss_kind", std::string(to_string(c.loss_kind))},
                {"learning_rate", c.learning_rate},
                {"batch_size", c.batch_size},
                {"max_epochs", c.max_epochs},
                {"patience", c.patience},
                {"optimizer", c.optimizer},
                {"beta1", c.beta1},
                {"beta2", c.beta2},
                {"epsilon", c.epsilon},
                {"val_fraction", c.val_fraction},
                {"seed", c.seed}};
}

TrainConfig train_config_from_json(const json& j) {
    static const std::set<std::string> known{"loss_kind", "learning_rate", "batch_size", "max_epochs",
                                             "patience",  "optimizer",     "beta1",      "beta2",
                                             "epsilon",   "val_fraction",  "seed"};
    if (!j.is_object()) throw Error(ErrorCode::invalid_config, "train config must be an object");
    for (const auto& [key, _] : j.items())
        if (!known.count(key)) throw Error(ErrorCode::invalid_config, "unknown key '" + key + "' in train config");
    TrainConfig c;
    try {
        if (j.contains("loss_kind")) c.loss_kind = parse_loss_kind(j.at("loss_kind").get<std::string>());
        c.learning_rate = j.value("learning_rate", c.learning_rate);
        c.batch_size = j.value("batch_size", c.batch_size);
        c.max_epochs = j.value("max_epochs", c.max_epochs);
        c.patience = j.value("patience", c.patience);
        c.optimizer = j.value("optimizer", c.optimizer);
        c.beta1 = j.value("beta1", c.beta1);
        c.beta2 = j.value("beta2", c.beta2);
        c.epsilon = j.value("epsilon", c.epsilon);
        c.val_fraction = j.value("val_fraction", c.val_fraction);
        c.seed = j.value("seed", c.seed);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::invalid_config, std::string("bad train config: ") + e.what());
    }
    c.validate();
    return c;
}

Adam::Adam(const TrainConfig& config, const std::vector<Tensor>& params)
    : lr_(config.learning_rate), beta1_(config.beta1), beta2_(config.beta2), epsilon_(config.epsilon) {
    for (const auto& t : params) {
        m_.push_back(Matrix::Zero(t.value.rows(), t.value.cols()));
        v_.push_back(Matrix::Zero(t.value.rows(), t.value.cols()));
    }
}

void Adam::step(std::vector<Tensor>& params, const std::vector<Matrix>& grads) {
    if (params.size() != m_.size() || grads.size() != m_.size())
        throw Error(ErrorCode::shape_mismatch, "optimizer state does not match parameters");
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        Matrix& w = params[i].value;
        for (Eigen::Index idx = 0; idx < w.size(); ++idx) {
            const double g = grads[i].data()[idx];
            double& m = m_[i].data()[idx];
            double& v = v_[i].data()[idx];
            m = beta1_ * m + (1.0 - beta1_) * g;
            v = beta2_ * v + (1.0 - beta2_) * g * g;
            const double m_hat = m / c1;
            const double v_hat = v / c2;
            w.data()[idx] -= lr_ * m_hat / (std::sqrt(v_hat) + epsilon_);
        }
    }
}

bool TrainReport::same_outcome(const TrainReport& o) const {
    if (epochs.size() != o.epochs.size()) return false;
    for (std::size_t i = 0; i < epochs.size(); ++i) {
        if (epochs[i].epoch != o.epochs[i].epoch || epochs[i].train_loss != o.epochs[i].train_loss ||
            epochs[i].val_loss != o.epochs[i].val_loss)
            return false;
    }
    return chosen_epoch == o.chosen_epoch && parameter_hash == o.parameter_hash && train_windows == o.train_windows &&
           val_windows == o.val_windows && excluded_windows == o.excluded_windows && early_stopped == o.early_stopped;
}

json to_json(const TrainReport& r) {
    json epochs = json::array();
    for (const auto& e : r.epochs) epochs.push_back({{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"val_loss", e.val_loss}});
    return json{{"epochs", epochs},
                {"chosen_epoch", r.chosen_epoch},
                {"wall_seconds", r.wall_seconds},
                {"parameter_hash", r.parameter_hash},
                {"train_windows", r.train_windows},
                {"val_windows", r.val_windows},
                {"excluded_windows", r.excluded_windows},
                {"early_stopped", r.early_stopped}};
}

void write_epoch_csv(const TrainReport& report, std::ostream& out) {
    out << "epoch,train_loss,val_loss\n";
    for (const auto& e : report.epochs)
        out << e.epoch << ',' << format_real(e.train_loss) << ',' << format_real(e.val_loss) << '\n';
}

TemporalSplit temporal_split(std::span<const Sample> samples, double val_fraction) {
    std::map<ChannelId, std::vector<std::size_t>> by_channel;
    for (std::size_t i = 0; i < samples.size(); ++i) by_channel[samples[i].window.channel].push_back(i);

    TemporalSplit split;
    for (auto& [channel, idx] : by_channel) {
        std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
            return samples[a].window.anchor() < samples[b].window.anchor();
        });
        const std::size_t count = idx.size();
        std::size_t n_val = 0;
        if (count >= 2)
            n_val = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(val_fraction * static_cast<double>(count))));
        const std::size_t n_fit = count - n_val;
        if (n_val == 0) {
            split.train.insert(split.train.end(), idx.begin(), idx.end());
            continue;
        }
        Day val_input_start = samples[idx[n_fit]].window.start_day;
        for (std::size_t i = n_fit; i < count; ++i) {
            val_input_start = std::min(val_input_start, samples[idx[i]].window.start_day);
            split.val.push_back(idx[i]);
        }
        for (std::size_t i = 0; i < n_fit; ++i) {
            if (samples[idx[i]].window.target_end() < val_input_start)
                split.train.push_back(idx[i]);
            else
                ++split.excluded;
        }
    }
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.val.begin(), split.val.end());
    return split;
}

namespace {

struct PreparedSample {
    Matrix input;  // scaled
    Matrix target; // scaled with the input column statistics
    const CovariateBundle* cov;
};

double mean_loss(const MtFusionNet& model, const std::vector<PreparedSample>& prepared,
                 const std::vector<std::size_t>& which, LossKind kind) {
    double total = 0.0;
    for (std::size_t i : which) {
        const auto& s = prepared[i];
        total += compute_loss(kind, model.forward_scaled(s.input, *s.cov, {}), s.target);
    }
    return total / static_cast<double>(which.size());
}

} // namespace

TrainResult train(MtFusionNet model, std::span<const Sample> samples, const TrainConfig& cfg) {
    cfg.validate();
    const auto started = std::chrono::steady_clock::now();
    TrainReport report;
    if (samples.empty()) throw Error(ErrorCode::empty_dataset, "no training windows");
    if (cfg.max_epochs == 0) return {std::move(model), std::move(report)};

    std::vector<PreparedSample> prepared;
    prepared.reserve(samples.size());
    for (const auto& s : samples) {
        if (s.window.spec != model.config().spec)
            throw Error(ErrorCode::shape_mismatch, "window spec " + s.window.spec.to_string() + " does not match model");
        if (!s.window.has_target()) throw Error(ErrorCode::invalid_argument, "training window without target");
        if (!all_finite(s.window.input) || !all_finite(s.window.target) || !s.cov.static_cov.allFinite() ||
            !all_finite(s.cov.dyn_past) || !all_finite(s.cov.dyn_future))
            throw Error(ErrorCode::non_finite_input, "non-finite value in window " + s.window.channel.value + "@" +
                                                         format_date(s.window.start_day));
        ScaledWindow sw = scale_window_input(s.window);
        prepared.push_back({std::move(sw.input), apply_robust_scale(s.window.target, sw.params), &s.cov});
    }

    const TemporalSplit split = temporal_split(samples, cfg.val_fraction);
    if (split.train.empty()) throw Error(ErrorCode::empty_dataset, "no training windows left after temporal split");
    report.train_windows = split.train.size();
    report.val_windows = split.val.size();
    report.excluded_windows = split.excluded;

    Adam optimizer(cfg, model.parameters());
    Rng shuffle_rng(derive_seed(cfg.seed, 0x5EED));
    std::vector<std::size_t> order = split.train;
    std::vector<Matrix> grads = model.zero_gradients();
    std::vector<Tensor> best = model.parameters();
    double best_loss = std::numeric_limits<double>::infinity();
    int bad_epochs = 0;
    std::uint64_t step = 0;
    ForwardTrace trace;

    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        for (std::size_t i = order.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(shuffle_rng.uniform_int(0, static_cast<std::int64_t>(i) - 1));
            std::swap(order[i - 1], order[j]);
        }
        double epoch_loss = 0.0;
        for (std::size_t begin = 0; begin < order.size(); begin += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t end = std::min(order.size(), begin + static_cast<std::size_t>(cfg.batch_size));
            const double inv_batch = 1.0 / static_cast<double>(end - begin);
            for (auto& g : grads) g.setZero();
            for (std::size_t b = begin; b < end; ++b) {
                const PreparedSample& s = prepared[order[b]];
                const ForwardOptions opts{true, derive_seed(cfg.seed, (step << 20) + (b - begin) + 1)};
                const Matrix out = model.forward_scaled(s.input, *s.cov, opts, &trace);
                const double loss = compute_loss(cfg.loss_kind, out, s.target);
                if (!std::isfinite(loss))
                    throw Error(ErrorCode::divergence_detected, "non-finite loss at epoch " + std::to_string(epoch));
                epoch_loss += loss;
                model.backward(trace, loss_gradient(cfg.loss_kind, out, s.target) * inv_batch, grads);
            }
            optimizer.step(model.parameters(), grads);
            ++step;
        }
        const double train_loss = epoch_loss / static_cast<double>(order.size());
        const double monitored = split.val.empty() ? mean_loss(model, prepared, split.train, cfg.loss_kind)
                                                   : mean_loss(model, prepared, split.val, cfg.loss_kind);
        if (!std::isfinite(monitored))
            throw Error(ErrorCode::divergence_detected, "non-finite validation loss at epoch " + std::to_string(epoch));
        report.epochs.push_back({epoch, train_loss, monitored});
        if (monitored < best_loss) {
            best_loss = monitored;
            best = model.parameters();
            report.chosen_epoch = epoch;
            bad_epochs = 0;
        } else if (++bad_epochs >= cfg.patience) {
            report.early_stopped = true;
            break;
        }
    }

    model.parameters() = std::move(best);
    report.parameter_hash = parameter_hash(model);
    report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return {std::move(model), std::move(report)};
}

GradCheckResult grad_check(const MtFusionNet& model, const TrapezoidWindow& window, const CovariateBundle& cov,
                           LossKind loss_kind, double step) {
    if (!window.has_target()) throw Error(ErrorCode::invalid_argument, "grad_check needs a window with target");
    const ScaledWindow sw = scale_window_input(window);
    const Matrix target = apply_robust_scale(window.target, sw.params);

    ForwardTrace trace;
    const Matrix out = model.forward_scaled(sw.input, cov, {}, &trace);
    std::vector<Matrix> analytic = model.zero_gradients();
    model.backward(trace, loss_gradient(loss_kind, out, target), analytic);

    MtFusionNet probe = model;
    auto loss_at = [&]() { return compute_loss(loss_kind, probe.forward_scaled(sw.input, cov, {}), target); };

    GradCheckResult result;
    for (std::size_t t = 0; t < probe.parameters().size(); ++t) {
        Matrix& w = probe.parameters()[t].value;
        if (w.size() == 0) continue;
        Matrix numeric(w.rows(), w.cols());
        for (Eigen::Index i = 0; i < w.size(); ++i) {
            const double saved = w.data()[i];
            w.data()[i] = saved + step;
            const double up = loss_at();
            w.data()[i] = saved - step;
            const double down = loss_at();
            w.data()[i] = saved;
            numeric.data()[i] = (up - down) / (2.0 * step);
        }
        const double scale = std::max(analytic[t].norm(), numeric.norm());
        const double err = scale < 1e-10 ? 0.0 : (analytic[t] - numeric).norm() / scale;
        result.per_tensor.emplace_back(probe.parameters()[t].name, err);
        result.max_relative_error = std::max(result.max_relative_error, err);
    }
    return result;
}

} // namespace ttf
