#pragma once

#include "ttf/covariates.hpp"
#include "ttf/model.hpp"
#include "ttf/trapezoid.hpp"

#include <json.hpp>

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace ttf {

enum class LossKind { utilitarian, mse };

std::string_view to_string(LossKind kind);
LossKind parse_loss_kind(std::string_view name);

// MSE over the last (newest) column only; other columns never contribute.
double utilitarian_loss(const Matrix& pred, const Matrix& target);
double mse_loss(const Matrix& pred, const Matrix& target);
double compute_loss(LossKind kind, const Matrix& pred, const Matrix& target);
// d(loss)/d(pred)
Matrix loss_gradient(LossKind kind, const Matrix& pred, const Matrix& target);

struct TrainConfig {
    LossKind loss_kind = LossKind::utilitarian;
    double learning_rate = 1e-3;
    int batch_size = 32;
    int max_epochs = 50;
    int patience = 5;
    std::string optimizer = "adam";
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double val_fraction = 0.1;
    std::uint64_t seed = 0;

    void validate() const;
    bool operator==(const TrainConfig&) const = default;
};

nlohmann::json to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const nlohmann::json& j);

class Adam {
public:
    Adam(const TrainConfig& config, const std::vector<Tensor>& params);

    void step(std::vector<Tensor>& params, const std::vector<Matrix>& grads);
    long steps_taken() const { return t_; }

private:
    double lr_, beta1_, beta2_, epsilon_;
    long t_ = 0;
    std::vector<Matrix> m_, v_;
};

struct Sample {
    TrapezoidWindow window;
    CovariateBundle cov;
};

struct EpochLoss {
    int epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
};

struct TrainReport {
    std::vector<EpochLoss> epochs;
    int chosen_epoch = -1;
    double wall_seconds = 0.0;
    std::string parameter_hash;
    std::size_t train_windows = 0;
    std::size_t val_windows = 0;
    std::size_t excluded_windows = 0;
    bool early_stopped = false;

    bool same_outcome(const TrainReport& other) const; // everything except wall time
};

nlohmann::json to_json(const TrainReport& report);
void write_epoch_csv(const TrainReport& report, std::ostream& out);

// Temporal holdout: per channel, the newest `val_fraction` of forecast cohorts
// (window anchors) validate. Training keeps only windows whose target range
// ends before the earliest validation input date of that channel.
struct TemporalSplit {
    std::vector<std::size_t> train;
    std::vector<std::size_t> val;
    std::size_t excluded = 0;
};
TemporalSplit temporal_split(std::span<const Sample> samples, double val_fraction);

struct TrainResult {
    MtFusionNet model;
    TrainReport report;
};

// Loss is computed in scaled space. Mini-batch Adam, early stopping on
// validation loss (training loss when no validation windows exist), and the
// best-epoch parameters are returned. Deterministic given cfg.seed.
TrainResult train(MtFusionNet model, std::span<const Sample> samples, const TrainConfig& cfg);

struct GradCheckResult {
    double max_relative_error = 0.0;
    std::vector<std::pair<std::string, double>> per_tensor; // non-empty tensors only
};

// Central finite differences against backward() for every parameter, inference
// mode. Relative error per tensor is ||analytic - numeric|| / max(||analytic||, ||numeric||).
GradCheckResult grad_check(const MtFusionNet& model, const TrapezoidWindow& window, const CovariateBundle& cov,
                           LossKind loss_kind, double step = 1e-5);

} // namespace ttf
