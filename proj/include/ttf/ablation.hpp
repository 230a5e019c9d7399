#pragma once

#include "ttf/covariates.hpp"
#include "ttf/evaluation.hpp"
#include "ttf/model.hpp"
#include "ttf/training.hpp"

#include <json.hpp>

#include <span>
#include <string>
#include <vector>

namespace ttf {

// Data handling shared by ablation runs and the hub pipeline.
struct PipelineSettings {
    double holdout_fraction = 0.2; // newest activation dates held out for testing
    bool static_covariates = true;
    bool dynamic_covariates = true;
    int train_stride = 1; // keep every train_stride-th anchor date for fitting

    void validate() const;
    bool operator==(const PipelineSettings&) const = default;
};

nlohmann::json to_json(const PipelineSettings& settings);
PipelineSettings pipeline_settings_from_json(const nlohmann::json& j);

// First activation date of the test period. Computed from the distinct
// activation dates whose curves cover m + n days, so it does not depend on k.
Day holdout_start(const LtvDataset& dataset, const WindowSpec& spec, double holdout_fraction);

struct ExperimentData {
    std::vector<Sample> fit;  // targets fully observed by the first test forecast date
    std::vector<Sample> test; // anchor >= holdout
    Day holdout;
};

CovariateBuilder make_covariate_builder(const LtvDataset& dataset, const PipelineSettings& settings);

ExperimentData prepare_experiment(const LtvDataset& dataset, const WindowSpec& spec, const PipelineSettings& settings);

// Copies `base` with the window spec and covariate widths/vocabulary filled in.
ModelConfig complete_model_config(ModelConfig base, const WindowSpec& spec, const LtvDataset& dataset,
                                  const PipelineSettings& settings);

std::vector<PredictionRecord> predict_records(const MtFusionNet& model, std::span<const Sample> samples);

struct AblationCell {
    std::string input = "trapezoidal";
    int k = 1;
    std::vector<int> scales;
    LossKind loss = LossKind::utilitarian;
    bool positional_encoding = true;
    BackboneKind backbone = BackboneKind::mixer;

    std::string label() const;
};

struct AblationGrid {
    WindowSpec spec{10, 60, 20, 1};
    ModelConfig model{};
    TrainConfig train{};
    PipelineSettings pipeline{};
    std::vector<std::string> inputs;  // "single", "trapezoidal", "trapezoidal:K"
    std::vector<std::vector<int>> scales;
    std::vector<LossKind> losses;
    std::vector<bool> positional_encoding;
    std::vector<BackboneKind> backbones;
    std::vector<std::uint64_t> seeds{0};

    // Cartesian product, empty axes fall back to the base configuration.
    std::vector<AblationCell> cells() const;
};

// {"window", "model", "train", "pipeline", "axes": {"input", "scales", "loss", "pe", "backbone"}, "seeds"}
AblationGrid ablation_grid_from_json(const nlohmann::json& j);

// "single" -> 1, "trapezoidal" -> default_k, "trapezoidal:K" / "trapezoidal(k=K)" -> K
int parse_input_kind(const std::string& input, int default_k);

struct AblationRow {
    AblationCell cell;
    std::uint64_t seed = 0;
    EvalReport report;
    TrainReport train;
};

std::vector<AblationRow> run_ablation(const AblationGrid& grid, const LtvDataset& dataset);
AblationRow run_ablation_cell(const AblationGrid& grid, const AblationCell& cell, std::uint64_t seed,
                              const ExperimentData& data, const LtvDataset& dataset);

nlohmann::json to_json(std::span<const AblationRow> rows);
// Aligned plaintext; per-seed rows then per-cell means when there are several seeds.
std::string format_ablation_table(std::span<const AblationRow> rows);

} // namespace ttf
