#pragma once

#include "ttf/ablation.hpp"
#include "ttf/drift.hpp"
#include "ttf/evaluation.hpp"
#include "ttf/ltv.hpp"
#include "ttf/model.hpp"
#include "ttf/synthdata.hpp"
#include "ttf/training.hpp"

#include <json.hpp>

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace ttf {

namespace fs = std::filesystem;

std::string_view code_version();
std::string utc_timestamp();

enum class ModelStatus { candidate, approved, retired };
std::string_view to_string(ModelStatus status);
ModelStatus parse_model_status(std::string_view name);

struct DatasetHubEntry {
    std::string version;
    fs::path path; // directory holding ltv.csv, holidays.txt, meta.json
    std::string schema_fingerprint;
    std::string created;
    nlohmann::json provenance;
};

struct ModelHubEntry {
    std::string version;
    fs::path artifact;
    std::string model_config_fingerprint;
    std::string train_config_fingerprint;
    std::string dataset_version;
    nlohmann::json validation_metrics; // {"mape_p", "mape_a", "windows"}
    ModelStatus status = ModelStatus::candidate;
    PipelineSettings pipeline;
    std::string created;
};

struct PredictionBatchInfo {
    std::string batch_id;
    fs::path path; // predictions.csv
    std::string model_version;
    std::string dataset_version;
    std::string code_version;
    std::string created;
    std::size_t record_count = 0; // cohorts
    std::size_t row_count = 0;
};

struct HubEvent {
    std::uint64_t seq = 0;
    std::string type;
    std::string time;
    nlohmann::json payload;
};

inline constexpr const char* kPredictionCsvHeader =
    "channel_id,activation_date,retention_day,predicted_ltv,model_version,dataset_version,code_version";

// Exclusive writer lock (O_EXCL lock file). Throws hub_locked when held.
class HubLock {
public:
    explicit HubLock(const fs::path& root);
    ~HubLock();
    HubLock(const HubLock&) = delete;
    HubLock& operator=(const HubLock&) = delete;

private:
    fs::path path_;
};

// Directory-backed dataset hub, model hub, prediction store and event log.
class Hub {
public:
    explicit Hub(fs::path root);

    const fs::path& root() const { return root_; }

    DatasetHubEntry publish_dataset(const LtvDataset& dataset, const nlohmann::json& provenance);
    DatasetHubEntry dataset_entry(const std::string& version) const; // unknown_version
    LtvDataset load_dataset(const std::string& version) const;
    std::vector<std::string> dataset_versions() const;

    // Idempotent: an already registered version keeps its status.
    ModelHubEntry register_model(const MtFusionNet& model, const TrainConfig& train_config,
                                 const std::string& dataset_version, const PipelineSettings& pipeline,
                                 const nlohmann::json& validation_metrics, const TrainReport& report);
    ModelHubEntry model_entry(const std::string& version) const; // unknown_version
    MtFusionNet load_model(const std::string& version) const;
    std::vector<ModelHubEntry> models() const;
    void set_status(const std::string& version, ModelStatus status);

    std::optional<std::string> active_model() const;
    // Temp file then rename. `before_commit` runs between the two (fault injection).
    void write_active(const std::string& version, const std::function<void()>& before_commit = {});

    PredictionBatchInfo write_predictions(std::span<const PredictionRecord> records, const std::string& model_version,
                                          const std::string& dataset_version);
    PredictionBatchInfo batch_info(const std::string& batch_id) const;

    HubEvent append_event(const std::string& type, const nlohmann::json& payload);
    std::vector<HubEvent> events() const;

    fs::path reports_dir() const { return root_ / "reports"; }
    fs::path monitor_state_path() const { return root_ / "monitor" / "state.json"; }

private:
    void write_model_meta(const ModelHubEntry& entry) const;

    fs::path root_;
};

// Active model after each activate/rollback event, in order.
std::vector<std::string> replay_active_history(const std::vector<HubEvent>& events);

// Workflow operations; each mutating one holds the hub lock.
struct TrainRequest {
    WindowSpec spec{10, 60, 20, 1};
    ModelConfig model{};
    TrainConfig train{};
    PipelineSettings pipeline{};
};

// {"window", "model", "train", "pipeline"}; absent sections keep the desk defaults.
TrainRequest train_request_from_json(const nlohmann::json& j);
TrainRequest default_train_request();

struct TrainOutcome {
    ModelHubEntry entry;
    TrainReport report;
    bool already_registered = false;
};

std::string op_generate(Hub& hub, const GeneratorConfig& config);
std::string op_publish(Hub& hub, const fs::path& csv, const std::optional<fs::path>& holidays);
TrainOutcome op_train(Hub& hub, const std::string& dataset_version, const TrainRequest& request);
ModelHubEntry op_approve(Hub& hub, const std::string& model_version);
PredictionBatchInfo op_predict(Hub& hub, const std::optional<std::string>& model_version,
                               const std::optional<std::string>& dataset_version);
EvalReport op_evaluate(Hub& hub, const std::string& batch_id, const std::optional<fs::path>& plot_dir = std::nullopt);
std::string op_rollback(Hub& hub, const std::string& model_version);

struct MonitorOptions {
    int advance_days = 0;
    double inject_pp = 0.0;           // added to every realized MAPE_p, percentage points
    std::optional<double> baseline;  // fraction; defaults to the active model's validation MAPE_p
    bool reset = false;
};

// Simulated clock: day D realizes the cohorts activated on D - (m + n - 1).
nlohmann::json op_monitor(Hub& hub, const MonitorOptions& options);

struct AblateOutcome {
    std::vector<AblationRow> rows;
    std::string table;
    fs::path table_path;
};
AblateOutcome op_ablate(Hub& hub, const std::string& dataset_version, const AblationGrid& grid);

} // namespace ttf
