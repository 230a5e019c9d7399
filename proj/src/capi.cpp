#include "ttf/ttf.h"

#include "ttf/ablation.hpp"
#include "ttf/drift.hpp"
#include "ttf/error.hpp"
#include "ttf/evaluation.hpp"
#include "ttf/hub.hpp"
#include "ttf/preprocess.hpp"
#include "ttf/serialize.hpp"
#include "ttf/synthdata.hpp"
#include "ttf/trapezoid.hpp"

#include <json.hpp>

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <new>
#include <string>

using nlohmann::json;

struct ttf_dataset {
    ttf::LtvDataset value;
};
struct ttf_window {
    ttf::TrapezoidWindow value;
};
struct ttf_model {
    ttf::MtFusionNet value;
};
struct ttf_drift {
    ttf::DriftState value;
};
struct ttf_hub {
    ttf::Hub value;
};

namespace {

thread_local std::string last_error;

ttf_status to_status(ttf::ErrorCode code) { return static_cast<ttf_status>(static_cast<int>(code) + 1); }

template <class F>
ttf_status guard(F&& f) {
    try {
        last_error.clear();
        f();
        return TTF_OK;
    } catch (const ttf::Error& e) {
        last_error = e.what();
        return to_status(e.code());
    } catch (const json::exception& e) {
        last_error = e.what();
        return TTF_ERR_PARSE;
    } catch (const std::bad_alloc&) {
        last_error = "out of memory";
        return TTF_ERR_INTERNAL;
    } catch (const std::exception& e) {
        last_error = e.what();
        return TTF_ERR_INTERNAL;
    }
}

void require(bool ok, const char* what) {
    if (!ok) throw ttf::Error(ttf::ErrorCode::invalid_argument, what);
}

char* dup(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (!out) throw std::bad_alloc();
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

ttf::WindowSpec spec_of(const ttf_window_spec* s) {
    require(s, "null window spec");
    ttf::WindowSpec w{s->m, s->n, s->k, s->s};
    w.validate();
    return w;
}

json parse_json(const char* text) {
    if (!text || !*text) return json::object();
    return json::parse(text);
}

std::vector<ttf::PredictionRecord> records_of(const ttf_record* records, size_t count) {
    require(records || count == 0, "null records");
    std::vector<ttf::PredictionRecord> out;
    for (size_t i = 0; i < count; ++i) {
        const ttf_record& r = records[i];
        require(r.length == 0 || (r.predicted && r.actual), "null record data");
        require(r.prefix_length == 0 || r.observed_prefix, "null observed prefix");
        ttf::PredictionRecord p;
        p.predicted.assign(r.predicted, r.predicted + r.length);
        p.actual.assign(r.actual, r.actual + r.length);
        if (r.prefix_length) p.observed_prefix.assign(r.observed_prefix, r.observed_prefix + r.prefix_length);
        p.user_count = r.user_count;
        out.push_back(std::move(p));
    }
    return out;
}

void copy_matrix(const ttf::Matrix& m, double* buffer, size_t capacity, size_t* rows, size_t* cols) {
    if (rows) *rows = static_cast<size_t>(m.rows());
    if (cols) *cols = static_cast<size_t>(m.cols());
    if (!buffer) return;
    if (capacity < static_cast<size_t>(m.size()))
        throw ttf::Error(ttf::ErrorCode::shape_mismatch, "buffer too small");
    std::memcpy(buffer, m.data(), sizeof(double) * static_cast<size_t>(m.size()));
}

json model_entry_json(const ttf::ModelHubEntry& e) {
    return json{{"model_version", e.version},
                {"status", ttf::to_string(e.status)},
                {"dataset_version", e.dataset_version},
                {"model_config_fingerprint", e.model_config_fingerprint},
                {"train_config_fingerprint", e.train_config_fingerprint},
                {"validation_metrics", e.validation_metrics},
                {"artifact", e.artifact.string()}};
}

} // namespace

extern "C" {

const char* ttf_code_version(void) { return TTF_CODE_VERSION; }

const char* ttf_status_name(ttf_status status) {
    if (status == TTF_OK) return "Ok";
    if (status < TTF_OK || status > TTF_ERR_INTERNAL) return "Unknown";
    return ttf::error_code_name(static_cast<ttf::ErrorCode>(static_cast<int>(status) - 1)).data();
}

const char* ttf_last_error(void) { return last_error.c_str(); }

void ttf_string_free(char* s) { std::free(s); }

ttf_status ttf_dataset_load(const char* csv_path, const char* holidays_path, ttf_dataset** out) {
    return guard([&] {
        require(csv_path && out, "null argument");
        *out = new ttf_dataset{holidays_path ? ttf::load_dataset(csv_path, holidays_path) : ttf::load_dataset(csv_path)};
    });
}

ttf_status ttf_dataset_generate(const char* generator_json, ttf_dataset** out) {
    return guard([&] {
        require(out, "null argument");
        const ttf::GeneratorConfig cfg = ttf::generator_config_from_json(parse_json(generator_json));
        *out = new ttf_dataset{
            ttf::generate(cfg, ttf::default_holidays(cfg.first_date, cfg.last_date + cfg.curve_length))};
    });
}

ttf_status ttf_dataset_save(const ttf_dataset* dataset, const char* csv_path) {
    return guard([&] {
        require(dataset && csv_path, "null argument");
        ttf::save_dataset(dataset->value, csv_path);
    });
}

ttf_status ttf_dataset_describe(const ttf_dataset* dataset, char** json_out) {
    return guard([&] {
        require(dataset && json_out, "null argument");
        *json_out = dup(ttf::to_json(ttf::describe(dataset->value)).dump());
    });
}

ttf_status ttf_dataset_ltv_n(const ttf_dataset* dataset, const char* channel, const char* activation_date,
                             size_t n_days, double* out) {
    return guard([&] {
        require(dataset && channel && activation_date && out, "null argument");
        const ttf::LtvCurve* c = dataset->value.find(ttf::ChannelId{channel}, ttf::parse_date(activation_date));
        if (!c) throw ttf::Error(ttf::ErrorCode::missing_curve, "no curve for that channel and date");
        *out = ttf::ltv_n(*c, n_days);
    });
}

void ttf_dataset_free(ttf_dataset* dataset) { delete dataset; }

ttf_status ttf_input_length(const ttf_window_spec* spec, int* out) {
    return guard([&] {
        require(out, "null argument");
        *out = spec_of(spec).input_length();
    });
}

ttf_status ttf_info_length(const ttf_window_spec* spec, int j, int* out) {
    return guard([&] {
        require(out, "null argument");
        *out = ttf::info_length(spec_of(spec), j);
    });
}

ttf_status ttf_window_build(const ttf_dataset* dataset, const char* channel, const char* start_date,
                            const ttf_window_spec* spec, int with_target, ttf_window** out) {
    return guard([&] {
        require(dataset && channel && start_date && out, "null argument");
        *out = new ttf_window{ttf::build_window(dataset->value, ttf::ChannelId{channel}, ttf::parse_date(start_date),
                                                spec_of(spec), with_target != 0)};
    });
}

ttf_status ttf_window_count(const ttf_dataset* dataset, const ttf_window_spec* spec, int with_target, size_t* windows,
                            size_t* skipped) {
    return guard([&] {
        require(dataset, "null argument");
        const auto e = ttf::enumerate_windows(dataset->value, spec_of(spec), with_target != 0);
        if (windows) *windows = e.windows.size();
        if (skipped) *skipped = e.skipped;
    });
}

ttf_status ttf_window_input(const ttf_window* window, double* buffer, size_t capacity, size_t* rows, size_t* cols) {
    return guard([&] {
        require(window, "null argument");
        copy_matrix(window->value.input, buffer, capacity, rows, cols);
    });
}

ttf_status ttf_window_target(const ttf_window* window, double* buffer, size_t capacity, size_t* rows, size_t* cols) {
    return guard([&] {
        require(window, "null argument");
        if (!window->value.has_target()) throw ttf::Error(ttf::ErrorCode::invalid_argument, "window has no target");
        copy_matrix(window->value.target, buffer, capacity, rows, cols);
    });
}

void ttf_window_free(ttf_window* window) { delete window; }

ttf_status ttf_robust_scale(const double* x, size_t length, double* out, double* median, double* iqr) {
    return guard([&] {
        require((x && out) || length == 0, "null argument");
        const ttf::ScaledColumn c = ttf::robust_scale(std::span<const double>(x, length));
        std::copy(c.values.begin(), c.values.end(), out);
        if (median) *median = c.params.median.at(0);
        if (iqr) *iqr = c.params.iqr.at(0);
    });
}

ttf_status ttf_moving_average(const double* in, size_t rows, size_t cols, int scale, double* out) {
    return guard([&] {
        require(in && out, "null argument");
        const ttf::Matrix m = Eigen::Map<const ttf::Matrix>(in, static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
        const ttf::Matrix r = ttf::moving_average(m, scale);
        std::memcpy(out, r.data(), sizeof(double) * rows * cols);
    });
}

ttf_status ttf_positional_encoding(int length, int dim, double* out) {
    return guard([&] {
        require(out && length >= 0 && dim >= 0, "bad argument");
        const ttf::Matrix pe = ttf::positional_encoding(length, dim);
        std::memcpy(out, pe.data(), sizeof(double) * static_cast<size_t>(pe.size()));
    });
}

ttf_status ttf_model_create(const char* model_config_json, ttf_model** out) {
    return guard([&] {
        require(out, "null argument");
        *out = new ttf_model{ttf::MtFusionNet(ttf::model_config_from_json(parse_json(model_config_json)))};
    });
}

ttf_status ttf_model_load(const char* path, ttf_model** out) {
    return guard([&] {
        require(path && out, "null argument");
        *out = new ttf_model{ttf::load_model(path)};
    });
}

ttf_status ttf_model_save(const ttf_model* model, const char* path) {
    return guard([&] {
        require(model && path, "null argument");
        ttf::save_model(model->value, path);
    });
}

ttf_status ttf_model_version(const ttf_model* model, char** out) {
    return guard([&] {
        require(model && out, "null argument");
        *out = dup(ttf::model_version(model->value));
    });
}

ttf_status ttf_model_parameter_count(const ttf_model* model, size_t* out) {
    return guard([&] {
        require(model && out, "null argument");
        *out = model->value.parameter_count();
    });
}

ttf_status ttf_model_predict(const ttf_model* model, const ttf_window* window, const ttf_dataset* dataset,
                             double* out, size_t capacity) {
    return guard([&] {
        require(model && window && dataset && out, "null argument");
        const ttf::ModelConfig& c = model->value.config();
        const ttf::CovariateBuilder builder(c.static_channels, dataset->value.calendar(), c.dynamic_width > 0);
        const ttf::Matrix y = model->value.forward(window->value, builder.build(window->value), false);
        copy_matrix(y, out, capacity, nullptr, nullptr);
    });
}

void ttf_model_free(ttf_model* model) { delete model; }

ttf_status ttf_loss(const char* kind, const double* pred, const double* target, size_t rows, size_t cols, double* out) {
    return guard([&] {
        require(kind && pred && target && out, "null argument");
        const auto r = static_cast<Eigen::Index>(rows), c = static_cast<Eigen::Index>(cols);
        *out = ttf::compute_loss(ttf::parse_loss_kind(kind), Eigen::Map<const ttf::Matrix>(pred, r, c),
                                 Eigen::Map<const ttf::Matrix>(target, r, c));
    });
}

ttf_status ttf_mape(const double* pred, const double* actual, size_t length, double* out) {
    return guard([&] {
        require((pred && actual) || length == 0, "null argument");
        require(out, "null argument");
        *out = ttf::mape(std::span<const double>(pred, length), std::span<const double>(actual, length)).value;
    });
}

ttf_status ttf_mape_p(const ttf_record* records, size_t count, double* out) {
    return guard([&] {
        require(out, "null argument");
        *out = ttf::mape_p(records_of(records, count));
    });
}

ttf_status ttf_mape_a(const ttf_record* records, size_t count, double* out) {
    return guard([&] {
        require(out, "null argument");
        *out = ttf::mape_a(records_of(records, count));
    });
}

ttf_status ttf_drift_create(ttf_drift** out) {
    return guard([&] {
        require(out, "null argument");
        *out = new ttf_drift{};
    });
}

ttf_status ttf_drift_set_baseline(ttf_drift* drift, double baseline) {
    return guard([&] {
        require(drift, "null argument");
        drift->value.set_baseline(baseline);
    });
}

ttf_status ttf_drift_check(ttf_drift* drift, const char* date, double mape_p, int* retrain) {
    return guard([&] {
        require(drift && date, "null argument");
        const auto d = drift->value.check({ttf::parse_date(date), mape_p});
        if (retrain) *retrain = d == ttf::DriftDecision::retrain_trigger ? 1 : 0;
    });
}

ttf_status ttf_drift_state(const ttf_drift* drift, char** json_out) {
    return guard([&] {
        require(drift && json_out, "null argument");
        *json_out = dup(drift->value.to_json().dump());
    });
}

void ttf_drift_free(ttf_drift* drift) { delete drift; }

ttf_status ttf_hub_open(const char* root, ttf_hub** out) {
    return guard([&] {
        require(root && out, "null argument");
        *out = new ttf_hub{ttf::Hub(root)};
    });
}

void ttf_hub_close(ttf_hub* hub) { delete hub; }

ttf_status ttf_hub_generate(ttf_hub* hub, const char* generator_json, char** result_json) {
    return guard([&] {
        require(hub && result_json, "null argument");
        const ttf::GeneratorConfig cfg = ttf::generator_config_from_json(parse_json(generator_json));
        const std::string v = ttf::op_generate(hub->value, cfg);
        *result_json = dup(json{{"dataset_version", v}, {"path", hub->value.dataset_entry(v).path.string()}}.dump());
    });
}

ttf_status ttf_hub_publish(ttf_hub* hub, const char* csv_path, const char* holidays_path, char** result_json) {
    return guard([&] {
        require(hub && csv_path && result_json, "null argument");
        std::optional<std::filesystem::path> hol;
        if (holidays_path) hol = holidays_path;
        const std::string v = ttf::op_publish(hub->value, csv_path, hol);
        *result_json = dup(json{{"dataset_version", v}, {"path", hub->value.dataset_entry(v).path.string()}}.dump());
    });
}

ttf_status ttf_hub_train(ttf_hub* hub, const char* dataset_version, const char* request_json, char** result_json) {
    return guard([&] {
        require(hub && dataset_version && result_json, "null argument");
        const ttf::TrainRequest req = ttf::train_request_from_json(parse_json(request_json));
        const ttf::TrainOutcome o = ttf::op_train(hub->value, dataset_version, req);
        json j = model_entry_json(o.entry);
        j["already_registered"] = o.already_registered;
        j["train_report"] = ttf::to_json(o.report);
        *result_json = dup(j.dump());
    });
}

ttf_status ttf_hub_approve(ttf_hub* hub, const char* model_version, char** result_json) {
    return guard([&] {
        require(hub && model_version && result_json, "null argument");
        json j = model_entry_json(ttf::op_approve(hub->value, model_version));
        j["active"] = hub->value.active_model().value_or("");
        *result_json = dup(j.dump());
    });
}

ttf_status ttf_hub_predict(ttf_hub* hub, const char* model_version, const char* dataset_version, char** result_json) {
    return guard([&] {
        require(hub && result_json, "null argument");
        std::optional<std::string> mv, dv;
        if (model_version) mv = model_version;
        if (dataset_version) dv = dataset_version;
        const ttf::PredictionBatchInfo b = ttf::op_predict(hub->value, mv, dv);
        *result_json = dup(json{{"batch_id", b.batch_id},
                                {"path", b.path.string()},
                                {"model_version", b.model_version},
                                {"dataset_version", b.dataset_version},
                                {"code_version", b.code_version},
                                {"record_count", b.record_count},
                                {"row_count", b.row_count}}
                               .dump());
    });
}

ttf_status ttf_hub_evaluate(ttf_hub* hub, const char* batch_id, const char* plot_dir, char** result_json) {
    return guard([&] {
        require(hub && batch_id && result_json, "null argument");
        std::optional<std::filesystem::path> plots;
        if (plot_dir) plots = plot_dir;
        ttf::op_evaluate(hub->value, batch_id, plots);
        // The stored report carries the lineage (model, dataset, code versions).
        const auto path = hub->value.reports_dir() / (std::string(batch_id) + ".json");
        std::ifstream in(path);
        json j = json::parse(in);
        j["report_path"] = path.string();
        *result_json = dup(j.dump());
    });
}

ttf_status ttf_hub_ablate(ttf_hub* hub, const char* dataset_version, const char* grid_json, char** result_json) {
    return guard([&] {
        require(hub && dataset_version && result_json, "null argument");
        const ttf::AblationGrid grid = ttf::ablation_grid_from_json(parse_json(grid_json));
        const ttf::AblateOutcome o = ttf::op_ablate(hub->value, dataset_version, grid);
        *result_json = dup(json{{"table", o.table},
                                {"table_path", o.table_path.string()},
                                {"rows", ttf::to_json(std::span<const ttf::AblationRow>(o.rows))}}
                               .dump());
    });
}

ttf_status ttf_hub_monitor(ttf_hub* hub, const char* options_json, char** result_json) {
    return guard([&] {
        require(hub && result_json, "null argument");
        const json j = parse_json(options_json);
        ttf::MonitorOptions o;
        for (const auto& [key, _] : j.items())
            if (key != "advance_days" && key != "inject_pp" && key != "baseline" && key != "reset")
                throw ttf::Error(ttf::ErrorCode::invalid_config, "unknown monitor option '" + key + "'");
        o.advance_days = j.value("advance_days", 0);
        o.inject_pp = j.value("inject_pp", 0.0);
        if (j.contains("baseline") && !j.at("baseline").is_null()) o.baseline = j.at("baseline").get<double>();
        o.reset = j.value("reset", false);
        *result_json = dup(ttf::op_monitor(hub->value, o).dump());
    });
}

ttf_status ttf_hub_rollback(ttf_hub* hub, const char* model_version, char** result_json) {
    return guard([&] {
        require(hub && model_version && result_json, "null argument");
        const std::string active = ttf::op_rollback(hub->value, model_version);
        *result_json = dup(json{{"active", active}}.dump());
    });
}

ttf_status ttf_hub_active_model(ttf_hub* hub, char** version) {
    return guard([&] {
        require(hub && version, "null argument");
        const auto a = hub->value.active_model();
        *version = a ? dup(*a) : nullptr;
    });
}

ttf_status ttf_hub_status(ttf_hub* hub, char** result_json) {
    return guard([&] {
        require(hub && result_json, "null argument");
        json models = json::array();
        for (const auto& e : hub->value.models()) models.push_back(model_entry_json(e));
        const auto active = hub->value.active_model();
        json history = ttf::replay_active_history(hub->value.events());
        *result_json = dup(json{{"datasets", hub->value.dataset_versions()},
                                {"models", models},
                                {"active", active ? json(*active) : json(nullptr)},
                                {"active_history", history},
                                {"events", hub->value.events().size()}}
                               .dump());
    });
}

} // extern "C"
