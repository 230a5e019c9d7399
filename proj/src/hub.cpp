#include "ttf/hub.hpp"

#include "ttf/error.hpp"
#include "ttf/hash.hpp"
#include "ttf/serialize.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#ifndef TTF_CODE_VERSION
#define TTF_CODE_VERSION "0.0.0"
#endif

namespace ttf {

using nlohmann::json;

std::string_view code_version() { return TTF_CODE_VERSION; }

std::string utc_timestamp() {
    const auto now = std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now());
    const auto days = std::chrono::floor<std::chrono::days>(now);
    const std::chrono::year_month_day ymd{days};
    const std::chrono::hh_mm_ss hms{now - days};
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02ld:%02ld:%02ldZ", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                  static_cast<long>(hms.hours().count()), static_cast<long>(hms.minutes().count()),
                  static_cast<long>(hms.seconds().count()));
    return buf;
}

std::string_view to_string(ModelStatus status) {
    switch (status) {
    case ModelStatus::candidate: return "candidate";
    case ModelStatus::approved: return "approved";
    case ModelStatus::retired: return "retired";
    }
    return "candidate";
}

ModelStatus parse_model_status(std::string_view name) {
    if (name == "candidate") return ModelStatus::candidate;
    if (name == "approved") return ModelStatus::approved;
    if (name == "retired") return ModelStatus::retired;
    throw Error(ErrorCode::parse_error, "unknown model status '" + std::string(name) + "'");
}

namespace {

json read_json(const fs::path& path) {
    try {
        return json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw Error(ErrorCode::parse_error, path.string() + ": " + e.what());
    }
}

void write_json(const fs::path& path, const json& j) { write_file_atomic(path, j.dump(2) + "\n"); }

bool valid_version_id(const std::string& v) {
    if (v.size() != kVersionIdLength) return false;
    for (char c : v)
        if (!std::isxdigit(static_cast<unsigned char>(c))) return false;
    return true;
}

std::string dataset_bytes(const LtvDataset& dataset, std::string* csv, std::string* holidays) {
    std::ostringstream c, h;
    write_dataset(dataset, c);
    write_holidays(dataset.calendar(), h);
    *csv = c.str();
    *holidays = h.str();
    return *csv + "\n--holidays--\n" + *holidays;
}

} // namespace

HubLock::HubLock(const fs::path& root) : path_(root / ".lock") {
    fs::create_directories(root);
    const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd < 0) {
        if (errno == EEXIST) throw Error(ErrorCode::hub_locked, "hub is locked by another writer: " + path_.string());
        throw Error(ErrorCode::io_error, "cannot create lock " + path_.string() + ": " + std::strerror(errno));
    }
    const std::string pid = std::to_string(::getpid()) + "\n";
    (void)!::write(fd, pid.data(), pid.size());
    ::close(fd);
}

HubLock::~HubLock() {
    std::error_code ec;
    fs::remove(path_, ec);
}

Hub::Hub(fs::path root) : root_(std::move(root)) {
    for (const char* sub : {"datasets", "models", "predictions", "reports", "monitor"})
        fs::create_directories(root_ / sub);
}

DatasetHubEntry Hub::publish_dataset(const LtvDataset& dataset, const json& provenance) {
    if (dataset.empty()) throw Error(ErrorCode::empty_dataset, "refusing to publish an empty dataset");
    std::string csv, holidays;
    const std::string content = dataset_bytes(dataset, &csv, &holidays);
    const std::string version = version_id_of(content);
    const fs::path dir = root_ / "datasets" / version;
    if (fs::exists(dir / "meta.json")) return dataset_entry(version);

    fs::create_directories(dir);
    write_file_atomic(dir / "ltv.csv", csv);
    write_file_atomic(dir / "holidays.txt", holidays);
    const DatasetSummary summary = describe(dataset);
    json meta{{"version", version},
              {"schema_fingerprint", sha256_hex(std::string(kDatasetCsvHeader) + "|holidays:date")},
              {"created", utc_timestamp()},
              {"content_sha256", sha256_hex(content)},
              {"provenance", provenance},
              {"summary", to_json(summary)}};
    write_json(dir / "meta.json", meta);
    append_event("dataset_published", {{"version", version}});
    return dataset_entry(version);
}

DatasetHubEntry Hub::dataset_entry(const std::string& version) const {
    const fs::path dir = root_ / "datasets" / version;
    if (!valid_version_id(version) || !fs::exists(dir / "meta.json"))
        throw Error(ErrorCode::unknown_version, "unknown dataset version '" + version + "'");
    const json meta = read_json(dir / "meta.json");
    return {version, dir, meta.at("schema_fingerprint").get<std::string>(), meta.at("created").get<std::string>(),
            meta.at("provenance")};
}

LtvDataset Hub::load_dataset(const std::string& version) const {
    const DatasetHubEntry e = dataset_entry(version);
    return ttf::load_dataset(e.path / "ltv.csv", e.path / "holidays.txt");
}

std::vector<std::string> Hub::dataset_versions() const {
    std::vector<std::string> out;
    for (const auto& d : fs::directory_iterator(root_ / "datasets"))
        if (fs::exists(d.path() / "meta.json")) out.push_back(d.path().filename().string());
    std::sort(out.begin(), out.end());
    return out;
}

void Hub::write_model_meta(const ModelHubEntry& e) const {
    json meta{{"version", e.version},
              {"artifact", e.artifact.filename().string()},
              {"model_config_fingerprint", e.model_config_fingerprint},
              {"train_config_fingerprint", e.train_config_fingerprint},
              {"dataset_version", e.dataset_version},
              {"validation_metrics", e.validation_metrics},
              {"status", to_string(e.status)},
              {"pipeline", to_json(e.pipeline)},
              {"created", e.created}};
    write_json(root_ / "models" / e.version / "meta.json", meta);
}

ModelHubEntry Hub::register_model(const MtFusionNet& model, const TrainConfig& train_config,
                                  const std::string& dataset_version, const PipelineSettings& pipeline,
                                  const json& validation_metrics, const TrainReport& report) {
    dataset_entry(dataset_version);
    const std::string artifact = serialize_model(model);
    const std::string version = model_version(model);
    const fs::path dir = root_ / "models" / version;
    if (fs::exists(dir / "meta.json")) return model_entry(version);

    fs::create_directories(dir);
    write_file_atomic(dir / "model.ttfm", artifact);
    write_json(dir / "train_config.json", to_json(train_config));
    write_json(dir / "train_report.json", to_json(report));
    std::ostringstream losses;
    write_epoch_csv(report, losses);
    write_file_atomic(dir / "train_losses.csv", losses.str());

    ModelHubEntry e;
    e.version = version;
    e.artifact = dir / "model.ttfm";
    e.model_config_fingerprint = sha256_hex(to_json(model.config()).dump()).substr(0, kVersionIdLength);
    e.train_config_fingerprint = sha256_hex(to_json(train_config).dump()).substr(0, kVersionIdLength);
    e.dataset_version = dataset_version;
    e.validation_metrics = validation_metrics;
    e.pipeline = pipeline;
    e.created = utc_timestamp();
    write_model_meta(e);
    append_event("model_registered", {{"version", version}, {"dataset_version", dataset_version}});
    return e;
}

ModelHubEntry Hub::model_entry(const std::string& version) const {
    const fs::path dir = root_ / "models" / version;
    if (!valid_version_id(version) || !fs::exists(dir / "meta.json"))
        throw Error(ErrorCode::unknown_version, "unknown model version '" + version + "'");
    const json meta = read_json(dir / "meta.json");
    ModelHubEntry e;
    e.version = version;
    e.artifact = dir / meta.at("artifact").get<std::string>();
    e.model_config_fingerprint = meta.at("model_config_fingerprint").get<std::string>();
    e.train_config_fingerprint = meta.at("train_config_fingerprint").get<std::string>();
    e.dataset_version = meta.at("dataset_version").get<std::string>();
    e.validation_metrics = meta.at("validation_metrics");
    e.status = parse_model_status(meta.at("status").get<std::string>());
    e.pipeline = pipeline_settings_from_json(meta.at("pipeline"));
    e.created = meta.at("created").get<std::string>();
    return e;
}

MtFusionNet Hub::load_model(const std::string& version) const { return ttf::load_model(model_entry(version).artifact); }

std::vector<ModelHubEntry> Hub::models() const {
    std::vector<ModelHubEntry> out;
    for (const auto& d : fs::directory_iterator(root_ / "models"))
        if (d.is_directory() && fs::exists(d.path() / "meta.json")) out.push_back(model_entry(d.path().filename().string()));
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.version < b.version; });
    return out;
}

void Hub::set_status(const std::string& version, ModelStatus status) {
    ModelHubEntry e = model_entry(version);
    e.status = status;
    write_model_meta(e);
}

std::optional<std::string> Hub::active_model() const {
    const fs::path p = root_ / "models" / "ACTIVE";
    if (!fs::exists(p)) return std::nullopt;
    std::string v = read_file(p);
    while (!v.empty() && (v.back() == '\n' || v.back() == '\r')) v.pop_back();
    return v;
}

void Hub::write_active(const std::string& version, const std::function<void()>& before_commit) {
    model_entry(version);
    const fs::path p = root_ / "models" / "ACTIVE";
    const fs::path tmp = root_ / "models" / "ACTIVE.tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out << version << '\n';
        out.flush();
        if (!out) throw Error(ErrorCode::io_error, "cannot write " + tmp.string());
    }
    if (before_commit) before_commit();
    fs::rename(tmp, p);
}

PredictionBatchInfo Hub::write_predictions(std::span<const PredictionRecord> records, const std::string& model_version,
                                           const std::string& dataset_version) {
    if (records.empty()) throw Error(ErrorCode::empty_input, "no prediction records");
    model_entry(model_version);
    dataset_entry(dataset_version);
    const std::string code(code_version());
    std::ostringstream csv;
    csv << kPredictionCsvHeader << '\n';
    std::size_t rows = 0;
    for (const auto& r : records) {
        const std::size_t offset = r.observed_prefix.size();
        for (std::size_t h = 0; h < r.predicted.size(); ++h, ++rows)
            csv << r.channel.value << ',' << format_date(r.activation) << ',' << offset + h << ','
                << format_real(r.predicted[h]) << ',' << model_version << ',' << dataset_version << ',' << code << '\n';
    }
    const std::string bytes = csv.str();
    const std::string id = version_id_of(bytes);
    const fs::path dir = root_ / "predictions" / id;
    if (!fs::exists(dir / "meta.json")) {
        const fs::path staging = root_ / "predictions" / (".staging-" + id);
        fs::remove_all(staging);
        fs::create_directories(staging);
        write_file_atomic(staging / "predictions.csv", bytes);
        write_json(staging / "meta.json", json{{"batch_id", id},
                                               {"model_version", model_version},
                                               {"dataset_version", dataset_version},
                                               {"code_version", code},
                                               {"created", utc_timestamp()},
                                               {"record_count", records.size()},
                                               {"row_count", rows}});
        fs::remove_all(dir);
        fs::rename(staging, dir);
    }
    append_event("predictions_written",
                 {{"batch_id", id}, {"model_version", model_version}, {"dataset_version", dataset_version}});
    return batch_info(id);
}

PredictionBatchInfo Hub::batch_info(const std::string& batch_id) const {
    const fs::path dir = root_ / "predictions" / batch_id;
    if (!valid_version_id(batch_id) || !fs::exists(dir / "meta.json"))
        throw Error(ErrorCode::unknown_version, "unknown prediction batch '" + batch_id + "'");
    const json m = read_json(dir / "meta.json");
    return {batch_id,
            dir / "predictions.csv",
            m.at("model_version").get<std::string>(),
            m.at("dataset_version").get<std::string>(),
            m.at("code_version").get<std::string>(),
            m.at("created").get<std::string>(),
            m.at("record_count").get<std::size_t>(),
            m.at("row_count").get<std::size_t>()};
}

HubEvent Hub::append_event(const std::string& type, const json& payload) {
    const auto existing = events();
    HubEvent e{existing.empty() ? 1 : existing.back().seq + 1, type, utc_timestamp(), payload};
    std::ofstream out(root_ / "events.ndjson", std::ios::app | std::ios::binary);
    out << json{{"seq", e.seq}, {"type", e.type}, {"time", e.time}, {"payload", e.payload}}.dump() << '\n';
    out.flush();
    if (!out) throw Error(ErrorCode::io_error, "cannot append to event log");
    return e;
}

std::vector<HubEvent> Hub::events() const {
    std::vector<HubEvent> out;
    std::ifstream in(root_ / "events.ndjson", std::ios::binary);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        try {
            const json j = json::parse(line);
            out.push_back({j.at("seq").get<std::uint64_t>(), j.at("type").get<std::string>(),
                           j.at("time").get<std::string>(), j.at("payload")});
        } catch (const json::exception& e) {
            throw Error(ErrorCode::parse_error, std::string("event log: ") + e.what());
        }
        if (out.size() > 1 && out.back().seq <= out[out.size() - 2].seq)
            throw Error(ErrorCode::parse_error, "event log sequence numbers are not increasing");
    }
    return out;
}

std::vector<std::string> replay_active_history(const std::vector<HubEvent>& events) {
    std::vector<std::string> history;
    for (const auto& e : events)
        if (e.type == "activate" || e.type == "rollback") history.push_back(e.payload.at("version").get<std::string>());
    return history;
}

// ---- workflow ----

TrainRequest default_train_request() {
    TrainRequest r;
    r.train.max_epochs = 8;
    r.train.patience = 3;
    r.pipeline.train_stride = 3;
    return r;
}

TrainRequest train_request_from_json(const json& j) {
    if (!j.is_object()) throw Error(ErrorCode::invalid_config, "train request must be an object");
    static const std::set<std::string> known{"window", "model", "train", "pipeline"};
    for (const auto& [key, _] : j.items())
        if (!known.count(key)) throw Error(ErrorCode::invalid_config, "unknown key '" + key + "' in train request");
    TrainRequest r = default_train_request();
    if (j.contains("window")) r.spec = window_spec_from_json(j.at("window"));
    if (j.contains("model")) r.model = model_config_from_json(j.at("model"));
    if (j.contains("train")) {
        json merged = to_json(r.train);
        merged.update(j.at("train"));
        r.train = train_config_from_json(merged);
    }
    if (j.contains("pipeline")) {
        json merged = to_json(r.pipeline);
        merged.update(j.at("pipeline"));
        r.pipeline = pipeline_settings_from_json(merged);
    }
    return r;
}

std::string op_generate(Hub& hub, const GeneratorConfig& config) {
    HubLock lock(hub.root());
    config.validate();
    const LtvDataset ds = generate(config, default_holidays(config.first_date, config.last_date + config.curve_length));
    json provenance{{"source", "synthetic"}, {"generator", to_json(config)}};
    return hub.publish_dataset(ds, provenance).version;
}

std::string op_publish(Hub& hub, const fs::path& csv, const std::optional<fs::path>& holidays) {
    HubLock lock(hub.root());
    const LtvDataset ds = holidays ? load_dataset(csv, *holidays) : load_dataset(csv);
    json provenance{{"source", "file"}, {"path", fs::absolute(csv).string()}};
    return hub.publish_dataset(ds, provenance).version;
}

TrainOutcome op_train(Hub& hub, const std::string& dataset_version, const TrainRequest& request) {
    HubLock lock(hub.root());
    const LtvDataset ds = hub.load_dataset(dataset_version);
    const ExperimentData data = prepare_experiment(ds, request.spec, request.pipeline);
    ModelConfig mc = complete_model_config(request.model, request.spec, ds, request.pipeline);
    mc.seed = request.model.seed;
    TrainResult result = train(MtFusionNet(mc), data.fit, request.train);

    // Validation metrics on the same temporal validation slice training used.
    const TemporalSplit split = temporal_split(data.fit, request.train.val_fraction);
    std::vector<Sample> val;
    for (std::size_t i : split.val) val.push_back(data.fit[i]);
    json metrics{{"windows", val.size()}};
    if (!val.empty()) {
        const EvalReport rep = evaluate_records(predict_records(result.model, val));
        metrics["mape_p"] = rep.mape_p;
        metrics["mape_a"] = rep.mape_a;
    }
    const std::string version = model_version(result.model);
    bool existed = true;
    try {
        hub.model_entry(version);
    } catch (const Error&) {
        existed = false;
    }
    TrainOutcome out{hub.register_model(result.model, request.train, dataset_version, request.pipeline, metrics,
                                        result.report),
                     result.report, existed};
    return out;
}

ModelHubEntry op_approve(Hub& hub, const std::string& model_version) {
    HubLock lock(hub.root());
    ModelHubEntry e = hub.model_entry(model_version);
    const json& m = e.validation_metrics;
    if (!m.contains("mape_p") || !m.at("mape_p").is_number() || !std::isfinite(m.at("mape_p").get<double>()))
        throw Error(ErrorCode::invalid_argument, "model " + model_version + " has no passing validation metrics");
    if (e.status == ModelStatus::retired) throw Error(ErrorCode::invalid_argument, "model " + model_version + " is retired");
    const auto previous = hub.active_model();
    hub.set_status(model_version, ModelStatus::approved);
    hub.append_event("model_approved", {{"version", model_version}});
    if (previous != model_version) {
        hub.write_active(model_version);
        hub.append_event("activate", {{"version", model_version},
                                      {"previous", previous ? json(*previous) : json(nullptr)},
                                      {"reason", "approve"}});
    }
    return hub.model_entry(model_version);
}

PredictionBatchInfo op_predict(Hub& hub, const std::optional<std::string>& model_version,
                               const std::optional<std::string>& dataset_version) {
    HubLock lock(hub.root());
    const std::optional<std::string> mv = model_version ? model_version : hub.active_model();
    if (!mv) throw Error(ErrorCode::unknown_version, "no model version given and no active model");
    const ModelHubEntry entry = hub.model_entry(*mv);
    const std::string dv = dataset_version.value_or(entry.dataset_version);
    const LtvDataset ds = hub.load_dataset(dv);
    const MtFusionNet model = hub.load_model(*mv);
    const WindowSpec& spec = model.config().spec;

    const Day holdout = holdout_start(ds, spec, entry.pipeline.holdout_fraction);
    const CovariateBuilder builder = make_covariate_builder(ds, entry.pipeline);
    std::vector<PredictionRecord> records;
    for (const auto& [channel, curves] : ds.by_channel())
        for (const auto& [anchor, curve] : curves) {
            if (anchor < holdout) continue;
            const Day start = anchor - spec.s * (spec.k - 1);
            if (!window_feasible(ds, channel, start, spec, false)) continue;
            const TrapezoidWindow w = build_window(ds, channel, start, spec, false);
            records.push_back(make_prediction_record(w, model.forward(w, builder.build(w), false)));
        }
    if (records.empty()) throw Error(ErrorCode::empty_dataset, "no forecastable cohorts in dataset " + dv);
    return hub.write_predictions(records, *mv, dv);
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

} // namespace

EvalReport op_evaluate(Hub& hub, const std::string& batch_id, const std::optional<fs::path>& plot_dir) {
    HubLock lock(hub.root());
    const PredictionBatchInfo info = hub.batch_info(batch_id);
    const LtvDataset ds = hub.load_dataset(info.dataset_version);
    std::ifstream in(info.path);
    std::string line;
    if (!std::getline(in, line) || line != kPredictionCsvHeader)
        throw Error(ErrorCode::parse_error, "bad prediction batch header");
    std::map<std::pair<ChannelId, Day>, std::map<int, double>> cohorts;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto cells = split_csv(line);
        if (cells.size() != 7) throw Error(ErrorCode::parse_error, "bad prediction row '" + line + "'");
        cohorts[{ChannelId{cells[0]}, parse_date(cells[1])}][std::stoi(cells[2])] = std::stod(cells[3]);
    }
    std::vector<PredictionRecord> records;
    std::size_t unevaluable = 0;
    for (const auto& [key, days] : cohorts) {
        const LtvCurve* curve = ds.find(key.first, key.second);
        const int first = days.begin()->first;
        const int last = days.rbegin()->first;
        if (!curve || static_cast<int>(curve->values.size()) <= last) {
            ++unevaluable;
            continue;
        }
        PredictionRecord r;
        r.channel = key.first;
        r.activation = key.second;
        r.user_count = curve->user_count;
        r.observed_prefix.assign(curve->values.begin(), curve->values.begin() + first);
        for (const auto& [day, value] : days) {
            r.predicted.push_back(value);
            r.actual.push_back(curve->values[static_cast<std::size_t>(day)]);
        }
        records.push_back(std::move(r));
    }
    if (records.empty()) throw Error(ErrorCode::empty_input, "no cohort of batch " + batch_id + " has realized actuals");
    EvalReport report = evaluate_records(records, batch_id + ":" + info.model_version);
    json j = to_json(report);
    j["batch_id"] = batch_id;
    j["model_version"] = info.model_version;
    j["dataset_version"] = info.dataset_version;
    j["code_version"] = info.code_version;
    j["unevaluable_records"] = unevaluable;
    write_json(hub.reports_dir() / (batch_id + ".json"), j);
    std::ostringstream csv;
    write_report_csv(report, csv);
    write_file_atomic(hub.reports_dir() / (batch_id + ".csv"), csv.str());
    if (plot_dir) write_plot_data(records, *plot_dir);
    hub.append_event("evaluation", {{"batch_id", batch_id}, {"mape_p", report.mape_p}, {"mape_a", report.mape_a}});
    return report;
}

std::string op_rollback(Hub& hub, const std::string& model_version) {
    HubLock lock(hub.root());
    const ModelHubEntry e = hub.model_entry(model_version);
    if (e.status != ModelStatus::approved)
        throw Error(ErrorCode::not_approved, "model " + model_version + " is " + std::string(to_string(e.status)));
    const auto previous = hub.active_model();
    if (previous == model_version) {
        hub.append_event("rollback_noop", {{"version", model_version}});
        return model_version;
    }
    hub.write_active(model_version);
    hub.append_event("rollback", {{"version", model_version}, {"previous", previous ? json(*previous) : json(nullptr)}});
    return model_version;
}

json op_monitor(Hub& hub, const MonitorOptions& options) {
    HubLock lock(hub.root());
    if (options.advance_days < 0) throw Error(ErrorCode::invalid_argument, "advance_days must be >= 0");
    const fs::path state_path = hub.monitor_state_path();
    if (options.reset) {
        fs::remove(state_path);
        hub.append_event("monitor_reset", json::object());
    }
    const auto active = hub.active_model();
    if (!active) throw Error(ErrorCode::unknown_version, "monitor needs an active model");
    const ModelHubEntry entry = hub.model_entry(*active);
    const LtvDataset ds = hub.load_dataset(entry.dataset_version);
    const MtFusionNet model = hub.load_model(*active);
    const WindowSpec& spec = model.config().spec;
    const int horizon = spec.m + spec.n - 1;
    const Day holdout = holdout_start(ds, spec, entry.pipeline.holdout_fraction);

    DriftState drift;
    Day clock = holdout + (horizon - 1);
    Day last_retrain = clock;
    if (fs::exists(state_path)) {
        const json s = read_json(state_path);
        clock = parse_date(s.at("clock").get<std::string>());
        last_retrain = parse_date(s.at("last_retrain").get<std::string>());
        drift = DriftState::from_json(s.at("drift"));
    }
    if (options.baseline) {
        drift.set_baseline(*options.baseline);
    } else if (!drift.baseline()) {
        if (!entry.validation_metrics.contains("mape_p"))
            throw Error(ErrorCode::no_baseline, "active model has no validation MAPE_p to use as baseline");
        drift.set_baseline(entry.validation_metrics.at("mape_p").get<double>());
    }

    const CovariateBuilder builder = make_covariate_builder(ds, entry.pipeline);
    json points = json::array();
    bool triggered = false;
    std::string stopped;
    for (int step = 0; step < options.advance_days; ++step) {
        const Day day = clock + 1;
        const Day anchor = day - horizon;
        std::vector<PredictionRecord> records;
        for (const auto& channel : ds.channels()) {
            const Day start = anchor - spec.s * (spec.k - 1);
            if (!window_feasible(ds, channel, start, spec, true)) continue;
            const TrapezoidWindow w = build_window(ds, channel, start, spec, true);
            records.push_back(make_prediction_record(w, model.forward(w, builder.build(w), false)));
        }
        if (records.empty()) {
            stopped = "no realized cohorts for " + format_date(day);
            break;
        }
        clock = day;
        const double realized = mape_p(records) + options.inject_pp / 100.0;
        const DriftDecision decision = drift.check({day, realized});
        const DriftAlert& alert = drift.alerts().back();
        json point{{"date", format_date(day)},
                   {"cohort", format_date(anchor)},
                   {"mape_p", realized},
                   {"rolling_mean", alert.rolling_mean},
                   {"window_size", alert.window_size},
                   {"decision", to_string(decision)},
                   {"note", alert.note}};
        hub.append_event("monitor_point", point);
        points.push_back(point);
        if (decision == DriftDecision::retrain_trigger) {
            triggered = true;
            hub.append_event("retrain_trigger", {{"date", format_date(day)},
                                                 {"model_version", *active},
                                                 {"rolling_mean", alert.rolling_mean},
                                                 {"baseline", alert.baseline}});
        }
        if (day - last_retrain >= 7) {
            last_retrain = day;
            hub.append_event("scheduled_retrain", {{"date", format_date(day)}, {"model_version", *active}});
        }
    }
    write_json(state_path, json{{"clock", format_date(clock)},
                                {"last_retrain", format_date(last_retrain)},
                                {"model_version", *active},
                                {"drift", drift.to_json()}});
    json out{{"clock", format_date(clock)},
             {"model_version", *active},
             {"baseline", *drift.baseline()},
             {"points", points},
             {"triggered", triggered}};
    if (!drift.alerts().empty()) {
        out["rolling_mean"] = drift.alerts().back().rolling_mean;
        out["decision"] = to_string(drift.alerts().back().decision);
    }
    if (!stopped.empty()) out["stopped"] = stopped;
    return out;
}

AblateOutcome op_ablate(Hub& hub, const std::string& dataset_version, const AblationGrid& grid) {
    const LtvDataset ds = hub.load_dataset(dataset_version);
    AblateOutcome out;
    out.rows = run_ablation(grid, ds);
    out.table = format_ablation_table(out.rows);
    HubLock lock(hub.root());
    json j{{"dataset_version", dataset_version}, {"rows", to_json(std::span<const AblationRow>(out.rows))}};
    const std::string id = version_id_of(j.dump());
    out.table_path = hub.reports_dir() / ("ablation-" + id + ".txt");
    write_file_atomic(out.table_path, out.table);
    write_json(hub.reports_dir() / ("ablation-" + id + ".json"), j);
    hub.append_event("ablation", {{"dataset_version", dataset_version}, {"report", out.table_path.filename().string()}});
    return out;
}

} // namespace ttf
