#include "ttf/ablation.hpp"

#include "ttf/error.hpp"
#include "ttf/serialize.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

namespace ttf {

using nlohmann::json;

void PipelineSettings::validate() const {
    if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0))
        throw Error(ErrorCode::invalid_config, "holdout_fraction must be in (0, 1)");
    if (train_stride < 1) throw Error(ErrorCode::invalid_config, "train_stride must be >= 1");
}

json to_json(const PipelineSettings& s) {
    return json{{"holdout_fraction", s.holdout_fraction},
                {"static_covariates", s.static_covariates},
                {"dynamic_covariates", s.dynamic_covariates},
                {"train_stride", s.train_stride}};
}

PipelineSettings pipeline_settings_from_json(const json& j) {
    if (!j.is_object()) throw Error(ErrorCode::invalid_config, "pipeline settings must be an object");
    static const std::set<std::string> known{"holdout_fraction", "static_covariates", "dynamic_covariates",
                                             "train_stride"};
    for (const auto& [key, _] : j.items())
        if (!known.count(key)) throw Error(ErrorCode::invalid_config, "unknown key '" + key + "' in pipeline settings");
    PipelineSettings s;
    try {
        s.holdout_fraction = j.value("holdout_fraction", s.holdout_fraction);
        s.static_covariates = j.value("static_covariates", s.static_covariates);
        s.dynamic_covariates = j.value("dynamic_covariates", s.dynamic_covariates);
        s.train_stride = j.value("train_stride", s.train_stride);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::invalid_config, std::string("bad pipeline settings: ") + e.what());
    }
    s.validate();
    return s;
}

Day holdout_start(const LtvDataset& dataset, const WindowSpec& spec, double holdout_fraction) {
    std::set<Day> dates;
    const std::size_t needed = static_cast<std::size_t>(spec.m + spec.n);
    for (const auto& [channel, curves] : dataset.by_channel())
        for (const auto& [day, curve] : curves)
            if (curve.values.size() >= needed) dates.insert(day);
    if (dates.size() < 2) throw Error(ErrorCode::insufficient_history, "need at least two evaluable activation dates");
    const auto count = dates.size();
    const auto held = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(holdout_fraction * count)));
    return *std::next(dates.begin(), static_cast<std::ptrdiff_t>(count - held));
}

CovariateBuilder make_covariate_builder(const LtvDataset& dataset, const PipelineSettings& settings) {
    std::vector<std::string> channels;
    if (settings.static_covariates)
        for (const auto& c : dataset.channels()) channels.push_back(c.value);
    return CovariateBuilder(std::move(channels), dataset.calendar(), settings.dynamic_covariates);
}

ExperimentData prepare_experiment(const LtvDataset& dataset, const WindowSpec& spec, const PipelineSettings& settings) {
    settings.validate();
    ExperimentData data;
    data.holdout = holdout_start(dataset, spec, settings.holdout_fraction);
    const CovariateBuilder builder = make_covariate_builder(dataset, settings);
    Day first = data.holdout;
    for (const auto& [channel, curves] : dataset.by_channel())
        if (!curves.empty()) first = std::min(first, curves.begin()->first);
    // Data observable when the first test cohort is forecast ends on holdout + m - 1.
    const Day observable = data.holdout + (spec.m - 1);

    WindowEnumeration all = enumerate_windows(dataset, spec, true);
    for (auto& w : all.windows) {
        if (w.anchor() >= data.holdout) {
            CovariateBundle cov = builder.build(w);
            data.test.push_back({std::move(w), std::move(cov)});
        } else if (w.target_end() <= observable && (w.anchor() - first) % settings.train_stride == 0) {
            CovariateBundle cov = builder.build(w);
            data.fit.push_back({std::move(w), std::move(cov)});
        }
    }
    if (data.fit.empty()) throw Error(ErrorCode::empty_dataset, "no training windows before the holdout period");
    if (data.test.empty()) throw Error(ErrorCode::empty_dataset, "no test windows in the holdout period");
    return data;
}

ModelConfig complete_model_config(ModelConfig base, const WindowSpec& spec, const LtvDataset& dataset,
                                  const PipelineSettings& settings) {
    base.spec = spec;
    base.static_channels.clear();
    if (settings.static_covariates)
        for (const auto& c : dataset.channels()) base.static_channels.push_back(c.value);
    base.static_width = static_cast<int>(base.static_channels.size());
    base.dynamic_width = settings.dynamic_covariates ? kDynamicFeatureCount : 0;
    base.validate();
    return base;
}

std::vector<PredictionRecord> predict_records(const MtFusionNet& model, std::span<const Sample> samples) {
    std::vector<PredictionRecord> records;
    records.reserve(samples.size());
    for (const auto& s : samples) records.push_back(make_prediction_record(s.window, model.forward(s.window, s.cov, false)));
    return records;
}

namespace {

std::string scales_label(const std::vector<int>& scales) {
    std::string out = "[";
    for (std::size_t i = 0; i < scales.size(); ++i) out += (i ? "," : "") + std::to_string(scales[i]);
    return out + "]";
}

std::string percent(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f%%", 100.0 * v);
    return buf;
}

} // namespace

std::string AblationCell::label() const {
    std::string in = k == 1 ? "single" : "trapezoidal(k=" + std::to_string(k) + ")";
    return in + " scales=" + scales_label(scales) + " loss=" + std::string(to_string(loss)) +
           " pe=" + (positional_encoding ? "on" : "off") + " backbone=" + std::string(to_string(backbone));
}

int parse_input_kind(const std::string& input, int default_k) {
    if (input == "single") return 1;
    if (input == "trapezoidal") return default_k;
    int k = 0;
    char tail = 0;
    if ((std::sscanf(input.c_str(), "trapezoidal:%d%c", &k, &tail) == 1 ||
         std::sscanf(input.c_str(), "trapezoidal(k=%d)%c", &k, &tail) == 1) &&
        k >= 1)
        return k;
    throw Error(ErrorCode::invalid_config, "unknown input kind '" + input + "'");
}

std::vector<AblationCell> AblationGrid::cells() const {
    const std::vector<std::string> in = inputs.empty() ? std::vector<std::string>{"trapezoidal"} : inputs;
    const std::vector<std::vector<int>> sc = scales.empty() ? std::vector<std::vector<int>>{model.scales} : scales;
    const std::vector<LossKind> lo = losses.empty() ? std::vector<LossKind>{train.loss_kind} : losses;
    const std::vector<bool> pe = positional_encoding.empty() ? std::vector<bool>{model.positional_encoding}
                                                             : positional_encoding;
    const std::vector<BackboneKind> bb = backbones.empty() ? std::vector<BackboneKind>{model.backbone} : backbones;
    std::vector<AblationCell> out;
    for (const auto& i : in)
        for (const auto& s : sc)
            for (LossKind l : lo)
                for (bool p : pe)
                    for (BackboneKind b : bb) out.push_back({i, parse_input_kind(i, spec.k), s, l, p, b});
    return out;
}

AblationGrid ablation_grid_from_json(const json& j) {
    if (!j.is_object()) throw Error(ErrorCode::invalid_config, "ablation grid must be an object");
    static const std::set<std::string> known{"window", "model", "train", "pipeline", "axes", "seeds"};
    for (const auto& [key, _] : j.items())
        if (!known.count(key)) throw Error(ErrorCode::invalid_config, "unknown key '" + key + "' in ablation grid");
    AblationGrid g;
    try {
        if (j.contains("window")) g.spec = window_spec_from_json(j.at("window"));
        if (j.contains("model")) g.model = model_config_from_json(j.at("model"));
        if (j.contains("train")) g.train = train_config_from_json(j.at("train"));
        if (j.contains("pipeline")) g.pipeline = pipeline_settings_from_json(j.at("pipeline"));
        if (j.contains("seeds")) g.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
        if (j.contains("axes")) {
            const json& a = j.at("axes");
            static const std::set<std::string> axes{"input", "scales", "loss", "pe", "backbone"};
            for (const auto& [key, _] : a.items())
                if (!axes.count(key)) throw Error(ErrorCode::invalid_config, "unknown ablation axis '" + key + "'");
            if (a.contains("input")) g.inputs = a.at("input").get<std::vector<std::string>>();
            if (a.contains("scales")) g.scales = a.at("scales").get<std::vector<std::vector<int>>>();
            if (a.contains("loss"))
                for (const auto& v : a.at("loss")) g.losses.push_back(parse_loss_kind(v.get<std::string>()));
            if (a.contains("pe")) g.positional_encoding = a.at("pe").get<std::vector<bool>>();
            if (a.contains("backbone"))
                for (const auto& v : a.at("backbone")) g.backbones.push_back(parse_backbone_kind(v.get<std::string>()));
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::invalid_config, std::string("bad ablation grid: ") + e.what());
    }
    if (g.seeds.empty()) throw Error(ErrorCode::invalid_config, "ablation grid needs at least one seed");
    for (const auto& c : g.cells()) (void)c; // validates input labels
    return g;
}

AblationRow run_ablation_cell(const AblationGrid& grid, const AblationCell& cell, std::uint64_t seed,
                              const ExperimentData& data, const LtvDataset& dataset) {
    WindowSpec spec = grid.spec;
    spec.k = cell.k;
    ModelConfig mc = grid.model;
    // Short inputs (single series: l = m) cannot hold wide smoothing windows;
    // each tower keeps its slot with the scale capped at l.
    mc.scales.clear();
    for (int w : cell.scales) mc.scales.push_back(std::min(w, spec.input_length()));
    mc.positional_encoding = cell.positional_encoding;
    mc.backbone = cell.backbone;
    mc.seed = seed;
    mc = complete_model_config(mc, spec, dataset, grid.pipeline);
    TrainConfig tc = grid.train;
    tc.loss_kind = cell.loss;
    tc.seed = seed;

    TrainResult result = train(MtFusionNet(mc), data.fit, tc);
    const auto records = predict_records(result.model, data.test);
    AblationRow row;
    row.cell = cell;
    row.seed = seed;
    row.report = evaluate_records(records, parameter_hash(result.model));
    row.train = std::move(result.report);
    return row;
}

std::vector<AblationRow> run_ablation(const AblationGrid& grid, const LtvDataset& dataset) {
    const auto cells = grid.cells();
    std::map<int, ExperimentData> by_k;
    std::vector<AblationRow> rows;
    for (const auto& cell : cells) {
        auto it = by_k.find(cell.k);
        if (it == by_k.end()) {
            WindowSpec spec = grid.spec;
            spec.k = cell.k;
            it = by_k.emplace(cell.k, prepare_experiment(dataset, spec, grid.pipeline)).first;
        }
        for (std::uint64_t seed : grid.seeds) rows.push_back(run_ablation_cell(grid, cell, seed, it->second, dataset));
    }
    return rows;
}

json to_json(std::span<const AblationRow> rows) {
    json out = json::array();
    for (const auto& r : rows)
        out.push_back({{"input", r.cell.k == 1 ? std::string("single") : "trapezoidal:" + std::to_string(r.cell.k)},
                       {"k", r.cell.k},
                       {"scales", r.cell.scales},
                       {"loss", to_string(r.cell.loss)},
                       {"pe", r.cell.positional_encoding},
                       {"backbone", to_string(r.cell.backbone)},
                       {"seed", r.seed},
                       {"report", to_json(r.report)},
                       {"train", to_json(r.train)}});
    return out;
}

std::string format_ablation_table(std::span<const AblationRow> rows) {
    std::vector<std::vector<std::string>> table{{"Input", "Scales", "Loss", "PE", "Backbone", "Seed", "MAPE_p", "MAPE_a"}};
    auto cells_of = [](const AblationCell& c) {
        return std::vector<std::string>{c.k == 1 ? "Single" : "Trapezoidal (k=" + std::to_string(c.k) + ")",
                                        scales_label(c.scales), std::string(to_string(c.loss)),
                                        c.positional_encoding ? "w" : "w/o", std::string(to_string(c.backbone))};
    };
    std::vector<std::string> order;
    std::map<std::string, std::pair<AblationCell, std::vector<const AblationRow*>>> groups;
    for (const auto& r : rows) {
        auto line = cells_of(r.cell);
        line.push_back(std::to_string(r.seed));
        line.push_back(percent(r.report.mape_p));
        line.push_back(percent(r.report.mape_a));
        table.push_back(std::move(line));
        const std::string key = r.cell.label();
        if (!groups.count(key)) order.push_back(key);
        auto& g = groups[key];
        g.first = r.cell;
        g.second.push_back(&r);
    }
    const bool multi_seed = std::any_of(groups.begin(), groups.end(), [](const auto& g) { return g.second.second.size() > 1; });
    std::size_t separator = 0;
    if (multi_seed) {
        separator = table.size();
        for (const auto& key : order) {
            const auto& [cell, members] = groups[key];
            double p = 0.0, a = 0.0;
            for (const auto* r : members) {
                p += r->report.mape_p;
                a += r->report.mape_a;
            }
            auto line = cells_of(cell);
            line.push_back("mean");
            line.push_back(percent(p / members.size()));
            line.push_back(percent(a / members.size()));
            table.push_back(std::move(line));
        }
    }
    std::vector<std::size_t> width(table[0].size(), 0);
    for (const auto& line : table)
        for (std::size_t c = 0; c < line.size(); ++c) width[c] = std::max(width[c], line[c].size());
    std::ostringstream out;
    auto rule = [&] {
        for (std::size_t c = 0; c < width.size(); ++c) out << (c ? "-+-" : "") << std::string(width[c], '-');
        out << '\n';
    };
    for (std::size_t i = 0; i < table.size(); ++i) {
        if (i == 1 || (separator && i == separator)) rule();
        for (std::size_t c = 0; c < table[i].size(); ++c) {
            out << (c ? " | " : "");
            const bool numeric = c >= 5;
            const std::string pad(width[c] - table[i][c].size(), ' ');
            out << (numeric ? pad + table[i][c] : table[i][c] + pad);
        }
        out << '\n';
    }
    return out.str();
}

} // namespace ttf
