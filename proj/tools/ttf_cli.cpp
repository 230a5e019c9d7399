// ttf command line: drives the hub workflow through the C API.
#include "ttf/ttf.h"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Failure {
    ttf_status status;
    std::string message;
};

void check(ttf_status s) {
    if (s != TTF_OK) throw Failure{s, ttf_last_error()};
}

std::string take(char* s) {
    std::string out = s ? s : "";
    ttf_string_free(s);
    return out;
}

json read_config(const std::string& path) {
    if (path.empty()) return json::object();
    std::ifstream in(path);
    if (!in) throw Failure{TTF_ERR_IO, "cannot read config " + path};
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return json::parse(ss.str());
    } catch (const json::exception& e) {
        throw Failure{TTF_ERR_PARSE, path + ": " + e.what()};
    }
}

void write_out(const std::string& dir, const std::string& name, const std::string& bytes) {
    if (dir.empty()) return;
    fs::create_directories(dir);
    std::ofstream out(fs::path(dir) / name, std::ios::binary);
    out << bytes;
    if (!out) throw Failure{TTF_ERR_IO, "cannot write to " + dir};
}

void copy_out(const std::string& dir, const fs::path& src) {
    if (dir.empty()) return;
    fs::create_directories(dir);
    fs::copy_file(src, fs::path(dir) / src.filename(), fs::copy_options::overwrite_existing);
}

std::string default_hub() {
    const char* env = std::getenv("TTF_HUB");
    return env && *env ? env : "ttf-hub";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Trapezoidal LTV forecasting: datasets, training, serving and monitoring"};
    app.require_subcommand(1);

    std::string hub_root = default_hub();
    std::string config, dataset_version, model_version, out_dir;
    std::optional<std::uint64_t> seed;
    app.add_option("--hub", hub_root, "hub directory (default $TTF_HUB or ./ttf-hub)");

    auto common = [&](CLI::App* c) {
        c->add_option("--config", config, "JSON config file");
        c->add_option("--dataset-version", dataset_version, "dataset version id");
        c->add_option("--model-version", model_version, "model version id");
        c->add_option("--seed", seed, "seed override");
        c->add_option("--out", out_dir, "also write outputs to this directory");
    };

    auto* generate = app.add_subcommand("generate", "synthesize a corpus into the dataset hub");
    auto* publish = app.add_subcommand("publish", "publish an LTV CSV into the dataset hub");
    auto* train = app.add_subcommand("train", "train a candidate model on a dataset version");
    auto* approve = app.add_subcommand("approve", "approve a model and make it active");
    auto* predict = app.add_subcommand("predict", "write a prediction batch");
    auto* evaluate = app.add_subcommand("evaluate", "score a prediction batch against actuals");
    auto* ablate = app.add_subcommand("ablate", "run an ablation grid");
    auto* monitor = app.add_subcommand("monitor", "advance the simulated clock and check drift");
    auto* rollback = app.add_subcommand("rollback", "point serving at a previously approved model");
    auto* status = app.add_subcommand("status", "show hub contents");
    for (auto* c : {generate, publish, train, approve, predict, evaluate, ablate, monitor, rollback, status}) common(c);

    std::string input, holidays, batch, plot_dir;
    publish->add_option("--input", input, "LTV CSV")->required();
    publish->add_option("--holidays", holidays, "holiday calendar file");
    evaluate->add_option("--batch", batch, "prediction batch id")->required();
    evaluate->add_option("--plot-dir", plot_dir, "write per-cohort plot data here");
    int advance_days = 0;
    double inject_pp = 0.0;
    std::optional<double> baseline_pct;
    bool reset = false;
    monitor->add_option("--advance-days", advance_days, "simulated days to advance");
    monitor->add_option("--inject-pp", inject_pp, "add this many percentage points to realized MAPE_p");
    monitor->add_option("--baseline", baseline_pct, "baseline MAPE_p in percent");
    monitor->add_flag("--reset", reset, "discard monitor state first");

    CLI11_PARSE(app, argc, argv);

    CLI::App* cmd = app.get_subcommands().front();
    ttf_hub* hub = nullptr;
    try {
        check(ttf_hub_open(hub_root.c_str(), &hub));
        std::string result;
        char* raw = nullptr;
        auto need = [&](const std::string& v, const char* flag) {
            if (v.empty()) throw Failure{TTF_ERR_INVALID_ARGUMENT, std::string(flag) + " is required"};
        };

        if (cmd == generate) {
            json cfg = read_config(config);
            if (seed) cfg["seed"] = *seed;
            check(ttf_hub_generate(hub, cfg.dump().c_str(), &raw));
            result = take(raw);
        } else if (cmd == publish) {
            check(ttf_hub_publish(hub, input.c_str(), holidays.empty() ? nullptr : holidays.c_str(), &raw));
            result = take(raw);
        } else if (cmd == train) {
            need(dataset_version, "--dataset-version");
            json req = read_config(config);
            if (seed) {
                req["model"]["seed"] = *seed;
                req["train"]["seed"] = *seed;
            }
            check(ttf_hub_train(hub, dataset_version.c_str(), req.dump().c_str(), &raw));
            result = take(raw);
        } else if (cmd == approve) {
            need(model_version, "--model-version");
            check(ttf_hub_approve(hub, model_version.c_str(), &raw));
            result = take(raw);
        } else if (cmd == predict) {
            check(ttf_hub_predict(hub, model_version.empty() ? nullptr : model_version.c_str(),
                                  dataset_version.empty() ? nullptr : dataset_version.c_str(), &raw));
            result = take(raw);
            copy_out(out_dir, json::parse(result).at("path").get<std::string>());
        } else if (cmd == evaluate) {
            check(ttf_hub_evaluate(hub, batch.c_str(), plot_dir.empty() ? nullptr : plot_dir.c_str(), &raw));
            result = take(raw);
            const fs::path report = json::parse(result).at("report_path").get<std::string>();
            copy_out(out_dir, report);
            copy_out(out_dir, fs::path(report).replace_extension(".csv"));
        } else if (cmd == ablate) {
            need(dataset_version, "--dataset-version");
            json grid = read_config(config);
            if (seed) grid["seeds"] = json::array({*seed});
            check(ttf_hub_ablate(hub, dataset_version.c_str(), grid.dump().c_str(), &raw));
            result = take(raw);
            const json r = json::parse(result);
            std::cerr << r.at("table").get<std::string>();
            write_out(out_dir, "ablation.txt", r.at("table").get<std::string>());
        } else if (cmd == monitor) {
            json opts{{"advance_days", advance_days}, {"inject_pp", inject_pp}, {"reset", reset}};
            if (baseline_pct) opts["baseline"] = *baseline_pct / 100.0;
            check(ttf_hub_monitor(hub, opts.dump().c_str(), &raw));
            result = take(raw);
        } else if (cmd == rollback) {
            need(model_version, "--model-version");
            check(ttf_hub_rollback(hub, model_version.c_str(), &raw));
            result = take(raw);
        } else if (cmd == status) {
            check(ttf_hub_status(hub, &raw));
            result = take(raw);
        }
        write_out(out_dir, cmd->get_name() + ".json", result + "\n");
        std::cout << result << std::endl;
        ttf_hub_close(hub);
        return 0;
    } catch (const Failure& f) {
        ttf_hub_close(hub);
        std::cerr << json{{"error", ttf_status_name(f.status)},
                          {"status", static_cast<int>(f.status)},
                          {"command", cmd->get_name()},
                          {"message", f.message}}
                         .dump()
                  << std::endl;
        return 1;
    } catch (const std::exception& e) {
        ttf_hub_close(hub);
        std::cerr << json{{"error", "Internal"}, {"command", cmd->get_name()}, {"message", e.what()}}.dump()
                  << std::endl;
        return 1;
    }
}
