#include "ttf/error.hpp"
#include "ttf/hash.hpp"
#include "ttf/hub.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <set>
#include <sstream>

#include <unistd.h>

using namespace ttf;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode::internal;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

GeneratorConfig corpus() {
    GeneratorConfig c;
    c.channels = 2;
    c.first_date = parse_date("2022-01-01");
    c.last_date = parse_date("2022-04-10");
    c.curve_length = 30;
    c.seed = 3;
    return c;
}

TrainRequest small_request(std::uint64_t seed) {
    TrainRequest r;
    r.spec = WindowSpec{5, 10, 4, 1};
    r.model.scales = {1, 2};
    r.model.hparams.hidden = 8;
    r.model.hparams.blocks = 1;
    r.model.seed = seed;
    r.train.max_epochs = 3;
    r.train.patience = 2;
    r.train.batch_size = 16;
    r.train.learning_rate = 5e-3;
    r.train.seed = seed;
    r.pipeline.train_stride = 2;
    return r;
}

fs::path fresh_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("ttf_hub_test_" + name + "_" + std::to_string(::getpid()));
    fs::remove_all(p);
    return p;
}

std::vector<std::string> event_types(const Hub& hub) {
    std::vector<std::string> out;
    for (const auto& e : hub.events()) out.push_back(e.type);
    return out;
}

} // namespace

class HubWorkflow : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        root_ = new fs::path(fresh_dir("workflow"));
        Hub hub(*root_);
        dataset_ = new std::string(op_generate(hub, corpus()));
        model_a_ = new TrainOutcome(op_train(hub, *dataset_, small_request(1)));
        model_b_ = new TrainOutcome(op_train(hub, *dataset_, small_request(2)));
    }
    static void TearDownTestSuite() {
        fs::remove_all(*root_);
        delete root_;
        delete dataset_;
        delete model_a_;
        delete model_b_;
    }

    static fs::path* root_;
    static std::string* dataset_;
    static TrainOutcome* model_a_;
    static TrainOutcome* model_b_;
};

fs::path* HubWorkflow::root_ = nullptr;
std::string* HubWorkflow::dataset_ = nullptr;
TrainOutcome* HubWorkflow::model_a_ = nullptr;
TrainOutcome* HubWorkflow::model_b_ = nullptr;

TEST_F(HubWorkflow, DatasetIsContentAddressed) {
    Hub hub(*root_);
    EXPECT_EQ(op_generate(hub, corpus()), *dataset_);
    const DatasetHubEntry e = hub.dataset_entry(*dataset_);
    const std::string bytes = slurp(e.path / "ltv.csv") + "\n--holidays--\n" + slurp(e.path / "holidays.txt");
    EXPECT_EQ(version_id_of(bytes), *dataset_);

    GeneratorConfig other = corpus();
    other.seed = 4;
    EXPECT_NE(op_generate(hub, other), *dataset_);
}

TEST_F(HubWorkflow, ModelsRegisteredAsCandidates) {
    Hub hub(*root_);
    EXPECT_NE(model_a_->entry.version, model_b_->entry.version);
    const ModelHubEntry e = hub.model_entry(model_a_->entry.version);
    EXPECT_EQ(e.dataset_version, *dataset_);
    EXPECT_TRUE(e.validation_metrics.at("mape_p").is_number());
    EXPECT_GT(e.validation_metrics.at("windows").get<std::size_t>(), 0u);
    for (const char* f : {"model.ttfm", "meta.json", "train_config.json", "train_report.json", "train_losses.csv"})
        EXPECT_TRUE(fs::exists(*root_ / "models" / e.version / f)) << f;
}

TEST_F(HubWorkflow, TrainingTwiceIsIdempotent) {
    Hub hub(*root_);
    const auto before = hub.models().size();
    const TrainOutcome again = op_train(hub, *dataset_, small_request(1));
    EXPECT_EQ(again.entry.version, model_a_->entry.version);
    EXPECT_TRUE(again.already_registered);
    EXPECT_EQ(hub.models().size(), before);
    EXPECT_EQ(slurp(again.entry.artifact), slurp(model_a_->entry.artifact));
}

TEST_F(HubWorkflow, UnknownVersionsLeaveNoOutput) {
    Hub hub(*root_);
    const auto batches = std::distance(fs::directory_iterator(*root_ / "predictions"), fs::directory_iterator{});
    EXPECT_EQ(code_of([&] { op_train(hub, "0123456789abcdef", small_request(1)); }), ErrorCode::unknown_version);
    EXPECT_EQ(code_of([&] { op_predict(hub, std::string("0123456789abcdef"), std::nullopt); }),
              ErrorCode::unknown_version);
    EXPECT_EQ(code_of([&] { op_predict(hub, model_a_->entry.version, std::string("../etc")); }),
              ErrorCode::unknown_version);
    EXPECT_EQ(code_of([&] { op_evaluate(hub, "fedcba9876543210"); }), ErrorCode::unknown_version);
    EXPECT_EQ(code_of([&] { op_approve(hub, "fedcba9876543210"); }), ErrorCode::unknown_version);
    EXPECT_EQ(std::distance(fs::directory_iterator(*root_ / "predictions"), fs::directory_iterator{}), batches);
    EXPECT_FALSE(fs::exists(*root_ / ".lock"));
}

TEST_F(HubWorkflow, FullLifecycle) {
    Hub hub(*root_);
    const std::string a = model_a_->entry.version;
    const std::string b = model_b_->entry.version;

    EXPECT_EQ(code_of([&] { op_rollback(hub, b); }), ErrorCode::not_approved);

    op_approve(hub, a);
    EXPECT_EQ(hub.active_model(), a);
    const PredictionBatchInfo first = op_predict(hub, std::nullopt, std::nullopt);
    EXPECT_EQ(first.model_version, a);
    EXPECT_EQ(first.dataset_version, *dataset_);
    EXPECT_GT(first.record_count, 0u);
    EXPECT_EQ(first.row_count, first.record_count * 10);

    // Every prediction row joins back to the model and dataset it claims.
    std::ifstream csv(first.path);
    std::string line;
    std::getline(csv, line);
    EXPECT_EQ(line, kPredictionCsvHeader);
    std::set<std::string> models, datasets;
    while (std::getline(csv, line)) {
        std::vector<std::string> cells;
        std::stringstream ss(line);
        for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
        ASSERT_EQ(cells.size(), 7u);
        models.insert(cells[4]);
        datasets.insert(cells[5]);
        const int day = std::stoi(cells[2]);
        EXPECT_GE(day, 5);
        EXPECT_LT(day, 15);
    }
    EXPECT_EQ(models, std::set<std::string>{a});
    EXPECT_EQ(datasets, std::set<std::string>{*dataset_});
    EXPECT_EQ(hub.model_entry(a).dataset_version, *dataset_);

    const EvalReport rep = op_evaluate(hub, first.batch_id);
    EXPECT_GE(rep.mape_p, 0.0);
    EXPECT_TRUE(fs::exists(hub.reports_dir() / (first.batch_id + ".json")));
    EXPECT_TRUE(fs::exists(hub.reports_dir() / (first.batch_id + ".csv")));

    op_approve(hub, b);
    EXPECT_EQ(hub.active_model(), b);
    const PredictionBatchInfo second = op_predict(hub, std::nullopt, std::nullopt);
    EXPECT_NE(second.batch_id, first.batch_id);

    EXPECT_EQ(op_rollback(hub, a), a);
    EXPECT_EQ(hub.active_model(), a);
    const PredictionBatchInfo again = op_predict(hub, std::nullopt, std::nullopt);
    EXPECT_EQ(again.batch_id, first.batch_id);
    EXPECT_EQ(slurp(again.path), slurp(first.path));

    const auto before = hub.events().size();
    EXPECT_EQ(op_rollback(hub, a), a);
    const auto events = hub.events();
    ASSERT_EQ(events.size(), before + 1);
    EXPECT_EQ(events.back().type, "rollback_noop");
    EXPECT_EQ(hub.active_model(), a);

    EXPECT_EQ(replay_active_history(events), (std::vector<std::string>{a, b, a}));
    for (std::size_t i = 1; i < events.size(); ++i) EXPECT_EQ(events[i].seq, events[i - 1].seq + 1);

    // Monitor walks the clock over realized cohorts with a fixed baseline.
    MonitorOptions mo;
    mo.advance_days = 8;
    mo.baseline = 10.0;
    mo.reset = true;
    const auto out = op_monitor(hub, mo);
    EXPECT_EQ(out.at("points").size(), 8u);
    EXPECT_FALSE(out.at("triggered").get<bool>());
    EXPECT_EQ(out.at("decision"), "ok");
    MonitorOptions hot;
    hot.advance_days = 1;
    hot.baseline = 0.0;
    hot.inject_pp = 100.0;
    EXPECT_TRUE(op_monitor(hub, hot).at("triggered").get<bool>());
    const auto types = event_types(hub);
    EXPECT_NE(std::find(types.begin(), types.end(), "retrain_trigger"), types.end());
    EXPECT_NE(std::find(types.begin(), types.end(), "scheduled_retrain"), types.end());
}

TEST(Hub, LockExcludesWriters) {
    const fs::path root = fresh_dir("lock");
    Hub hub(root);
    {
        HubLock held(root);
        EXPECT_EQ(code_of([&] { op_generate(hub, corpus()); }), ErrorCode::hub_locked);
        EXPECT_EQ(code_of([&] { HubLock second(root); }), ErrorCode::hub_locked);
    }
    EXPECT_NO_THROW(HubLock again(root));
    EXPECT_TRUE(hub.dataset_versions().empty());
    fs::remove_all(root);
}

TEST(Hub, ActivePointerIsAtomic) {
    const fs::path root = fresh_dir("atomic");
    Hub hub(root);
    const std::string ds = op_generate(hub, corpus());
    TrainRequest r = small_request(5);
    r.train.max_epochs = 1;
    const std::string a = op_train(hub, ds, r).entry.version;
    r.model.seed = 6;
    const std::string b = op_train(hub, ds, r).entry.version;
    op_approve(hub, a);
    const std::string before = slurp(root / "models" / "ACTIVE");
    EXPECT_THROW(hub.write_active(b, [] { throw std::runtime_error("crash"); }), std::runtime_error);
    EXPECT_EQ(slurp(root / "models" / "ACTIVE"), before);
    EXPECT_EQ(hub.active_model(), a);
    hub.write_active(b);
    EXPECT_EQ(hub.active_model(), b);
    EXPECT_EQ(code_of([&] { hub.write_active("0000000000000000"); }), ErrorCode::unknown_version);
    EXPECT_EQ(hub.active_model(), b);
    fs::remove_all(root);
}

TEST(Hub, ReplayIgnoresOtherEvents) {
    std::vector<HubEvent> ev{{1, "activate", "", {{"version", "a"}}},
                             {2, "predictions_written", "", {{"batch_id", "x"}}},
                             {3, "rollback_noop", "", {{"version", "a"}}},
                             {4, "activate", "", {{"version", "b"}}},
                             {5, "rollback", "", {{"version", "a"}}}};
    EXPECT_EQ(replay_active_history(ev), (std::vector<std::string>{"a", "b", "a"}));
}

TEST(TrainRequest, MergesOntoDeskDefaults) {
    const TrainRequest d = default_train_request();
    EXPECT_EQ(d.spec, (WindowSpec{10, 60, 20, 1}));
    const TrainRequest r = train_request_from_json({{"train", {{"max_epochs", 2}}}});
    EXPECT_EQ(r.train.max_epochs, 2);
    EXPECT_EQ(r.train.patience, d.train.patience);
    EXPECT_EQ(r.pipeline.train_stride, d.pipeline.train_stride);
    EXPECT_EQ(code_of([] { train_request_from_json({{"bogus", 1}}); }), ErrorCode::invalid_config);
}
