#include "ttf/error.hpp"
#include "ttf/evaluation.hpp"
#include "ttf/rng.hpp"

#include <gtest/gtest.h>

#include <filesystem>
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

PredictionRecord record(std::string ch, std::vector<double> pred, std::vector<double> actual, std::int64_t users,
                        std::vector<double> prefix = {1.0}) {
    PredictionRecord r;
    r.channel = ChannelId{std::move(ch)};
    r.activation = Day{19000};
    r.predicted = std::move(pred);
    r.actual = std::move(actual);
    r.observed_prefix = std::move(prefix);
    r.user_count = users;
    return r;
}

std::vector<PredictionRecord> random_records(Rng& rng, int count) {
    std::vector<PredictionRecord> out;
    for (int i = 0; i < count; ++i) {
        std::vector<double> p, a, pre;
        for (int h = 0; h < 6; ++h) {
            a.push_back(rng.uniform(0.1, 2.0));
            p.push_back(a.back() * rng.uniform(0.5, 1.5));
        }
        for (int h = 0; h < 3; ++h) pre.push_back(rng.uniform(0.5, 3.0));
        auto r = record("ch" + std::to_string(rng.uniform_int(0, 3)), p, a, rng.uniform_int(1, 500), pre);
        r.activation = Day{19000 + i};
        out.push_back(std::move(r));
    }
    return out;
}

} // namespace

TEST(Mape, PinnedExamples) {
    const std::vector<double> x{1.0, 2.0, 3.0};
    EXPECT_EQ(mape(x, x).value, 0.0);
    EXPECT_EQ(mape(std::vector<double>{2.0}, std::vector<double>{1.0}).value, 1.0);
    EXPECT_NEAR(mape(std::vector<double>{1, 3}, std::vector<double>{2, 2}).value, 0.5, 1e-12);
}

TEST(Mape, ZeroActualsExcludedAndCounted) {
    const MapeResult r = mape(std::vector<double>{5, 2, 9}, std::vector<double>{0, 1, 0});
    EXPECT_EQ(r.value, 1.0);
    EXPECT_EQ(r.used, 1u);
    EXPECT_EQ(r.excluded, 2u);
    EXPECT_EQ(code_of([] { mape(std::vector<double>{1, 2}, std::vector<double>{0, 0}); }),
              ErrorCode::all_entries_degenerate);
    EXPECT_EQ(code_of([] { mape(std::vector<double>{1}, std::vector<double>{1, 2}); }), ErrorCode::shape_mismatch);
    EXPECT_EQ(code_of([] { mape(std::vector<double>{}, std::vector<double>{}); }), ErrorCode::shape_mismatch);
}

TEST(MapeP, PinnedExamples) {
    // Per-record MAPEs 0.1 and 0.3 with weights 1 and 3.
    const std::vector<PredictionRecord> rs{record("a", {1.1}, {1.0}, 1), record("b", {1.3}, {1.0}, 3)};
    EXPECT_NEAR(mape_p(rs), 0.25, 1e-12);
    const std::vector<PredictionRecord> perfect{record("a", {1, 2}, {1, 2}, 4), record("b", {3}, {3}, 9)};
    EXPECT_EQ(mape_p(perfect), 0.0);
    const std::vector<PredictionRecord> single{record("a", {1, 3}, {2, 2}, 17)};
    EXPECT_NEAR(mape_p(single), 0.5, 1e-12);
    EXPECT_EQ(code_of([] { mape_p({}); }), ErrorCode::empty_input);
}

TEST(MapeA, PinnedExamples) {
    // prefix 10, predicted 20, actual 30 -> |30 - 40| / 40
    const std::vector<PredictionRecord> rs{record("a", {5, 15}, {10, 20}, 2, {4, 6})};
    EXPECT_NEAR(mape_a(rs), 0.25, 1e-12);
    const std::vector<PredictionRecord> perfect{record("a", {1, 2}, {1, 2}, 4, {3, 3})};
    EXPECT_EQ(mape_a(perfect), 0.0);
    EXPECT_NEAR(mape_a(rs, 4), 0.25, 1e-12);
    EXPECT_EQ(code_of([&] { mape_a(rs, 360); }), ErrorCode::shape_mismatch);
    const std::vector<PredictionRecord> zero{record("a", {1}, {0}, 1, {0})};
    EXPECT_EQ(code_of([&] { mape_a(zero); }), ErrorCode::degenerate_actual);
    EXPECT_EQ(code_of([] { mape_a({}); }), ErrorCode::empty_input);
}

TEST(MapeA, ScaleInvariantPerRecord) {
    Rng rng(4);
    auto rs = random_records(rng, 10);
    const double before = mape_a(rs);
    for (double& v : rs[3].predicted) v *= 7.5;
    for (double& v : rs[3].actual) v *= 7.5;
    for (double& v : rs[3].observed_prefix) v *= 7.5;
    EXPECT_NEAR(mape_a(rs), before, 1e-12);
}

TEST(MapeA, InvariantToMassDistribution) {
    Rng rng(5);
    auto rs = random_records(rng, 6);
    const double before = mape_a(rs);
    for (auto& r : rs) {
        double total = 0.0;
        for (double v : r.predicted) total += v;
        std::fill(r.predicted.begin(), r.predicted.end(), 0.0);
        r.predicted.back() = total;
    }
    EXPECT_NEAR(mape_a(rs), before, 1e-12);
}

TEST(MapeP, EqualWeightsGiveUnweightedMean) {
    Rng rng(6);
    auto rs = random_records(rng, 12);
    double mean = 0.0;
    for (auto& r : rs) {
        r.user_count = 42;
        mean += mape(r.predicted, r.actual).value;
    }
    EXPECT_NEAR(mape_p(rs), mean / 12.0, 1e-12);
}

TEST(MapeP, WeightDominance) {
    Rng rng(7);
    auto rs = random_records(rng, 8);
    for (auto& r : rs) r.user_count = 1;
    rs[5].user_count = 1'000'000;
    EXPECT_NEAR(mape_p(rs), mape(rs[5].predicted, rs[5].actual).value, 1e-4);
}

TEST(EvalReport, RecomposesFromChannels) {
    Rng rng(8);
    const auto rs = random_records(rng, 40);
    const EvalReport rep = evaluate_records(rs, "fp");
    EXPECT_NEAR(rep.mape_p, mape_p(rs), 1e-12);
    EXPECT_NEAR(rep.mape_a, mape_a(rs), 1e-12);
    double p = 0, a = 0, w = 0;
    std::size_t count = 0;
    for (const auto& c : rep.per_channel) {
        p += c.weight * c.mape_p;
        a += c.weight * c.mape_a;
        w += c.weight;
        count += c.records;
        EXPECT_GE(c.mape_p, 0.0);
    }
    EXPECT_NEAR(p / w, rep.mape_p, 1e-12);
    EXPECT_NEAR(a / w, rep.mape_a, 1e-12);
    EXPECT_EQ(count, rs.size());
    EXPECT_EQ(rep.record_count, rs.size());
    EXPECT_EQ(rep.config_fingerprint, "fp");

    std::ostringstream csv;
    write_report_csv(rep, csv);
    EXPECT_EQ(csv.str().rfind("channel_id,mape_p,mape_a,weight,records\n*,", 0), 0u);
    const auto j = to_json(rep);
    EXPECT_EQ(j.at("per_channel").size(), rep.per_channel.size());
}

TEST(PlotData, OneFilePerRecord) {
    Rng rng(9);
    const auto rs = random_records(rng, 3);
    const auto dir = std::filesystem::temp_directory_path() / ("ttf_plot_test_" + std::to_string(::getpid()));
    std::filesystem::remove_all(dir);
    write_plot_data(rs, dir);
    std::size_t files = 0;
    for (const auto& e : std::filesystem::directory_iterator(dir)) {
        (void)e;
        ++files;
    }
    EXPECT_EQ(files, 3u);
    std::filesystem::remove_all(dir);
}
