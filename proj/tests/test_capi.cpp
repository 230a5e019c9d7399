// Exercises the shared library through ttf.h only.
#include "ttf/ttf.h"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include <unistd.h>

namespace {

std::string take(char* s) {
    std::string out = s ? s : "";
    ttf_string_free(s);
    return out;
}

// Pulls "key":"value" out of a flat JSON string.
std::string field(const std::string& json, const std::string& key) {
    const std::string needle = "\"" + key + "\":\"";
    const auto pos = json.find(needle);
    if (pos == std::string::npos) return {};
    const auto begin = pos + needle.size();
    return json.substr(begin, json.find('"', begin) - begin);
}

const char* kGenerator = R"({"channels":2,"first_date":"2022-01-01","last_date":"2022-03-31","curve_length":30,"seed":5})";

} // namespace

TEST(CApi, StatusNamesAndErrors) {
    EXPECT_STREQ(ttf_status_name(TTF_OK), "Ok");
    EXPECT_GT(std::strlen(ttf_code_version()), 0u);
    int l = 0;
    ttf_window_spec bad{0, 5, 3, 1};
    EXPECT_EQ(ttf_input_length(&bad, &l), TTF_ERR_INVALID_CONFIG);
    EXPECT_GT(std::strlen(ttf_last_error()), 0u);
    EXPECT_EQ(ttf_input_length(nullptr, &l), TTF_ERR_INVALID_ARGUMENT);
}

TEST(CApi, WindowGeometry) {
    ttf_window_spec spec{3, 4, 3, 2};
    int l = 0, info = 0;
    ASSERT_EQ(ttf_input_length(&spec, &l), TTF_OK);
    EXPECT_EQ(l, 7);
    ASSERT_EQ(ttf_info_length(&spec, 0, &info), TTF_OK);
    EXPECT_EQ(info, 7);
    ASSERT_EQ(ttf_info_length(&spec, 2, &info), TTF_OK);
    EXPECT_EQ(info, 3);
    EXPECT_EQ(ttf_info_length(&spec, 3, &info), TTF_ERR_OUT_OF_RANGE);
}

TEST(CApi, Numerics) {
    const double x[] = {1, 2, 3, 4, 100};
    double out[5], median = 0, iqr = 0;
    ASSERT_EQ(ttf_robust_scale(x, 5, out, &median, &iqr), TTF_OK);
    EXPECT_EQ(median, 3.0);
    EXPECT_EQ(iqr, 2.0);
    EXPECT_EQ(out[0], -1.0);

    const double col[] = {1, 2, 3, 4};
    double ma[4];
    ASSERT_EQ(ttf_moving_average(col, 4, 1, 1, ma), TTF_OK);
    for (int i = 0; i < 4; ++i) EXPECT_EQ(ma[i], col[i]);

    double pe[4];
    ASSERT_EQ(ttf_positional_encoding(2, 2, pe), TTF_OK);
    EXPECT_EQ(pe[0], 0.0);                        // pos 0, sin
    EXPECT_NEAR(pe[1], std::sin(1.0), 1e-15);     // pos 1, sin
    EXPECT_EQ(pe[2], 1.0);                        // pos 0, cos

    double v = 0;
    const double p2[] = {1, 3}, a2[] = {2, 2};
    ASSERT_EQ(ttf_mape(p2, a2, 2, &v), TTF_OK);
    EXPECT_NEAR(v, 0.5, 1e-12);
    const double zeros[] = {0, 0};
    EXPECT_EQ(ttf_mape(p2, zeros, 2, &v), TTF_ERR_ALL_ENTRIES_DEGENERATE);

    const double pred[] = {5, 15}, actual[] = {10, 20}, prefix[] = {4, 6};
    ttf_record r{pred, actual, 2, prefix, 2, 3};
    ASSERT_EQ(ttf_mape_a(&r, 1, &v), TTF_OK);
    EXPECT_NEAR(v, 0.25, 1e-12);
    ASSERT_EQ(ttf_mape_p(&r, 1, &v), TTF_OK);
    EXPECT_NEAR(v, 0.375, 1e-12);
    EXPECT_EQ(ttf_mape_p(&r, 0, &v), TTF_ERR_EMPTY_INPUT);

    const double t[] = {1, 1};
    ASSERT_EQ(ttf_loss("utilitarian", t, t, 2, 1, &v), TTF_OK);
    EXPECT_EQ(v, 0.0);
    EXPECT_EQ(ttf_loss("huber", t, t, 2, 1, &v), TTF_ERR_INVALID_CONFIG);
}

TEST(CApi, DatasetWindowModel) {
    ttf_dataset* ds = nullptr;
    ASSERT_EQ(ttf_dataset_generate(kGenerator, &ds), TTF_OK);
    char* summary = nullptr;
    ASSERT_EQ(ttf_dataset_describe(ds, &summary), TTF_OK);
    EXPECT_NE(take(summary).find("\"channel_count\":2"), std::string::npos);

    double ltv = 0;
    ASSERT_EQ(ttf_dataset_ltv_n(ds, "ch01", "2022-01-01", 3, &ltv), TTF_OK);
    EXPECT_GT(ltv, 0.0);
    EXPECT_EQ(ttf_dataset_ltv_n(ds, "ch09", "2022-01-01", 3, &ltv), TTF_ERR_MISSING_CURVE);

    ttf_window_spec spec{4, 6, 3, 1};
    size_t windows = 0, skipped = 0;
    ASSERT_EQ(ttf_window_count(ds, &spec, 1, &windows, &skipped), TTF_OK);
    EXPECT_GT(windows, 0u);

    ttf_window* w = nullptr;
    ASSERT_EQ(ttf_window_build(ds, "ch01", "2022-01-10", &spec, 1, &w), TTF_OK);
    size_t rows = 0, cols = 0;
    EXPECT_EQ(ttf_window_input(w, nullptr, 0, &rows, &cols), TTF_OK); // size query
    EXPECT_EQ(rows, 6u);
    EXPECT_EQ(cols, 3u);
    std::vector<double> input(rows * cols);
    ASSERT_EQ(ttf_window_input(w, input.data(), input.size(), &rows, &cols), TTF_OK);
    EXPECT_EQ(input[rows * 2 + 0], 0.0); // zero padded head of the last column
    EXPECT_GT(input[rows * 2 + 5], 0.0);

    ttf_model* model = nullptr;
    const char* cfg = R"({"window":{"m":4,"n":6,"k":3,"s":1},"scales":[1,2],"hparams":{"hidden":4,"blocks":1},"seed":3})";
    ASSERT_EQ(ttf_model_create(cfg, &model), TTF_OK);
    size_t params = 0;
    ASSERT_EQ(ttf_model_parameter_count(model, &params), TTF_OK);
    EXPECT_GT(params, 0u);
    std::vector<double> y(18);
    ASSERT_EQ(ttf_model_predict(model, w, ds, y.data(), y.size()), TTF_OK);
    for (double v : y) EXPECT_TRUE(std::isfinite(v));

    const auto path = (std::filesystem::temp_directory_path() / ("ttf_capi_model_" + std::to_string(::getpid()) + ".ttfm")).string();
    ASSERT_EQ(ttf_model_save(model, path.c_str()), TTF_OK);
    ttf_model* loaded = nullptr;
    ASSERT_EQ(ttf_model_load(path.c_str(), &loaded), TTF_OK);
    char* v1 = nullptr;
    char* v2 = nullptr;
    ASSERT_EQ(ttf_model_version(model, &v1), TTF_OK);
    ASSERT_EQ(ttf_model_version(loaded, &v2), TTF_OK);
    EXPECT_EQ(take(v1), take(v2));
    std::vector<double> y2(18);
    ASSERT_EQ(ttf_model_predict(loaded, w, ds, y2.data(), y2.size()), TTF_OK);
    EXPECT_EQ(y, y2);
    std::remove(path.c_str());

    EXPECT_EQ(ttf_model_create(R"({"scales":[1,500]})", &model), TTF_ERR_SCALE_TOO_LARGE);
    EXPECT_EQ(ttf_model_create(R"({"backbone":"lstm"})", &model), TTF_ERR_UNKNOWN_BACKBONE);

    ttf_model_free(loaded);
    ttf_model_free(model);
    ttf_window_free(w);
    ttf_dataset_free(ds);
}

TEST(CApi, Drift) {
    ttf_drift* d = nullptr;
    ASSERT_EQ(ttf_drift_create(&d), TTF_OK);
    int retrain = -1;
    EXPECT_EQ(ttf_drift_check(d, "2023-01-01", 0.1, &retrain), TTF_ERR_NO_BASELINE);
    ASSERT_EQ(ttf_drift_set_baseline(d, 0.135), TTF_OK);
    const char* days[] = {"2023-01-01", "2023-01-02", "2023-01-03", "2023-01-04",
                          "2023-01-05", "2023-01-06", "2023-01-07"};
    for (const char* day : days) ASSERT_EQ(ttf_drift_check(d, day, 0.158, &retrain), TTF_OK);
    EXPECT_EQ(retrain, 1);
    char* state = nullptr;
    ASSERT_EQ(ttf_drift_state(d, &state), TTF_OK);
    EXPECT_NE(take(state).find("retrain_trigger"), std::string::npos);
    ttf_drift_free(d);
}

TEST(CApi, HubWorkflow) {
    const auto root = std::filesystem::temp_directory_path() / ("ttf_capi_hub_" + std::to_string(::getpid()));
    std::filesystem::remove_all(root);
    ttf_hub* hub = nullptr;
    ASSERT_EQ(ttf_hub_open(root.c_str(), &hub), TTF_OK);
    char* out = nullptr;
    ASSERT_EQ(ttf_hub_generate(hub, kGenerator, &out), TTF_OK);
    const std::string dataset = field(take(out), "dataset_version");
    ASSERT_EQ(dataset.size(), 16u);

    const char* request = R"({"window":{"m":4,"n":6,"k":3,"s":1},"model":{"scales":[1,2],"hparams":{"hidden":4,"blocks":1}},"train":{"max_epochs":2}})";
    ASSERT_EQ(ttf_hub_train(hub, dataset.c_str(), request, &out), TTF_OK) << ttf_last_error();
    const std::string model = field(take(out), "model_version");
    ASSERT_EQ(model.size(), 16u);

    char* active = nullptr;
    ASSERT_EQ(ttf_hub_active_model(hub, &active), TTF_OK);
    EXPECT_EQ(active, nullptr);
    EXPECT_EQ(ttf_hub_rollback(hub, model.c_str(), &out), TTF_ERR_NOT_APPROVED);
    ASSERT_EQ(ttf_hub_approve(hub, model.c_str(), &out), TTF_OK);
    take(out);
    ASSERT_EQ(ttf_hub_active_model(hub, &active), TTF_OK);
    EXPECT_EQ(take(active), model);

    ASSERT_EQ(ttf_hub_predict(hub, nullptr, nullptr, &out), TTF_OK) << ttf_last_error();
    const std::string batch = field(take(out), "batch_id");
    ASSERT_EQ(ttf_hub_evaluate(hub, batch.c_str(), nullptr, &out), TTF_OK) << ttf_last_error();
    EXPECT_NE(take(out).find("mape_p"), std::string::npos);
    EXPECT_EQ(ttf_hub_evaluate(hub, "0000000000000000", nullptr, &out), TTF_ERR_UNKNOWN_VERSION);

    ASSERT_EQ(ttf_hub_monitor(hub, R"({"advance_days":2,"baseline":0.5})", &out), TTF_OK) << ttf_last_error();
    take(out);
    ASSERT_EQ(ttf_hub_status(hub, &out), TTF_OK);
    EXPECT_NE(take(out).find(model), std::string::npos);
    ttf_hub_close(hub);
    std::filesystem::remove_all(root);
}
