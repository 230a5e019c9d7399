/* C interface to the trapezoidal LTV forecasting library.
 *
 * Every function returns a ttf_status. On failure ttf_last_error() holds a
 * message for the calling thread. Strings returned through char** outputs
 * are heap allocated; release them with ttf_string_free. Matrices cross the
 * boundary column-major. */
#ifndef TTF_TTF_H
#define TTF_TTF_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(TTF_BUILDING_LIBRARY)
#define TTF_API __attribute__((visibility("default")))
#else
#define TTF_API
#endif

typedef enum ttf_status {
    TTF_OK = 0,
    TTF_ERR_INVALID_ARGUMENT,
    TTF_ERR_PARSE,
    TTF_ERR_IO,
    TTF_ERR_DUPLICATE_OBSERVATION,
    TTF_ERR_RETENTION_GAP,
    TTF_ERR_INSUFFICIENT_HISTORY,
    TTF_ERR_OUT_OF_RANGE,
    TTF_ERR_MISSING_CURVE,
    TTF_ERR_INVALID_BOUNDS,
    TTF_ERR_SCALE_TOO_LARGE,
    TTF_ERR_SHAPE_MISMATCH,
    TTF_ERR_UNKNOWN_BACKBONE,
    TTF_ERR_EMPTY_DATASET,
    TTF_ERR_DIVERGENCE_DETECTED,
    TTF_ERR_NON_FINITE_INPUT,
    TTF_ERR_INVALID_CONFIG,
    TTF_ERR_ALL_ENTRIES_DEGENERATE,
    TTF_ERR_EMPTY_INPUT,
    TTF_ERR_DEGENERATE_ACTUAL,
    TTF_ERR_NO_BASELINE,
    TTF_ERR_UNKNOWN_VERSION,
    TTF_ERR_NOT_APPROVED,
    TTF_ERR_HUB_LOCKED,
    TTF_ERR_INTERNAL
} ttf_status;

typedef struct ttf_dataset ttf_dataset;
typedef struct ttf_window ttf_window;
typedef struct ttf_model ttf_model;
typedef struct ttf_drift ttf_drift;
typedef struct ttf_hub ttf_hub;

typedef struct ttf_window_spec {
    int m; /* minimum info length */
    int n; /* output length */
    int k; /* series per window */
    int s; /* stride between activation dates */
} ttf_window_spec;

/* One forecast cohort. observed_prefix may be NULL when prefix_length is 0. */
typedef struct ttf_record {
    const double* predicted;
    const double* actual;
    size_t length;
    const double* observed_prefix;
    size_t prefix_length;
    int64_t user_count;
} ttf_record;

TTF_API const char* ttf_code_version(void);
TTF_API const char* ttf_status_name(ttf_status status);
TTF_API const char* ttf_last_error(void);
TTF_API void ttf_string_free(char* s);

/* datasets */
TTF_API ttf_status ttf_dataset_load(const char* csv_path, const char* holidays_path /* nullable */, ttf_dataset** out);
TTF_API ttf_status ttf_dataset_generate(const char* generator_json /* nullable */, ttf_dataset** out);
TTF_API ttf_status ttf_dataset_save(const ttf_dataset* dataset, const char* csv_path);
TTF_API ttf_status ttf_dataset_describe(const ttf_dataset* dataset, char** json_out);
TTF_API ttf_status ttf_dataset_ltv_n(const ttf_dataset* dataset, const char* channel, const char* activation_date,
                                     size_t n_days, double* out);
TTF_API void ttf_dataset_free(ttf_dataset* dataset);

/* trapezoidal windows */
TTF_API ttf_status ttf_input_length(const ttf_window_spec* spec, int* out);
TTF_API ttf_status ttf_info_length(const ttf_window_spec* spec, int j, int* out);
TTF_API ttf_status ttf_window_build(const ttf_dataset* dataset, const char* channel, const char* start_date,
                                    const ttf_window_spec* spec, int with_target, ttf_window** out);
TTF_API ttf_status ttf_window_count(const ttf_dataset* dataset, const ttf_window_spec* spec, int with_target,
                                    size_t* windows, size_t* skipped);
/* Copies the l x k input (or n x k target) when capacity allows; rows/cols are always set. */
TTF_API ttf_status ttf_window_input(const ttf_window* window, double* buffer, size_t capacity, size_t* rows,
                                    size_t* cols);
TTF_API ttf_status ttf_window_target(const ttf_window* window, double* buffer, size_t capacity, size_t* rows,
                                     size_t* cols);
TTF_API void ttf_window_free(ttf_window* window);

/* preprocessing */
TTF_API ttf_status ttf_robust_scale(const double* x, size_t length, double* out, double* median, double* iqr);
TTF_API ttf_status ttf_moving_average(const double* in, size_t rows, size_t cols, int scale, double* out);
TTF_API ttf_status ttf_positional_encoding(int length, int dim, double* out);

/* models */
TTF_API ttf_status ttf_model_create(const char* model_config_json, ttf_model** out);
TTF_API ttf_status ttf_model_load(const char* path, ttf_model** out);
TTF_API ttf_status ttf_model_save(const ttf_model* model, const char* path);
TTF_API ttf_status ttf_model_version(const ttf_model* model, char** out);
TTF_API ttf_status ttf_model_parameter_count(const ttf_model* model, size_t* out);
/* Inference-mode n x k prediction in original units. Covariates are built from
 * the dataset's channels and calendar according to the model's widths. */
TTF_API ttf_status ttf_model_predict(const ttf_model* model, const ttf_window* window, const ttf_dataset* dataset,
                                     double* out, size_t capacity);
TTF_API void ttf_model_free(ttf_model* model);

/* losses and metrics; pred/target are column-major rows x cols */
TTF_API ttf_status ttf_loss(const char* kind, const double* pred, const double* target, size_t rows, size_t cols,
                            double* out);
TTF_API ttf_status ttf_mape(const double* pred, const double* actual, size_t length, double* out);
TTF_API ttf_status ttf_mape_p(const ttf_record* records, size_t count, double* out);
TTF_API ttf_status ttf_mape_a(const ttf_record* records, size_t count, double* out);

/* drift monitor; baseline and mape_p are fractions */
TTF_API ttf_status ttf_drift_create(ttf_drift** out);
TTF_API ttf_status ttf_drift_set_baseline(ttf_drift* drift, double baseline);
TTF_API ttf_status ttf_drift_check(ttf_drift* drift, const char* date, double mape_p, int* retrain);
TTF_API ttf_status ttf_drift_state(const ttf_drift* drift, char** json_out);
TTF_API void ttf_drift_free(ttf_drift* drift);

/* hub workflow; results are JSON documents */
TTF_API ttf_status ttf_hub_open(const char* root, ttf_hub** out);
TTF_API void ttf_hub_close(ttf_hub* hub);
TTF_API ttf_status ttf_hub_generate(ttf_hub* hub, const char* generator_json /* nullable */, char** result_json);
TTF_API ttf_status ttf_hub_publish(ttf_hub* hub, const char* csv_path, const char* holidays_path /* nullable */,
                                   char** result_json);
TTF_API ttf_status ttf_hub_train(ttf_hub* hub, const char* dataset_version, const char* request_json /* nullable */,
                                 char** result_json);
TTF_API ttf_status ttf_hub_approve(ttf_hub* hub, const char* model_version, char** result_json);
TTF_API ttf_status ttf_hub_predict(ttf_hub* hub, const char* model_version /* nullable */,
                                   const char* dataset_version /* nullable */, char** result_json);
TTF_API ttf_status ttf_hub_evaluate(ttf_hub* hub, const char* batch_id, const char* plot_dir /* nullable */,
                                    char** result_json);
TTF_API ttf_status ttf_hub_ablate(ttf_hub* hub, const char* dataset_version, const char* grid_json,
                                  char** result_json);
/* options: {"advance_days", "inject_pp", "baseline", "reset"} */
TTF_API ttf_status ttf_hub_monitor(ttf_hub* hub, const char* options_json /* nullable */, char** result_json);
TTF_API ttf_status ttf_hub_rollback(ttf_hub* hub, const char* model_version, char** result_json);
TTF_API ttf_status ttf_hub_active_model(ttf_hub* hub, char** version /* NULL written when none */);
TTF_API ttf_status ttf_hub_status(ttf_hub* hub, char** result_json);

#ifdef __cplusplus
}
#endif

#endif
