/* SPDX-License-Identifier: Apache-2.0 */
/*
 * C interface to the two-stream gait emotion recognition library.
 *
 * Handles are opaque and owned by the caller; release them with the matching
 * *_free function. Every fallible call returns a tntc_status. On failure,
 * tntc_last_error() describes the problem; the message is thread-local and
 * stays valid until the next failing call on the same thread.
 *
 * Strings returned through char** out-parameters are heap-allocated by the
 * library and must be released with tntc_string_free().
 *
 * Structured inputs and results (configurations, reports, logs) are UTF-8
 * JSON documents. See docs/config.md for the configuration schema.
 */
#ifndef TNTC_TNTC_H
#define TNTC_TNTC_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(TNTC_BUILDING_LIBRARY)
#    define TNTC_API __declspec(dllexport)
#  else
#    define TNTC_API __declspec(dllimport)
#  endif
#else
#  define TNTC_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum tntc_status {
  TNTC_OK = 0,
  TNTC_ERR_INVALID_ARGUMENT = 1, /* null pointer, bad index, unknown enum name */
  TNTC_ERR_CONFIG = 2,           /* configuration failed schema validation */
  TNTC_ERR_PARSE = 3,            /* malformed dataset, array or checkpoint file */
  TNTC_ERR_SCHEMA = 4,           /* records disagree on the skeleton layout */
  TNTC_ERR_STRATIFICATION = 5,   /* a class has fewer samples than folds */
  TNTC_ERR_CONTRACT = 6,         /* input violates an operation's precondition */
  TNTC_ERR_NUMERIC = 7,          /* non-finite loss during training */
  TNTC_ERR_IO = 8,               /* file could not be opened or written */
  TNTC_ERR_UNAVAILABLE = 9,      /* requested component is absent (e.g. an ablated TCM level) */
  TNTC_ERR_BUFFER_TOO_SMALL = 10,
  TNTC_ERR_INTERNAL = 11
} tntc_status;

typedef enum tntc_image_kind { TNTC_SJI = 0, TNTC_AFI = 1 } tntc_image_kind;

typedef struct tntc_dataset tntc_dataset;
typedef struct tntc_model tntc_model;

/* Receives one JSON event per epoch or fold while a long call runs. */
typedef void (*tntc_progress_fn)(const char* event_json, void* user);

TNTC_API const char* tntc_version(void);
TNTC_API const char* tntc_last_error(void);
TNTC_API const char* tntc_status_name(tntc_status status);
TNTC_API void tntc_string_free(char* str);

/* ---- datasets ---------------------------------------------------------- */

/* `format` is "csv", "binary" or NULL to pick by file extension. */
TNTC_API tntc_status tntc_dataset_load(const char* path, const char* format, tntc_dataset** out);
/* `per_class` synthetic walks of each emotion, `frames` frames each. */
TNTC_API tntc_status tntc_dataset_synthesize(int per_class, int frames, uint64_t seed, tntc_dataset** out);
TNTC_API tntc_status tntc_dataset_save(const tntc_dataset* data, const char* path, const char* format);
TNTC_API void tntc_dataset_free(tntc_dataset* data);

TNTC_API size_t tntc_dataset_size(const tntc_dataset* data);
/* The returned id stays valid for the lifetime of `data`. */
TNTC_API tntc_status tntc_dataset_sample(const tntc_dataset* data, size_t index, const char** id, int* label,
                                         int* frames);
/* Index of the sample with `id`. */
TNTC_API tntc_status tntc_dataset_find(const tntc_dataset* data, const char* id, size_t* index);
/* {"size", "joints", "class_counts": {...}} */
TNTC_API tntc_status tntc_dataset_summary(const tntc_dataset* data, char** json);

/* ---- encoding ---------------------------------------------------------- */

/*
 * Pads sample `index` to 240 frames and encodes it. `size` 0 keeps the raw
 * 240 × joints map, otherwise the image is resized to size × size. Pixels are
 * written height-major with interleaved channels. `*needed` receives the
 * element count; pass out = NULL to query it.
 */
TNTC_API tntc_status tntc_encode_sample(const tntc_dataset* data, size_t index, tntc_image_kind kind, int size,
                                        double* out, size_t capacity, size_t* needed);

/*
 * Writes <dir>/sji/<id>.tnti and <dir>/afi/<id>.tnti (raw encoded maps) for
 * every sample, plus 8-bit PNG previews under <dir>/png/ when `png` is
 * non-zero. Result JSON: {"files": [...relative paths...], "warnings": [...]}.
 */
TNTC_API tntc_status tntc_export_encodings(const tntc_dataset* data, const char* dir, int png, char** result_json);

/* ---- configuration ----------------------------------------------------- */

/*
 * Validates a run configuration document and fills in profile defaults.
 * `seed` and `profile` override the document when non-NULL. The resolved
 * snapshot is what every other call expects as `config_json`.
 */
TNTC_API tntc_status tntc_config_resolve(const char* config_json, const uint64_t* seed, const char* profile,
                                         int require_dataset, char** resolved_json);

/* ---- models ------------------------------------------------------------ */

/* Fresh model from the network section, ablation and seed of `config_json`. */
TNTC_API tntc_status tntc_model_create(const char* config_json, tntc_model** out);
TNTC_API tntc_status tntc_model_load(const char* path, tntc_model** out);
TNTC_API tntc_status tntc_model_save(const tntc_model* model, const char* path, const char* extra_json);
TNTC_API void tntc_model_free(tntc_model* model);

/* {"ablation", "seed", "network", "parameters", "tcm_levels": [...]} */
TNTC_API tntc_status tntc_model_info(const tntc_model* model, char** json);

/* Trains on the whole dataset with the training section of `config_json`.
 * Result: {"epochs": [{epoch, lr, loss, train_acc}...], "steps", "warnings"}. */
TNTC_API tntc_status tntc_model_train(tntc_model* model, const tntc_dataset* data, const char* config_json,
                                      tntc_progress_fn progress, void* user, char** log_json);

/* {"accuracy", "n_correct", "n_samples", "confusion", "predictions": [{id, label, predicted, probs}...]} */
TNTC_API tntc_status tntc_model_evaluate(tntc_model* model, const tntc_dataset* data, char** result_json);

TNTC_API tntc_status tntc_model_predict(tntc_model* model, const tntc_dataset* data, size_t index, double probs[4],
                                        int* predicted);

/*
 * Head- and layer-averaged attention of the TCM at `level` (1..4) for one
 * sample, as a row-major tokens × tokens matrix. TNTC_ERR_UNAVAILABLE when
 * the model has no TCM at that level.
 */
TNTC_API tntc_status tntc_model_attention(tntc_model* model, const tntc_dataset* data, size_t index, int level,
                                          double* out, size_t capacity, int* tokens);

/* ---- experiments ------------------------------------------------------- */

/* Stratified k-fold protocol. Result: FoldReport JSON plus "folds": [...]
 * with per-fold split sizes and training logs. */
TNTC_API tntc_status tntc_cross_validate(const char* config_json, const tntc_dataset* data, tntc_progress_fn progress,
                                         void* user, char** report_json);

/* All seven ablation rows under one split seed.
 * Result: {"rows": [{name, ablation, report}...], "table": "..."} */
TNTC_API tntc_status tntc_run_ablation(const char* config_json, const tntc_dataset* data, tntc_progress_fn progress,
                                       void* user, char** result_json);

/* ---- export helpers ---------------------------------------------------- */

/* Viridis heatmap of a tokens × tokens matrix with stream-boundary lines. */
TNTC_API tntc_status tntc_write_heatmap_png(const double* matrix, int tokens, const char* path);

/* Git blob object id (40 lowercase hex digits plus NUL) of a file or buffer. */
TNTC_API tntc_status tntc_hash_file(const char* path, char out[41]);
TNTC_API tntc_status tntc_hash_bytes(const void* data, size_t size, char out[41]);

#ifdef __cplusplus
}
#endif

#endif /* TNTC_TNTC_H */
