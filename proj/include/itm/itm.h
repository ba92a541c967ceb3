/*
 * Copyright 2026 The itm Authors
 * SPDX-License-Identifier: Apache-2.0
 *
 * C interface to the itm inverse tone mapping library.
 *
 * Every function returns an itm_status. On failure the message is available
 * from itm_last_error() until the next call on the same thread. Objects are
 * opaque and released with their matching *_free function; passing NULL to a
 * free function is a no-op.
 */
#ifndef ITM_ITM_H
#define ITM_ITM_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(ITM_BUILDING_LIBRARY)
#    define ITM_API __declspec(dllexport)
#  else
#    define ITM_API __declspec(dllimport)
#  endif
#else
#  define ITM_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum itm_status {
  ITM_OK = 0,
  ITM_ERR_RUNTIME = 1, /* numerical failure, I/O failure while writing */
  ITM_ERR_INPUT = 2,   /* unreadable or malformed input data */
  ITM_ERR_CONFIG = 3   /* invalid configuration or argument */
} itm_status;

typedef struct itm_image itm_image;
typedef struct itm_config itm_config;
typedef struct itm_model itm_model;

ITM_API const char* itm_version(void);
ITM_API const char* itm_last_error(void);

/* Strings returned through char** are owned by the caller. */
ITM_API void itm_string_free(char* s);

/* ---- configuration ------------------------------------------------------ */

/* `toy` selects the small network and short training presets. */
ITM_API itm_status itm_config_create(int toy, itm_config** out);

/* Loads a JSON RunConfig on top of the defaults (or toy presets). A NULL path
 * falls back to the file named by $ITM_CONFIG, then to the presets. */
ITM_API itm_status itm_config_load(const char* path, int toy, itm_config** out);

/* Merges a JSON object into the config. Unknown keys are rejected. */
ITM_API itm_status itm_config_merge_json(itm_config* cfg, const char* json);

/* Sets both the network initialization seed and the training seed. */
ITM_API itm_status itm_config_set_seed(itm_config* cfg, uint64_t seed);

ITM_API itm_status itm_config_to_json(const itm_config* cfg, char** out);
ITM_API void itm_config_free(itm_config* cfg);

/* ---- images ------------------------------------------------------------- */

/* Reads .hdr, .pfm, .png, .jpg/.jpeg. LDR files are scaled to [0,1]. */
ITM_API itm_status itm_image_read(const char* path, itm_image** out);

/* Writes by extension: .hdr/.pfm for radiance, .png for [0,1] data. */
ITM_API itm_status itm_image_write(const itm_image* img, const char* path);

/* Copies `data`, laid out planar (channel, row, column). */
ITM_API itm_status itm_image_create(size_t width, size_t height, size_t channels, const double* data,
                                    itm_image** out);

ITM_API size_t itm_image_width(const itm_image* img);
ITM_API size_t itm_image_height(const itm_image* img);
ITM_API size_t itm_image_channels(const itm_image* img);
/* Planar samples, valid while the image lives. */
ITM_API const double* itm_image_data(const itm_image* img);
ITM_API void itm_image_free(itm_image* img);

/* ---- models ------------------------------------------------------------- */

ITM_API itm_status itm_model_create(const itm_config* cfg, itm_model** out);
ITM_API itm_status itm_model_load(const char* checkpoint, itm_model** out);
ITM_API itm_status itm_model_param_count(const itm_model* model, size_t* out);

/* Reconstructs radiance from an LDR image. `mask_out` may be NULL. */
ITM_API itm_status itm_model_predict(const itm_model* model, const itm_image* ldr, itm_image** hdr_out,
                                     itm_image** mask_out);
ITM_API void itm_model_free(itm_model* model);

/* ---- commands ----------------------------------------------------------- */

ITM_API itm_status itm_synth(const itm_config* cfg, const char* hdr_dir, const char* out_dir, uint64_t seed,
                             size_t* pairs_out);

/* Called after every iteration. Return nonzero to stop training early. */
typedef int (*itm_progress_fn)(size_t iteration, double learning_rate, double term1, double term2,
                               double total, void* user);

typedef struct itm_train_result {
  size_t iterations;
  double term1;
  double term2;
  double total;
} itm_train_result;

/* `resume` may be NULL. Writes checkpoint.itmc and loss.csv into out_dir. */
ITM_API itm_status itm_train(const itm_config* cfg, const char* data_dir, const char* out_dir, const char* resume,
                             itm_progress_fn progress, void* user, itm_train_result* result);

/* `mask_png` and `preview_dir` may be NULL. */
ITM_API itm_status itm_infer(const char* checkpoint, const char* ldr_path, const char* out_hdr, const char* mask_png,
                             const char* preview_dir);

typedef struct itm_metrics {
  size_t pairs;
  double pu_psnr_db;
  double pu_ssim;
  double pu_ms_ssim;
} itm_metrics;

/* Scores one prediction against its reference. */
ITM_API itm_status itm_score(const itm_image* pred, const itm_image* ref, itm_metrics* out);

/* Scores every file in pred_dir that has a same-stem file in ref_dir and
 * writes a CSV plus a JSON sidecar. `out` receives the means. */
ITM_API itm_status itm_eval(const char* pred_dir, const char* ref_dir, const char* out_csv, itm_metrics* out);

typedef struct itm_ablation_row {
  const char* variant;
  uint64_t seed;
  size_t iterations;
  double term1;
  double term2;
  double final_loss;
  double pu_psnr_db;
} itm_ablation_row;

typedef void (*itm_ablation_fn)(const itm_ablation_row* row, void* user);

/* Trains the six variants for each seed. A NULL data_dir uses four
 * procedural scenes at the network's global size. */
ITM_API itm_status itm_ablate(const itm_config* cfg, const char* data_dir, const uint64_t* seeds, size_t n_seeds,
                              const char* out_csv, itm_ablation_fn on_row, void* user);

typedef void (*itm_gradcheck_fn)(const char* name, double rel_error, size_t coordinates, int pass, void* user);

ITM_API itm_status itm_gradcheck(uint64_t seed, itm_gradcheck_fn on_row, void* user, int* all_pass);

/* `crf_source` is "identity", "gamma:<g>", "gamma-family:<n>" or a DoRF file
 * path; NULL means identity.
 * NULL exposures select 0.01, 0.1, 1, 4, 8. */
ITM_API itm_status itm_preview(const char* hdr_path, const char* out_dir, const double* exposures,
                               size_t n_exposures, const char* crf_source);

/* Uses the checkpoint when given, otherwise a freshly initialized network
 * from `cfg`. Reports the number of PNG files written. */
ITM_API itm_status itm_dump_activations(const char* checkpoint, const itm_config* cfg, const char* ldr_path,
                                        const char* out_dir, size_t* files_out);

#ifdef __cplusplus
}
#endif

#endif /* ITM_ITM_H */
