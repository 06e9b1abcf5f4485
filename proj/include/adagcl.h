/* C interface to the adagcl recommender library.
 *
 * All functions set a thread-local error message retrievable via
 * adagcl_last_error() and return/produce:
 *   0 .. success          1 .. usage error
 *   2 .. data error       3 .. numerical failure
 * Handle-returning functions return NULL on failure.
 */
#ifndef ADAGCL_H
#define ADAGCL_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define ADAGCL_API __declspec(dllexport)
#else
#define ADAGCL_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

#define ADAGCL_OK 0
#define ADAGCL_ERR_USAGE 1
#define ADAGCL_ERR_DATA 2
#define ADAGCL_ERR_NUMERIC 3

typedef struct adagcl_splits adagcl_splits; /* opaque: train/val/test data */
typedef struct adagcl_model adagcl_model;   /* opaque: parameters + config */

ADAGCL_API const char* adagcl_version(void);
ADAGCL_API const char* adagcl_last_error(void);

/* Cooperative stop flag checked once per training batch; safe to call from
 * a signal handler. Training finishes the current batch, restores the best
 * checkpoint so far and returns normally. */
ADAGCL_API void adagcl_request_stop(void);
ADAGCL_API void adagcl_clear_stop(void);

/* FNV-1a 64 file checksum as a 16-char hex string (cap >= 17). */
ADAGCL_API int adagcl_checksum_file(const char* path, char* hex_out,
                                    size_t cap);

/* Data pipeline: load interactions (format "tsv" or "tsv_header"), apply
 * k-core filtering when k_core >= 1, split by `ratios` ("0.7,0.2,0.1" or
 * NULL for the default), and persist train/validation/test tsv files plus
 * manifest.json under out_dir. split_mode: "per_user" (default) or
 * "global". */
ADAGCL_API int adagcl_prepare(const char* input_path, const char* format,
                              int k_core, const char* ratios, uint64_t seed,
                              const char* split_mode, const char* out_dir);

ADAGCL_API adagcl_splits* adagcl_splits_open(const char* dir);
ADAGCL_API void adagcl_splits_close(adagcl_splits* s);
ADAGCL_API int adagcl_splits_counts(const adagcl_splits* s, int64_t* users,
                                    int64_t* items, int64_t* train,
                                    int64_t* validation, int64_t* test);

/* Trains with the given flat key=value config text. When out_dir is
 * non-NULL, writes checkpoint.bin, history.csv and history.json there. */
ADAGCL_API adagcl_model* adagcl_train(const adagcl_splits* s,
                                      const char* config_text,
                                      const char* out_dir);

/* config_text NULL -> use the config embedded in the checkpoint. */
ADAGCL_API adagcl_model* adagcl_model_load(const char* checkpoint_path,
                                           const char* config_text);
ADAGCL_API int adagcl_model_save(const adagcl_model* m, const char* path);
ADAGCL_API void adagcl_model_close(adagcl_model* m);
ADAGCL_API const char* adagcl_model_config(const adagcl_model* m);

/* mode: "validation" or "test". Writes the report as JSON and CSV (either
 * path may be NULL to skip). */
ADAGCL_API int adagcl_evaluate(const adagcl_model* m, const adagcl_splits* s,
                               const char* mode, const int* cutoffs,
                               int n_cutoffs, const char* out_json,
                               const char* out_csv);

/* Single metric lookup: which = "recall" or "ndcg". */
ADAGCL_API int adagcl_metric(const adagcl_model* m, const adagcl_splits* s,
                             const char* mode, int cutoff, const char* which,
                             double* out);

/* which: "main" (encoder embeddings), "view1" (main encoder over a
 * generated view graph, seeded), "view2" (denoiser embeddings, eval mode).
 * CSV schema: entity_type,index,v0..v{d-1}. */
ADAGCL_API int adagcl_export_embeddings(const adagcl_model* m,
                                        const adagcl_splits* s,
                                        const char* which, uint64_t seed,
                                        const char* csv_path);

/* kind: "noise" | "sparsity" | "sweep". options_json (may be NULL):
 *   noise:    {"ratios":[...], "models":["full","lightgcn","edge_drop"]}
 *   sparsity: {"user_boundaries":[...], "item_boundaries":[...]}
 *   sweep:    {"grid":[...]}
 * Reports (CSV+JSON+SVG where applicable) are written under out_dir. */
ADAGCL_API int adagcl_experiment(const adagcl_splits* s, const char* kind,
                                 const char* config_text,
                                 const char* options_json,
                                 const char* out_dir);

#ifdef __cplusplus
}
#endif

#endif /* ADAGCL_H */
