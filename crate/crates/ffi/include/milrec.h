#ifndef MILREC_H
#define MILREC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Result codes shared by every function.
 */
typedef enum MilrecStatus {
  MILREC_STATUS_OK = 0,
  MILREC_STATUS_INVALID_ARGUMENT = 1,
  MILREC_STATUS_INPUT = 2,
  MILREC_STATUS_FORMAT = 3,
  MILREC_STATUS_NUMERIC = 4,
  MILREC_STATUS_EVALUATION = 5,
  MILREC_STATUS_IO = 6,
  MILREC_STATUS_NULL_POINTER = 7,
  MILREC_STATUS_PANIC = 8,
} MilrecStatus;

/*
 A prepared data directory (vocabularies plus train/valid/test split).
 */
typedef struct MilrecDataset MilrecDataset;

/*
 A trained model loaded from a checkpoint and its `.meta` sidecar.
 */
typedef struct MilrecModel MilrecModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message for the last failed call on this thread, or NULL. Valid until the next call.
 */
const char *milrec_last_error(void);

/*
 Library version as a static NUL-terminated string.
 */
const char *milrec_version(void);

/*
 Opens a directory written by `milrec prep`.

 # Safety
 `dir` must be a NUL-terminated string; `out` must be writable.
 */
enum MilrecStatus milrec_dataset_open(const char *dir, struct MilrecDataset **out_handle);

/*
 # Safety
 `handle` must come from [`milrec_dataset_open`] and not be freed twice. NULL is a no-op.
 */
void milrec_dataset_free(struct MilrecDataset *handle);

/*
 # Safety
 `handle` must be a live dataset; the out pointers must be writable.
 */
enum MilrecStatus milrec_dataset_dims(const struct MilrecDataset *handle,
                                      uint32_t *n_users,
                                      uint32_t *n_items);

/*
 Loads a checkpoint and its `.meta` sidecar.

 # Safety
 `path` must be a NUL-terminated string; `out` must be writable.
 */
enum MilrecStatus milrec_model_load(const char *path, struct MilrecModel **out_handle);

/*
 # Safety
 `handle` must come from [`milrec_model_load`] and not be freed twice. NULL is a no-op.
 */
void milrec_model_free(struct MilrecModel *handle);

/*
 # Safety
 `handle` must be a live model; the out pointers must be writable.
 */
enum MilrecStatus milrec_model_dims(const struct MilrecModel *handle,
                                    uint32_t *n_users,
                                    uint32_t *n_items,
                                    uint32_t *dim);

/*
 Fails with `MILREC_STATUS_INPUT` unless the dataset has the model's vocabularies.

 # Safety
 Both handles must be live.
 */
enum MilrecStatus milrec_model_check_dataset(const struct MilrecModel *model,
                                             const struct MilrecDataset *dataset);

/*
 Writes the model's score for every item (`n_items` values) for `user`.

 # Safety
 Handles must be live; `scores` must hold `len` doubles.
 */
enum MilrecStatus milrec_model_scores(const struct MilrecModel *model,
                                      const struct MilrecDataset *dataset,
                                      uint32_t user,
                                      double *scores,
                                      size_t len);

/*
 Ranks the `k` best items for `user`, skipping items seen in train or validation.
 Ties go to the lower index. `*written` receives the number of entries filled.

 # Safety
 Handles must be live; `items` and `scores` must hold `k` entries each.
 */
enum MilrecStatus milrec_predict_topk(const struct MilrecModel *model,
                                      const struct MilrecDataset *dataset,
                                      uint32_t user,
                                      uint32_t k,
                                      uint32_t *items,
                                      double *scores,
                                      uint32_t *written);

/*
 Test-split metrics as a JSON object (`recall@K`, `ndcg@K`, `nov_ndcg@K`, `users`,
 `nov_excluded_pairs`). `ks` may be NULL with `n_ks == 0` for the default cutoffs.
 The string must be released with [`milrec_string_free`].

 # Safety
 Handles must be live; `ks` must hold `n_ks` values; `json` must be writable.
 */
enum MilrecStatus milrec_evaluate_json(const struct MilrecModel *model,
                                       const struct MilrecDataset *dataset,
                                       const uint32_t *ks,
                                       size_t n_ks,
                                       uint32_t threads,
                                       char **json);

/*
 # Safety
 `s` must come from this library and not be freed twice. NULL is a no-op.
 */
void milrec_string_free(char *s);

/*
 Point-wise loss and its derivative with respect to `pred`, using the default
 hyper-parameters of the named objective (`square_conf`, `ce_point` or `mil`).

 # Safety
 `loss_name` must be a NUL-terminated string; the out pointers must be writable.
 */
enum MilrecStatus milrec_point_loss(const char *loss_name,
                                    int8_t label,
                                    double pred,
                                    double *loss,
                                    double *grad);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MILREC_H */
