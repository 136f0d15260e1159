/*
 * stroketk - vector scene-sketch toolkit
 *
 * C interface to the stroketk core: stroke-5 sketch codec, polyline
 * simplification, rasterization, synthetic paired-scene generation, the
 * hierarchical raster-to-vector decoder with its pretext training loop, and
 * triplet-loss retrieval with R@K evaluation.
 *
 * Conventions
 *   - Every fallible function returns stk_status; STK_OK is 0.
 *   - On failure, stk_last_error() returns a message for the calling thread,
 *     valid until the thread's next stroketk call.
 *   - Out-parameters are written only on STK_OK.
 *   - char** out-strings and stk_corpus* handles are owned by the caller:
 *     release them with stk_string_free / stk_corpus_free.
 *   - Structured inputs and outputs are JSON strings; file formats and JSON
 *     schemas are documented in docs/FORMAT.md.
 *   - Nothing here keeps global mutable state; handles are independent and
 *     may be used from different threads as long as a single handle is not
 *     mutated concurrently.
 */

#ifndef STROKETK_H
#define STROKETK_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum stk_status {
  STK_OK = 0,
  STK_ERR_VALIDATION = 1, /* invalid values, broken invariants, bad specs */
  STK_ERR_IO = 2,         /* missing or unreadable/unwritable files */
  STK_ERR_STRUCTURE = 3,  /* malformed stroke-5 sequences */
  STK_ERR_NUMERIC = 4,    /* NaN/Inf produced during numeric work */
  STK_ERR_CONFIG = 5,     /* unknown keys or schema violations in configs */
  STK_ERR_ARGUMENT = 6    /* null pointers and other API misuse */
} stk_status;

/* A corpus: an ordered list of vector sketches, each optionally paired with
 * a "photo" raster. Opaque; create via load/generate/split, release with
 * stk_corpus_free. */
typedef struct stk_corpus stk_corpus;

const char* stk_version(void);
const char* stk_last_error(void);

void stk_string_free(char* s);
void stk_corpus_free(stk_corpus* corpus);

/* ------------------------------------------------------------------ corpus */

/* NDJSON sketch files; see docs/FORMAT.md for the line schema. */
stk_status stk_corpus_load(const char* ndjson_path, stk_corpus** out);
stk_status stk_corpus_save(const stk_corpus* corpus, const char* ndjson_path);

/* Deterministic synthetic paired scenes. spec_json may be NULL or "{}" for
 * the defaults. */
stk_status stk_corpus_generate(uint64_t seed, size_t n, const char* spec_json,
                               stk_corpus** out);

size_t stk_corpus_size(const stk_corpus* corpus);

/* One sketch as its canonical NDJSON line. */
stk_status stk_corpus_sketch_json(const stk_corpus* corpus, size_t index, char** out_json);

/* Paired photos as <dir>/<sketch-id>.pgm. Loading requires every sketch's
 * photo to exist. */
stk_status stk_corpus_save_photos(const stk_corpus* corpus, const char* dir);
stk_status stk_corpus_load_photos(stk_corpus* corpus, const char* dir);

/* Per-sketch and corpus-level statistics as JSON. */
stk_status stk_corpus_stats_json(const stk_corpus* corpus, char** out_json);

/* In-place normalization of every sketch to a 1x1 canvas. */
stk_status stk_corpus_normalize(stk_corpus* corpus);

/* In-place RDP simplification. epsilon_norm is in normalized canvas units
 * (scaled per sketch by max(canvas_w, canvas_h)). Returns a report JSON. */
stk_status stk_corpus_simplify(stk_corpus* corpus, double epsilon_norm,
                               char** out_report_json);

/* Searches for the smallest epsilon whose total point count fits the budget. */
stk_status stk_corpus_simplify_budget(stk_corpus* corpus, size_t target_points,
                                      char** out_report_json);

/* Removes round(fraction * stroke_count) strokes per sketch from the start
 * (late = 0) or the end (late = 1) of the drawing order. */
stk_status stk_corpus_mask_strokes(stk_corpus* corpus, double fraction, int late);

/* Per-user split: floor(train_fraction * n) per user to train, remainder to
 * test; deterministic for a seed. out_warnings_json receives a JSON array. */
stk_status stk_corpus_split_by_user(const stk_corpus* corpus, double train_fraction,
                                    uint64_t seed, stk_corpus** out_train,
                                    stk_corpus** out_test, char** out_warnings_json);

/* Rasterizes every sketch to <dir>/<sketch-id>.pgm. */
stk_status stk_corpus_rasterize_dir(const stk_corpus* corpus, size_t width, size_t height,
                                    size_t thickness, const char* dir);

/* Mean stroke length per normalized drawing-time bin, as CSV (path may be
 * NULL to skip the file) plus a JSON summary. */
stk_status stk_corpus_coarse_to_fine(const stk_corpus* corpus, size_t n_bins,
                                     int use_timestamps, const char* csv_path,
                                     char** out_json);

/* ---------------------------------------------------------------- stroke-5 */

/* Stroke-5 NDJSON: one flat JSON array of [x, y, q1, q2, q3] rows per line. */
stk_status stk_corpus_save_stroke5(const stk_corpus* corpus, const char* path);
stk_status stk_corpus_load_stroke5(const char* path, stk_corpus** out);

/* The decoder start token (0, 0, 1, 0, 0). */
void stk_start_token(double out5[5]);

/* Ramer-Douglas-Peucker on a raw polyline. keep_idx must have room for n
 * entries; on return the first *keep_count of them are the surviving input
 * indices, in order. */
stk_status stk_rdp_simplify(const double* xs, const double* ys, size_t n, double epsilon,
                            size_t* keep_idx, size_t* keep_count);

/* ---------------------------------------------------------------- training */

/* Pretext task: trains encoder + hierarchical decoder to reconstruct each
 * sketch's stroke-5 sequence from its raster. Writes a checkpoint and a loss
 * curve CSV (curve_csv_path may be NULL); returns a summary JSON. */
stk_status stk_train_pretext(const stk_corpus* corpus, const char* config_json,
                             const char* checkpoint_path, const char* curve_csv_path,
                             char** out_summary_json);

/* Autoregressive sampling from a pretext checkpoint. options_json selects
 * the corpus index (or all), greedy/stochastic mode, seed, temperature and
 * unroll limits. The sampled sketches come back as a new corpus. */
stk_status stk_sample(const char* checkpoint_path, const stk_corpus* corpus,
                      const char* options_json, stk_corpus** out_sampled,
                      char** out_summary_json);

/* Triplet training of the shared-encoder embedding model on a paired corpus
 * (photos must be loaded). warm_start_checkpoint may be NULL or a pretext
 * checkpoint whose encoder weights seed the backbone. */
stk_status stk_train_retrieval(const stk_corpus* train_corpus, const char* config_json,
                               const char* warm_start_checkpoint,
                               const char* checkpoint_path, const char* curve_csv_path,
                               char** out_summary_json);

/* Ranks every test sketch against the gallery of test photos. Writes a
 * per-query ranking CSV when ranking_csv_path is non-NULL; the result JSON
 * carries r_at_1, r_at_10, n_queries, gallery_size. */
stk_status stk_eval_retrieval(const char* checkpoint_path, const stk_corpus* test_corpus,
                              const char* ranking_csv_path, char** out_result_json);

/* R@k after masking strokes from the chosen end of the drawing order, for
 * each fraction in mask_spec_json; emits CSV rows and a summary JSON. */
stk_status stk_mask_eval(const char* checkpoint_path, const stk_corpus* test_corpus,
                         const char* mask_spec_json, const char* csv_path,
                         char** out_summary_json);

#ifdef __cplusplus
}
#endif

#endif /* STROKETK_H */
