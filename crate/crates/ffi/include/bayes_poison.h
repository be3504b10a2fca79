#ifndef BAYES_POISON_H
#define BAYES_POISON_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum BpStatus {
  BP_STATUS_OK = 0,
  BP_STATUS_NULL_POINTER = 1,
  BP_STATUS_INVALID_ARGUMENT = 2,
  BP_STATUS_CONFIG = 3,
  BP_STATUS_IO = 4,
  BP_STATUS_CONSTRAINT_VIOLATION = 5,
  BP_STATUS_UNSUPPORTED = 6,
  BP_STATUS_NUMERICAL = 7,
  BP_STATUS_INTERNAL = 8,
  BP_STATUS_PANIC = 9,
} BpStatus;

/*
 A validated run configuration.
 */
typedef struct BpConfig BpConfig;

/*
 The outcome of one attack job.
 */
typedef struct BpResult BpResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failure on this thread; empty if none. The pointer is
 owned by the library.
 */
const char *bp_last_error(void);

const char *bp_version(void);

/*
 Parses a JSON run configuration. Relative dataset paths resolve against
 `base_dir`, which may be null for the working directory.
 Requires: `json` and a non-null `base_dir` must be NUL-terminated strings; `out`
 must be writable.
 */
enum BpStatus bp_config_from_json(const char *json, const char *base_dir, struct BpConfig **out);

/*
 Requires: `path` must be a NUL-terminated string; `out` must be writable.
 */
enum BpStatus bp_config_load(const char *path, struct BpConfig **out);

/*
 Requires: `cfg` must come from this library and not be used afterwards.
 */
void bp_config_free(struct BpConfig *cfg);

/*
 Number of attacks listed in the configuration.
 Requires: `cfg` must be a live handle; `out` must be writable.
 */
enum BpStatus bp_config_attack_count(const struct BpConfig *cfg, size_t *out);

/*
 Runs attack `attack_index` on replication `replication` with run seed
 `seed`, then evaluates the result. Seeds match the command line tool.
 Requires: `cfg` must be a live handle; `out` must be writable.
 */
enum BpStatus bp_attack_run(const struct BpConfig *cfg,
                            size_t attack_index,
                            size_t replication,
                            uint64_t seed,
                            struct BpResult **out);

/*
 Requires: `res` must come from this library and not be used afterwards.
 */
void bp_result_free(struct BpResult *res);

/*
 Requires: `res` must be a live handle; `out` must be writable.
 */
enum BpStatus bp_result_weights_len(const struct BpResult *res, size_t *out);

/*
 Copies the integer weights into `buf`, which must hold exactly
 `bp_result_weights_len` values.
 Requires: `res` must be a live handle; `buf` must be writable for `len` doubles.
 */
enum BpStatus bp_result_weights(const struct BpResult *res, double *buf, size_t len);

/*
 KL to the target at the attack weights, and at `w = 1` when `baseline` is
 non-null. Unsupported when the target has no closed form or Laplace KL.
 Requires: `res` must be a live handle; `kl` and a non-null `baseline` must be
 writable.
 */
enum BpStatus bp_result_kl(const struct BpResult *res, double *kl, double *baseline);

/*
 The full result document as JSON. Release it with `bp_string_free`.
 Requires: `res` must be a live handle; `out` must be writable.
 */
enum BpStatus bp_result_to_json(const struct BpResult *res, char **out);

/*
 Requires: `s` must come from this library and not be used afterwards.
 */
void bp_string_free(char *s);

/*
 Euclidean projection of `v` onto the feasible set with budget `b` and cap
 `l`, written to `out`.
 Requires: `v` must be readable and `out` writable for `n` doubles.
 */
enum BpStatus bp_project(const double *v, size_t n, uint32_t b, uint32_t l, double *out);

/*
 Nearest integer point of the feasible set to a feasible `w`.
 Requires: `w` must be readable and `out` writable for `n` doubles.
 */
enum BpStatus bp_round(const double *w, size_t n, uint32_t b, uint32_t l, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BAYES_POISON_H */
