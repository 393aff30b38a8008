#ifndef QBENCH_H
#define QBENCH_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum QbStatus {
  QB_STATUS_OK = 0,
  QB_STATUS_NULL_POINTER = 1,
  QB_STATUS_INVALID_UTF8 = 2,
  QB_STATUS_CONFIG = 3,
  QB_STATUS_RUNTIME = 4,
  QB_STATUS_OUT_OF_RANGE = 5,
  QB_STATUS_PANIC = 6,
} QbStatus;

/*
 A resolved scenario configuration.
 */
typedef struct QbConfig QbConfig;

/*
 Outputs of one scenario run, kept in memory.
 */
typedef struct QbRun QbRun;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Copy of the calling thread's last error message, or null when the last
 call succeeded.
 */
char *qb_last_error(void);

/*
 # Safety
 `s` must be null or a string returned by this library.
 */
void qb_string_free(char *s);

/*
 Parses a JSON configuration document and resolves it against defaults.

 # Safety
 `json` must be a nul-terminated string and `out` a valid pointer.
 */
enum QbStatus qb_config_from_json(const char *json, struct QbConfig **out);

/*
 # Safety
 `config` must be null or a handle from [`qb_config_from_json`].
 */
void qb_config_free(struct QbConfig *config);

/*
 Runs the scenario on `workers` threads (0 picks the core count). The
 outputs do not depend on `workers`.

 # Safety
 `config` must be a live handle and `out` a valid pointer.
 */
enum QbStatus qb_run(const struct QbConfig *config, size_t workers, struct QbRun **out);

/*
 # Safety
 `run` must be null or a handle from [`qb_run`].
 */
void qb_run_free(struct QbRun *run);

/*
 Number of emitted files.

 # Safety
 `run` must be a live handle.
 */
enum QbStatus qb_run_file_count(const struct QbRun *run, size_t *out);

/*
 Name and contents of file `index`. Both pointers stay valid until the
 run handle is freed.

 # Safety
 `run` must be a live handle; the output pointers must be valid.
 */
enum QbStatus qb_run_file(const struct QbRun *run,
                          size_t index,
                          const char **name,
                          const uint8_t **data,
                          size_t *len);

/*
 1 when every claims-suite verdict matched its expectation (always 1 for
 other scenarios), 0 otherwise.

 # Safety
 `run` must be a live handle.
 */
enum QbStatus qb_run_claims_ok(const struct QbRun *run, int32_t *out);

/*
 Writes every file and `manifest.json` into `dir`.

 # Safety
 `run` must be a live handle and `dir` a nul-terminated string.
 */
enum QbStatus qb_run_write(const struct QbRun *run, const char *dir);

/*
 A shipped JSON schema by name, as a string to release with
 [`qb_string_free`].

 # Safety
 `name` must be a nul-terminated string and `out` a valid pointer.
 */
enum QbStatus qb_schema(const char *name, char **out);

/*
 CHSH value of the pair state at beam-splitter angles (a1, a2; b1, b2).

 # Safety
 `out` must be a valid pointer.
 */
enum QbStatus qb_chsh_value(double a1, double a2, double b1, double b2, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QBENCH_H */
