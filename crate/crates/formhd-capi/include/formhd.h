#ifndef FORMHD_H
#define FORMHD_H

/* Generated by cbindgen from the formhd-capi crate; edit the Rust source, not this file. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status of one call. Nonzero values follow the command line exit codes
 * where one exists: 2 for configuration, 3 for numerics, 4 for validation.
 */
typedef enum {
  FORMHD_STATUS_OK = 0,
  /**
   * An internal error outside the other categories, I/O included.
   */
  FORMHD_STATUS_RUNTIME_ERROR = 1,
  /**
   * The input can never run: malformed TOML, bad mesh, bad closure.
   */
  FORMHD_STATUS_CONFIG_ERROR = 2,
  /**
   * The arithmetic failed mid-run: blow-up, density floor, cold spot.
   */
  FORMHD_STATUS_NUMERIC_ERROR = 3,
  /**
   * A validator rejected the input, or a run finished with failed checks.
   */
  FORMHD_STATUS_VALIDATION_ERROR = 4,
  /**
   * A required pointer argument was null.
   */
  FORMHD_STATUS_NULL_ARGUMENT = 5,
  /**
   * A string argument was not valid UTF-8.
   */
  FORMHD_STATUS_INVALID_UTF8 = 6,
  /**
   * The library panicked; see `formhd_last_error`.
   */
  FORMHD_STATUS_PANIC = 7,
} FormhdStatus;

/**
 * Opaque parsed-and-validated scenario.
 */
typedef struct FormhdScenario FormhdScenario;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static string; do not free.
 */
const char *formhd_version(void);

/**
 * Message of the most recent failure on this thread; empty if none.
 * Borrowed: valid until this thread calls the library again, do not free.
 */
const char *formhd_last_error(void);

/**
 * Free a string returned through an out-parameter. Null is a no-op.
 *
 * # Safety
 * `s` must have been produced by this library and not freed before.
 */
void formhd_string_free(char *s);

/**
 * Parse and validate a scenario from TOML text.
 *
 * # Safety
 * `toml_text` must be a NUL-terminated string, `out` a valid location.
 */
FormhdStatus formhd_scenario_parse(const char *toml_text, FormhdScenario **out);

/**
 * Parse and validate a scenario from a TOML file on disk.
 *
 * # Safety
 * `path` must be a NUL-terminated string, `out` a valid location.
 */
FormhdStatus formhd_scenario_load(const char *path, FormhdScenario **out);

/**
 * Free a scenario handle. Null is a no-op.
 *
 * # Safety
 * `scenario` must have come from this library and not be freed twice.
 */
void formhd_scenario_free(FormhdScenario *scenario);

/**
 * Run a scenario, writing the CSV report, summary and optional checkpoint
 * under `artifact_dir` with the given base name. On success and on the
 * two run-outcome failures the summary JSON is returned through
 * `summary_json` (if non-null): `NumericError` means the run blew up and
 * the artifacts are partial, `ValidationError` means it finished but a
 * configured check failed.
 *
 * # Safety
 * Pointer arguments follow the module contract.
 */
FormhdStatus formhd_scenario_run(const FormhdScenario *scenario,
                                 const char *name,
                                 const char *artifact_dir,
                                 char **summary_json);

/**
 * Validate a scenario's closure against reciprocity and the isotropy
 * tables, returning the report as JSON. `ValidationError` means the
 * report was produced and says no.
 *
 * # Safety
 * Pointer arguments follow the module contract.
 */
FormhdStatus formhd_scenario_validate(const FormhdScenario *scenario,
                                      uint32_t samples,
                                      uint64_t seed,
                                      char **report_json);

/**
 * Run the built-in verification suites with the given seed and return
 * the report as JSON. `ValidationError` means at least one suite failed.
 *
 * # Safety
 * `report_json` may be null if the caller only wants the status.
 */
FormhdStatus formhd_selfcheck(uint64_t seed, char **report_json);

/**
 * Compute the symmetry classification tables for ambient dimension `n`
 * (2 or 3) and return them as JSON.
 *
 * # Safety
 * `report_json` may be null if the caller only wants the status.
 */
FormhdStatus formhd_curie_table(uint32_t n, uint32_t samples, uint64_t seed, char **report_json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FORMHD_H */
