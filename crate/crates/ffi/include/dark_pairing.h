#ifndef DARK_PAIRING_H
#define DARK_PAIRING_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes. The first seven match the command-line exit codes.
 */
typedef enum DpStatus {
  DP_STATUS_OK = 0,
  DP_STATUS_CHECK_FAILED = 1,
  DP_STATUS_CONFIG = 2,
  DP_STATUS_CAP = 3,
  DP_STATUS_IO = 4,
  DP_STATUS_NO_CONVERGENCE = 5,
  DP_STATUS_OTHER = 6,
  DP_STATUS_NULL_POINTER = 7,
  DP_STATUS_INVALID_UTF8 = 8,
  DP_STATUS_PANIC = 9,
} DpStatus;

/**
 * A lattice, its mode table and the run configuration it came from.
 */
typedef struct DpLattice DpLattice;

/**
 * Result of the verification battery.
 */
typedef struct DpReport DpReport;

/**
 * A state vector with exact rational amplitudes.
 */
typedef struct DpState DpState;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *dp_version(void);

/**
 * Message of the last failed call on this thread, or NULL.
 * The pointer stays valid until the next library call on the same thread.
 */
const char *dp_last_error(void);

/**
 * # Safety
 * `s` must be NULL or a string returned by this library and not yet freed.
 */
void dp_string_free(char *s);

/**
 * Builds a lattice from a run-configuration JSON document.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum DpStatus dp_lattice_from_json(const char *json, struct DpLattice **out);

/**
 * # Safety
 * `lattice` must be NULL or a handle from [`dp_lattice_from_json`] not yet freed.
 */
void dp_lattice_free(struct DpLattice *lattice);

/**
 * Number of modes in the Fock space, 0 for NULL.
 *
 * # Safety
 * `lattice` must be NULL or a live handle.
 */
size_t dp_lattice_mode_count(const struct DpLattice *lattice);

/**
 * Particle number of the pair state, frozen core included.
 *
 * # Safety
 * `lattice` must be NULL or a live handle.
 */
size_t dp_lattice_nc_particles(const struct DpLattice *lattice);

/**
 * Free energy of the pair state, frozen core included.
 *
 * # Safety
 * `lattice` must be a live handle; `out` must be writable.
 */
enum DpStatus dp_lattice_nc_energy(const struct DpLattice *lattice, double *out);

/**
 * Mode table as a JSON array; free with [`dp_string_free`].
 *
 * # Safety
 * `lattice` must be a live handle; `out` must be writable.
 */
enum DpStatus dp_lattice_modes_json(const struct DpLattice *lattice, char **out);

/**
 * Builds the pair state on the lattice.
 *
 * # Safety
 * `lattice` must be a live handle; `out` must be writable.
 */
enum DpStatus dp_nc_state(const struct DpLattice *lattice, struct DpState **out);

/**
 * # Safety
 * `state` must be NULL or a handle from [`dp_nc_state`] not yet freed.
 */
void dp_state_free(struct DpState *state);

/**
 * Number of basis states with nonzero amplitude, 0 for NULL.
 *
 * # Safety
 * `state` must be NULL or a live handle.
 */
size_t dp_state_term_count(const struct DpState *state);

/**
 * Euclidean norm, 0 for NULL.
 *
 * # Safety
 * `state` must be NULL or a live handle.
 */
double dp_state_norm(const struct DpState *state);

/**
 * One JSON line per basis state; free with [`dp_string_free`].
 *
 * # Safety
 * `state` must be a live handle; `out` must be writable.
 */
enum DpStatus dp_state_to_jsonl(const struct DpState *state, char **out);

/**
 * `|W|NC>| / (|W|_1 |NC|)` at coupling `g_num / g_den`, evaluated exactly
 * and converted at the end.
 *
 * # Safety
 * `lattice` and `state` must be live handles; `out` must be writable.
 */
enum DpStatus dp_interaction_residual(const struct DpLattice *lattice,
                                      const struct DpState *state,
                                      int64_t g_num,
                                      int64_t g_den,
                                      double *out);

/**
 * Runs the identity battery with the lattice's configuration.
 * Returns `DP_STATUS_CHECK_FAILED` with a valid report when a check fails.
 *
 * # Safety
 * `lattice` must be a live handle; `out` must be writable.
 */
enum DpStatus dp_verify(const struct DpLattice *lattice, struct DpReport **out);

/**
 * # Safety
 * `report` must be NULL or a handle from [`dp_verify`] not yet freed.
 */
void dp_report_free(struct DpReport *report);

/**
 * 1 when every check passed, 0 otherwise or for NULL.
 *
 * # Safety
 * `report` must be NULL or a live handle.
 */
int32_t dp_report_passed(const struct DpReport *report);

/**
 * Number of checks in the report, 0 for NULL.
 *
 * # Safety
 * `report` must be NULL or a live handle.
 */
size_t dp_report_check_count(const struct DpReport *report);

/**
 * The report as JSON; free with [`dp_string_free`].
 *
 * # Safety
 * `report` must be a live handle; `out` must be writable.
 */
enum DpStatus dp_report_to_json(const struct DpReport *report, char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DARK_PAIRING_H */
