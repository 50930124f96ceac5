#ifndef NTFD_H
#define NTFD_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum NtfdStatus {
  NTFD_STATUS_OK = 0,
  NTFD_STATUS_NULL_POINTER = 1,
  NTFD_STATUS_INVALID_ARGUMENT = 2,
  NTFD_STATUS_NUMERICAL = 3,
  NTFD_STATUS_IO = 4,
  NTFD_STATUS_CHECKS_FAILED = 5,
  NTFD_STATUS_PANIC = 6,
} NtfdStatus;

typedef struct NtfdGenerator NtfdGenerator;

typedef struct NtfdKet NtfdKet;

typedef struct NtfdSpace NtfdSpace;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or NULL. Valid until the
 * next failing call on the same thread.
 */
const char *ntfd_last_error(void);

/**
 * Release a string returned by this library.
 *
 * # Safety
 * `s` must come from this library or be NULL.
 */
void ntfd_string_free(char *s);

/**
 * # Safety
 * `out` must be a valid pointer.
 */
enum NtfdStatus ntfd_space_new(size_t cutoff, size_t guard_levels, struct NtfdSpace **out);

/**
 * # Safety
 * `s` must come from `ntfd_space_new` or be NULL.
 */
void ntfd_space_free(struct NtfdSpace *s);

/**
 * Dimension `(N+1)²` of the doubled space, 0 for NULL.
 *
 * # Safety
 * `s` must be a live handle or NULL.
 */
size_t ntfd_space_dim(const struct NtfdSpace *s);

/**
 * # Safety
 * Handles must be live; `out` must be valid.
 */
enum NtfdStatus ntfd_oscillator_generator(const struct NtfdSpace *s,
                                          double omega,
                                          double kappa,
                                          double nbar,
                                          double nu,
                                          struct NtfdGenerator **out);

/**
 * `unitary = 0` gives the master-equation generator, otherwise the one
 * implied by unitary noise.
 *
 * # Safety
 * Handles must be live; `out` must be valid.
 */
enum NtfdStatus ntfd_kramers_generator(const struct NtfdSpace *s,
                                       double mass,
                                       double omega,
                                       double kappa,
                                       double nbar,
                                       int32_t unitary,
                                       struct NtfdGenerator **out);

/**
 * # Safety
 * `g` must come from this library or be NULL.
 */
void ntfd_generator_free(struct NtfdGenerator *g);

/**
 * Guarded max-abs of `⟨1|Ĥ` and `‖(iĤ)~ − iĤ‖_max`.
 *
 * # Safety
 * `g` must be live; outputs may be NULL.
 */
enum NtfdStatus ntfd_generator_residuals(const struct NtfdGenerator *g,
                                         double *left_zero,
                                         double *tildian);

/**
 * Thermal vacuum with occupation `n0`, displaced by `alpha_re + i alpha_im`.
 *
 * # Safety
 * Handles must be live; `out` must be valid.
 */
enum NtfdStatus ntfd_ket_vacuum(const struct NtfdSpace *s,
                                double n0,
                                double alpha_re,
                                double alpha_im,
                                struct NtfdKet **out);

/**
 * # Safety
 * `k` must come from this library or be NULL.
 */
void ntfd_ket_free(struct NtfdKet *k);

/**
 * Copy the amplitudes into `re[len]` and `im[len]`; `len` must equal the
 * space dimension.
 *
 * # Safety
 * `re` and `im` must hold `len` doubles.
 */
enum NtfdStatus ntfd_ket_amplitudes(const struct NtfdKet *k, double *re, double *im, size_t len);

/**
 * `⟨1|a†a|ket⟩`.
 *
 * # Safety
 * `k` must be live; `out` must be valid.
 */
enum NtfdStatus ntfd_ket_occupation(const struct NtfdKet *k, double *out);

/**
 * RK4 evolution to `t_end`; `t_end` must be a multiple of `dt`.
 *
 * # Safety
 * Handles must be live; `out` must be valid.
 */
enum NtfdStatus ntfd_evolve(const struct NtfdGenerator *g,
                            const struct NtfdKet *k,
                            double t_end,
                            double dt,
                            struct NtfdKet **out);

/**
 * `n̄ + (n0 − n̄)e^{−2κt}`.
 */
double ntfd_boltzmann(double n0, double nbar, double kappa, double t);

/**
 * Run a named scenario (`oscillator-nonunitary`, `kramers-unitary`, ...)
 * with a `key = value` config (may be NULL). Data files are written to
 * `out_dir` when it is not NULL. The JSON report is returned through
 * `report_json` (free with `ntfd_string_free`). Returns `ChecksFailed`
 * when the run completed but a check failed.
 *
 * # Safety
 * Strings must be NUL-terminated; `report_json` may be NULL.
 */
enum NtfdStatus ntfd_run_scenario(const char *name,
                                  const char *config,
                                  const char *out_dir,
                                  char **report_json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NTFD_H */
