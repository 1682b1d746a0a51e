#ifndef CVCLONE_H
#define CVCLONE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CvProtocol {
  CV_PROTOCOL_TWO_PASS = 0,
  CV_PROTOCOL_SINGLE_PASS = 1,
  CV_PROTOCOL_ATOMS_LIGHT = 2,
  CV_PROTOCOL_ATOMS_LIGHT_UNSQUEEZED = 3,
  CV_PROTOCOL_ASYMMETRIC = 4,
} CvProtocol;

typedef enum CvOutcome {
  // Average over all homodyne outcomes.
  CV_OUTCOME_AVERAGED = 0,
  // Condition on the mean outcome.
  CV_OUTCOME_MEAN_VALUE = 1,
  // Condition on `forced_outcome`.
  CV_OUTCOME_FORCED = 2,
  // Monte Carlo over `trials` outcomes drawn from `seed`.
  CV_OUTCOME_SAMPLED = 3,
} CvOutcome;

// Result code of every fallible call.
typedef enum CvStatus {
  CV_STATUS_OK = 0,
  // A required pointer argument was null.
  CV_STATUS_NULL_POINTER = 1,
  // A parameter was out of range or inconsistent.
  CV_STATUS_INVALID_ARGUMENT = 2,
  // A covariance matrix violated the uncertainty relation.
  CV_STATUS_INVALID_COVARIANCE = 3,
  // A physical invariant failed during a protocol run.
  CV_STATUS_INVARIANT_VIOLATION = 4,
  // An output buffer was too small.
  CV_STATUS_BUFFER_TOO_SMALL = 5,
  // Internal panic; the library state is unchanged.
  CV_STATUS_PANIC = 6,
} CvStatus;

typedef enum CvAxis {
  CV_AXIS_X = 0,
  CV_AXIS_P = 1,
} CvAxis;

// Opaque protocol report.
typedef struct CvReport CvReport;

// Opaque Gaussian state.
typedef struct CvState CvState;

// Protocol parameters; obtain defaults from [`cv_protocol_config_default`].
typedef struct CvProtocolConfig {
  enum CvProtocol protocol;
  double alpha_x;
  double alpha_p;
  // Squeezed ancilla variance.
  double v;
  double kappa;
  double feedback_gain;
  enum CvOutcome outcome;
  double forced_outcome;
  uint64_t seed;
  uint64_t trials;
} CvProtocolConfig;

typedef struct CvFeasibility {
  double kappa;
  double optical_density;
  double eta;
  double bound;
  double margin;
  bool feasible;
  double required_optical_density;
} CvFeasibility;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *cv_version(void);

// Message describing the last failed call on this thread; empty after a
// successful call. Valid until the next `cv_*` call on this thread.
const char *cv_last_error_message(void);

// Single-pass symmetric cloner, vacuum input, `κ = 1`, averaged outcomes.
struct CvProtocolConfig cv_protocol_config_default(void);

// Coherent state with quadrature means `(alpha_x, alpha_p)`.
//
// # Safety
// `out` must be null or valid for writing one pointer.
enum CvStatus cv_state_coherent(double alpha_x, double alpha_p, struct CvState **out);

// Pure squeezed vacuum with variance `variance` along `axis`.
//
// # Safety
// `out` must be null or valid for writing one pointer.
enum CvStatus cv_state_squeezed_vacuum(double variance, enum CvAxis squeezed, struct CvState **out);

// Releases a state; null is ignored.
//
// # Safety
// `state` must be null or a handle returned by this library and not yet freed.
void cv_state_free(struct CvState *state);

// Number of modes, or 0 for a null handle.
//
// # Safety
// `state` must be null or a live handle.
size_t cv_state_num_modes(const struct CvState *state);

// Copies the `2n` quadrature means `(x1, p1, x2, p2, …)` into `out`.
//
// # Safety
// `state` must be a live handle and `out` valid for `len` doubles.
enum CvStatus cv_state_mean(const struct CvState *state, double *out, size_t len);

// Copies the `2n × 2n` covariance matrix into `out`, row-major.
//
// # Safety
// `state` must be a live handle and `out` valid for `len` doubles.
enum CvStatus cv_state_covariance(const struct CvState *state, double *out, size_t len);

// Fidelity of a single-mode state with the coherent state `(alpha_x, alpha_p)`.
//
// # Safety
// `state` must be a live handle and `out` valid for one double.
enum CvStatus cv_state_fidelity_with_coherent(const struct CvState *state,
                                              double alpha_x,
                                              double alpha_p,
                                              double *out);

// Serializes a state as JSON; free the string with [`cv_string_free`].
//
// # Safety
// `state` must be a live handle and `out` valid for writing one pointer.
enum CvStatus cv_state_to_json(const struct CvState *state, char **out);

// Runs a cloning protocol.
//
// # Safety
// `config` must point to a valid configuration and `out` be valid for
// writing one pointer.
enum CvStatus cv_run_protocol(const struct CvProtocolConfig *config, struct CvReport **out);

// Asymmetric cloner with caller-supplied single-mode ancillas.
//
// # Safety
// `config`, `ancilla_a` and `ancilla_b` must be valid; `out` valid for
// writing one pointer.
enum CvStatus cv_run_asymmetric_with_ancillas(const struct CvProtocolConfig *config,
                                              const struct CvState *ancilla_a,
                                              const struct CvState *ancilla_b,
                                              struct CvReport **out);

// Prepares ancilla A squeezed in x and B squeezed in p, both to variance `v`.
//
// # Safety
// `out_a` and `out_b` must be valid for writing one pointer each.
enum CvStatus cv_squeeze_prep(double v, struct CvState **out_a, struct CvState **out_b);

// Releases a report; null is ignored.
//
// # Safety
// `report` must be null or a handle returned by this library and not yet freed.
void cv_report_free(struct CvReport *report);

// Number of clones in a report, or 0 for a null handle.
//
// # Safety
// `report` must be null or a live handle.
size_t cv_report_num_clones(const struct CvReport *report);

// Simulated fidelity of clone `clone` (0 for A, 1 for B).
//
// # Safety
// `report` must be a live handle and `out` valid for one double.
enum CvStatus cv_report_fidelity(const struct CvReport *report, size_t clone, double *out);

// Closed-form fidelity of clone `clone`, or NaN when none applies.
//
// # Safety
// `report` must be a live handle and `out` valid for one double.
enum CvStatus cv_report_analytic_fidelity(const struct CvReport *report, size_t clone, double *out);

// Worst-case fidelity of clone `clone` over all coherent inputs.
//
// # Safety
// `report` must be a live handle and `out` valid for one double.
enum CvStatus cv_report_universal_fidelity(const struct CvReport *report,
                                           size_t clone,
                                           double *out);

// Single-mode state of clone `clone`; free it with [`cv_state_free`].
//
// # Safety
// `report` must be a live handle and `out` valid for writing one pointer.
enum CvStatus cv_report_clone_state(const struct CvReport *report,
                                    size_t clone,
                                    struct CvState **out);

// Serializes a report as JSON; free the string with [`cv_string_free`].
//
// # Safety
// `report` must be a live handle and `out` valid for writing one pointer.
enum CvStatus cv_report_to_json(const struct CvReport *report, char **out);

// Releases a string returned by this library; null is ignored.
//
// # Safety
// `s` must be null or a string returned by this library and not yet freed.
void cv_string_free(char *s);

// `κ = (σγ/(Aδ)) √(N_L N_A) / 2` with `σ = λ²/(2π)`, SI units.
//
// # Safety
// `out` must be valid for one double.
enum CvStatus cv_kappa_from_physical(double lambda,
                                     double gamma,
                                     double delta,
                                     double beam_area,
                                     double n_l,
                                     double n_a,
                                     double *out);

// Spontaneous-emission check for coupling `kappa` at `optical_density`.
//
// # Safety
// `out` must be valid for writing one [`CvFeasibility`].
enum CvStatus cv_feasibility_check(double kappa,
                                   double optical_density,
                                   double margin,
                                   struct CvFeasibility *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CVCLONE_H */
