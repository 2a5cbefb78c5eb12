#ifndef ILC_H
#define ILC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

#define ILC_LAW_P_TRANSPOSE 0

#define ILC_LAW_PARTIAL_ISOMETRY 1

#define ILC_LAW_NORM_OPTIMAL 2

typedef enum IlcStatus {
  ILC_STATUS_OK = 0,
  ILC_STATUS_NULL_POINTER = 1,
  ILC_STATUS_INVALID_ARGUMENT = 2,
  ILC_STATUS_DIMENSION_MISMATCH = 3,
  ILC_STATUS_NUMERICAL = 4,
  ILC_STATUS_BUFFER_TOO_SMALL = 5,
  ILC_STATUS_PANIC = 6,
} IlcStatus;

/**
 * Cached decomposition for fast-forwarding model iterations.
 */
typedef struct IlcFastForward IlcFastForward;

/**
 * Lifted (and possibly row-deleted) plant over a fixed horizon.
 */
typedef struct IlcLifted IlcLifted;

/**
 * Discretized SISO plant.
 */
typedef struct IlcPlant IlcPlant;

/**
 * World plant, model, law and desired output.
 */
typedef struct IlcProblem IlcProblem;

typedef struct IlcSwitchReport {
  size_t candidate_n;
  double r_model_n;
  double r_model_n1;
  double r_world_n;
  double r_world_n1;
  double model_slope;
  double world_slope;
  double jump;
  double slope_factor;
  bool recommend_switch;
} IlcSwitchReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread, or null if none.
 *
 * The pointer stays valid until the next failing call on the same thread.
 */
const char *ilc_last_error(void);

/**
 * Second-order plant `wn^2 / (s^2 + 2 zeta wn s + wn^2)` sampled with a zero-order hold.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum IlcStatus ilc_plant_second_order(double damping_ratio,
                                      double natural_frequency,
                                      double sample_period,
                                      struct IlcPlant **out);

/**
 * Third-order plant `(a / (s + a)) wn^2 / (s^2 + 2 zeta wn s + wn^2)` sampled with a zero-order hold.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum IlcStatus ilc_plant_third_order(double real_pole,
                                     double damping_ratio,
                                     double natural_frequency,
                                     double sample_period,
                                     struct IlcPlant **out);

/**
 * # Safety
 * `plant` must be null or a handle from this library not yet freed.
 */
void ilc_plant_free(struct IlcPlant *plant);

/**
 * State dimension of a plant, or 0 for a null handle.
 *
 * # Safety
 * `plant` must be null or a live handle.
 */
size_t ilc_plant_order(const struct IlcPlant *plant);

/**
 * Sampled zeros, largest modulus first.
 *
 * Writes up to `capacity` zeros into `re`/`im` and the total count into
 * `count`. Returns `BufferTooSmall` (with `count` set) if `capacity` is short.
 *
 * # Safety
 * `re` and `im` must each hold `capacity` writable doubles; `count` must be writable.
 */
enum IlcStatus ilc_plant_sampled_zeros(const struct IlcPlant *plant,
                                       double *re,
                                       double *im,
                                       size_t capacity,
                                       size_t *count);

/**
 * Lifts a plant over `horizon` steps and deletes the first `deleted_rows` output rows.
 *
 * # Safety
 * `plant` must be a live handle; `out` must be writable.
 */
enum IlcStatus ilc_lifted_build(const struct IlcPlant *plant,
                                size_t horizon,
                                size_t deleted_rows,
                                struct IlcLifted **out);

/**
 * # Safety
 * `lifted` must be null or a handle from this library not yet freed.
 */
void ilc_lifted_free(struct IlcLifted *lifted);

/**
 * Input length `N` and output length `N - d`.
 *
 * # Safety
 * `lifted` must be a live handle; both out-pointers must be writable.
 */
enum IlcStatus ilc_lifted_dims(const struct IlcLifted *lifted,
                               size_t *input_len,
                               size_t *output_len);

/**
 * `y = P u + Abar x0` over the tracked steps.
 *
 * # Safety
 * Each array must hold the stated number of doubles.
 */
enum IlcStatus ilc_lifted_output(const struct IlcLifted *lifted,
                                 const double *input,
                                 size_t input_len,
                                 const double *initial_state,
                                 size_t state_len,
                                 double *output,
                                 size_t output_len);

/**
 * Minimum-norm input reaching `desired` from `initial_state`.
 *
 * # Safety
 * Each array must hold the stated number of doubles.
 */
enum IlcStatus ilc_lifted_pseudo_inverse(const struct IlcLifted *lifted,
                                         const double *desired,
                                         size_t desired_len,
                                         const double *initial_state,
                                         size_t state_len,
                                         double *input,
                                         size_t input_len);

/**
 * Decomposes `I - P L` for the given model and law (`ILC_LAW_*`).
 *
 * # Safety
 * `model` must be a live handle; `out` must be writable.
 */
enum IlcStatus ilc_fast_forward_new(const struct IlcLifted *model,
                                    uint32_t law,
                                    double gain,
                                    struct IlcFastForward **out);

/**
 * # Safety
 * `ff` must be null or a handle from this library not yet freed.
 */
void ilc_fast_forward_free(struct IlcFastForward *ff);

/**
 * Input and error after `n` model iterations, in closed form.
 *
 * # Safety
 * Input arrays must hold `input_len` and `error_len` doubles; the output
 * arrays must hold the same counts and may not alias the inputs.
 */
enum IlcStatus ilc_fast_forward_advance(const struct IlcFastForward *ff,
                                        const double *input,
                                        size_t input_len,
                                        const double *error,
                                        size_t error_len,
                                        size_t n,
                                        double *input_out,
                                        double *error_out);

/**
 * The same state as [`ilc_fast_forward_advance`] by `n` explicit iterations.
 *
 * # Safety
 * As for [`ilc_fast_forward_advance`].
 */
enum IlcStatus ilc_fast_forward_explicit(const struct IlcFastForward *ff,
                                         const double *input,
                                         size_t input_len,
                                         const double *error,
                                         size_t error_len,
                                         size_t n,
                                         double *input_out,
                                         double *error_out);

/**
 * Learning problem with the gain built from `model`. A null
 * `initial_state` with `state_len` 0 means the zero state.
 *
 * # Safety
 * `world` and `model` must be live handles; arrays must hold the stated counts.
 */
enum IlcStatus ilc_problem_new(const struct IlcLifted *world,
                               const struct IlcLifted *model,
                               uint32_t law,
                               double gain,
                               const double *desired,
                               size_t desired_len,
                               const double *initial_state,
                               size_t state_len,
                               struct IlcProblem **out);

/**
 * # Safety
 * `problem` must be null or a handle from this library not yet freed.
 */
void ilc_problem_free(struct IlcProblem *problem);

/**
 * Switch test after `candidate_n` model iterations from `initial_input`.
 *
 * # Safety
 * `problem` must be a live handle; `initial_input` must hold `input_len`
 * doubles; `report` must be writable.
 */
enum IlcStatus ilc_problem_evaluate_switch(const struct IlcProblem *problem,
                                           const double *initial_input,
                                           size_t input_len,
                                           size_t candidate_n,
                                           double slope_factor,
                                           struct IlcSwitchReport *report);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ILC_H */
