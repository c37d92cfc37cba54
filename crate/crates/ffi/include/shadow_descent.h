#ifndef SHADOW_DESCENT_H
#define SHADOW_DESCENT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SsdStatus {
  SSD_STATUS_OK = 0,
  SSD_STATUS_NULL_POINTER = 1,
  SSD_STATUS_INVALID_ARGUMENT = 2,
  SSD_STATUS_DIMENSION_MISMATCH = 3,
  SSD_STATUS_CAPACITY_EXCEEDED = 4,
  SSD_STATUS_INTERNAL = 5,
} SsdStatus;

/**
 * Update rule used by [`ssd_optimizer_step`].
 */
typedef enum SsdMethod {
  SSD_METHOD_SHADOW_TWO_CALL = 0,
  SSD_METHOD_SHADOW_FUSED = 1,
  SSD_METHOD_PARAMETER_SHIFT_SGD = 2,
} SsdMethod;

/**
 * Parameterized circuit handle.
 */
typedef struct SsdCircuit SsdCircuit;

/**
 * Observable handle: a real combination of Pauli strings.
 */
typedef struct SsdObservable SsdObservable;

/**
 * Optimizer state handle.
 */
typedef struct SsdOptimizer SsdOptimizer;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *ssd_last_error(void);

/**
 * RX layers with a CNOT ring; `n_qubits * n_layers` parameters.
 *
 * # Safety
 * `out` must be null or writable.
 */
enum SsdStatus ssd_circuit_basic_entangler(size_t n_qubits,
                                           size_t n_layers,
                                           struct SsdCircuit **out);

/**
 * RZ·RY·RZ layers with ranged CNOT rings; `3 * n_qubits * n_layers` parameters.
 *
 * # Safety
 * `out` must be null or writable.
 */
enum SsdStatus ssd_circuit_strongly_entangling(size_t n_qubits,
                                               size_t n_layers,
                                               struct SsdCircuit **out);

/**
 * # Safety
 * `circuit` must come from a circuit constructor and not be used afterwards.
 */
void ssd_circuit_free(struct SsdCircuit *circuit);

/**
 * Number of trainable parameters, or 0 for a null handle.
 *
 * # Safety
 * `circuit` must be null or a live handle.
 */
size_t ssd_circuit_num_params(const struct SsdCircuit *circuit);

/**
 * Replaces the data-encoding prefix with `H·RZ(features[i])` on each qubit.
 *
 * # Safety
 * `features` must point to `len` doubles.
 */
enum SsdStatus ssd_circuit_set_encoding(struct SsdCircuit *circuit,
                                        const double *features,
                                        size_t len);

/**
 * Empty observable on `n_qubits` qubits.
 *
 * # Safety
 * `out` must be null or writable.
 */
enum SsdStatus ssd_observable_new(size_t n_qubits, struct SsdObservable **out);

/**
 * Adds `coeff * P` where `paulis` is a string such as `"ZIXY"`, one letter per qubit.
 *
 * # Safety
 * `paulis` must be a NUL-terminated string.
 */
enum SsdStatus ssd_observable_add_term(struct SsdObservable *obs, double coeff, const char *paulis);

/**
 * # Safety
 * `obs` must come from [`ssd_observable_new`] and not be used afterwards.
 */
void ssd_observable_free(struct SsdObservable *obs);

/**
 * `f(θ)`; `shots = 0` selects the exact expectation.
 *
 * # Safety
 * `theta` must point to `d` doubles; `executions` may be null.
 */
enum SsdStatus ssd_eval_f(const struct SsdCircuit *circuit,
                          const struct SsdObservable *obs,
                          const double *theta,
                          size_t d,
                          uint64_t shots,
                          uint64_t seed,
                          double *out_value,
                          uint64_t *executions);

/**
 * Parameter-shift gradient written to `grad_out[0..d]`.
 *
 * # Safety
 * `theta` and `grad_out` must point to `d` doubles; `executions` may be null.
 */
enum SsdStatus ssd_psr_gradient(const struct SsdCircuit *circuit,
                                const struct SsdObservable *obs,
                                const double *theta,
                                size_t d,
                                uint64_t shots,
                                uint64_t seed,
                                double *grad_out,
                                uint64_t *executions);

/**
 * Directional derivative along `v` from inner-product circuits: two
 * executions, or one when `fused` is true.
 *
 * # Safety
 * `theta` and `v` must point to `d` doubles; `executions` may be null.
 */
enum SsdStatus ssd_estimate_shadow(const struct SsdCircuit *circuit,
                                   const struct SsdObservable *obs,
                                   const double *theta,
                                   const double *v,
                                   size_t d,
                                   uint64_t shots,
                                   uint64_t seed,
                                   bool fused,
                                   double *out_value,
                                   uint64_t *executions);

/**
 * Optimizer with constant step size `lr`, starting at `theta0`.
 *
 * # Safety
 * `theta0` must point to `d` doubles.
 */
enum SsdStatus ssd_optimizer_new(const double *theta0,
                                 size_t d,
                                 double lr,
                                 uint64_t seed,
                                 struct SsdOptimizer **out);

/**
 * One update of `opt` on `f(θ) = ⟨ψ(θ)|H|ψ(θ)⟩`.
 *
 * # Safety
 * All handles must be live.
 */
enum SsdStatus ssd_optimizer_step(struct SsdOptimizer *opt,
                                  const struct SsdCircuit *circuit,
                                  const struct SsdObservable *obs,
                                  enum SsdMethod method,
                                  uint64_t shots);

/**
 * Copies the current parameters into `theta_out[0..d]`.
 *
 * # Safety
 * `theta_out` must point to `d` doubles.
 */
enum SsdStatus ssd_optimizer_theta(const struct SsdOptimizer *opt, double *theta_out, size_t d);

/**
 * Cumulative circuit executions, or 0 for a null handle.
 *
 * # Safety
 * `opt` must be null or a live handle.
 */
uint64_t ssd_optimizer_executions(const struct SsdOptimizer *opt);

/**
 * # Safety
 * `opt` must come from [`ssd_optimizer_new`] and not be used afterwards.
 */
void ssd_optimizer_free(struct SsdOptimizer *opt);

/**
 * Largest fixed step size covered by the convergence guarantee.
 *
 * # Safety
 * `out` must be writable.
 */
enum SsdStatus ssd_recommended_alpha(double lipschitz,
                                     double eta2,
                                     double eps,
                                     double f0_gap,
                                     size_t d,
                                     double *out);

/**
 * Iterations needed to reach an ε-stationary point.
 *
 * # Safety
 * `out` must be writable.
 */
enum SsdStatus ssd_required_iterations(double lipschitz,
                                       double eta2,
                                       double eps,
                                       double f0_gap,
                                       size_t d,
                                       uint64_t *out);

/**
 * `d * h_norm`, an upper bound on the smoothness constant.
 */
double ssd_smoothness_bound(size_t d, double h_norm);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SHADOW_DESCENT_H */
