/* C interface of blowup-lab: radial blow-up laboratory for u_t = Δu + u⁵. */

#pragma once

/* Generated with cbindgen:0.29.4 */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes of every fallible call.
typedef enum BlStatus {
  BL_STATUS_OK = 0,
  BL_STATUS_INVALID_ARGUMENT = 1,
  BL_STATUS_DOMAIN_ERROR = 2,
  BL_STATUS_NUMERICAL_ERROR = 3,
  BL_STATUS_CONSTRAINT_VIOLATION = 4,
} BlStatus;

// Opaque parameter set (`k`, `A`, `T`, cutoffs, and the norm exponents).
typedef struct BlParams BlParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Version string of the library; the pointer stays valid for the process
// lifetime.
const char *bl_version(void);

// Copy the last error message of this thread into `buf` (NUL-terminated,
// truncated to `cap`). Returns the untruncated length.
//
// # Safety
// `buf` must point to `cap` writable bytes (or be NULL with `cap = 0`).
uintptr_t bl_last_error(char *buf, uintptr_t cap);

// Default parameter set (`k = 2` tuple passing every admissibility
// inequality). Returns an owned handle; release with [`bl_params_free`].
struct BlParams *bl_params_default(void);

// Parameter set with the given `k`, `A`, `T` on top of the default
// exponent tuple. Writes NULL and returns an error code when the set is
// inadmissible and `waive_constraints` is 0.
//
// # Safety
// `out` must be a valid pointer.
enum BlStatus bl_params_new(unsigned int k,
                            double big_a,
                            double t_end,
                            int waive_constraints,
                            struct BlParams **out);

// Replace the norm-exponent tuple `(β, ν, σ, a, a₂, ν₂)` and re-validate.
//
// # Safety
// `params` must be a live handle from `bl_params_*`.
enum BlStatus bl_params_set_exponents(struct BlParams *params,
                                      double beta,
                                      double nu,
                                      double sigma,
                                      double a,
                                      double a2,
                                      double nu2,
                                      int waive_constraints);

// Number of violated admissibility inequalities (0 for an admissible set).
//
// # Safety
// `params` must be a live handle.
int bl_params_violations(const struct BlParams *params);

// Release a parameter handle.
//
// # Safety
// `params` must come from `bl_params_*` and not be used afterwards.
void bl_params_free(struct BlParams *params);

// Bubble `w(y) = 3^{1/4}(1+y²)^{-1/2}` and its radial derivative.
//
// # Safety
// `value` and `derivative` must be valid or NULL (skipped).
enum BlStatus bl_bubble_w(double y, double *value, double *derivative);

// Dilation kernel `Z₀(y)`.
//
// # Safety
// As for [`bl_bubble_w`].
enum BlStatus bl_kernel_z0(double y, double *value, double *derivative);

// Corrector `J(y)` (tabulated ODE solution) and its derivative.
//
// # Safety
// As for [`bl_bubble_w`].
enum BlStatus bl_corrector_j(double y, double *value, double *derivative);

// Even Hermite polynomial `H_{2k}(x)` with `H_{2k}(0) = (-1)^k (2k)!/k!`.
//
// # Safety
// `out` must be valid.
enum BlStatus bl_hermite_even(unsigned int k, double x, double *out);

// Smallest eigenvalue of `-Δ - 5w⁴` and the gap to the next one, on a
// uniform radial grid with `n` cells reaching `y_max >= 30`.
//
// # Safety
// `lambda_minus` and `gap` must be valid or NULL.
enum BlStatus bl_negative_eigenvalue(double y_max,
                                     unsigned int n,
                                     double *lambda_minus,
                                     double *gap);

// `μ₀(t) = √3 A (T-t)^{2k}`.
//
// # Safety
// `params` must be a live handle; `out` valid.
enum BlStatus bl_mu0(const struct BlParams *params, double t, double *out);

// Glued first approximation `U₁(x, t)` on the leading scaling `μ = μ₀`.
//
// # Safety
// `params` must be a live handle; `out` valid.
enum BlStatus bl_u1(const struct BlParams *params, double x, double t, double *out);

// Relative inner/outer gap at the geometric-mean matching radius.
//
// # Safety
// `params` must be a live handle; `out` valid.
enum BlStatus bl_matching_mid_gap(const struct BlParams *params, double t, double *out);

// Half-order fractional integral of the sampled curve
// `(times, values)[len]`, written to `out[len]`.
//
// # Safety
// All arrays must hold `len` readable (resp. writable) doubles.
enum BlStatus bl_half_integral(const double *times,
                               const double *values,
                               uintptr_t len,
                               double *out);

// Solve the Abel equation `∫₀ᵗ α(s)(t-s)^{-1/2} ds = h(t)` for sampled
// `h` with `h(0) = 0`. Writes `α` at `times[1..len]` into
// `alpha_out[len-1]` and the forward-map sup residual into `residual`.
//
// # Safety
// Arrays as documented; `residual` may be NULL.
enum BlStatus bl_abel_solve(const double *times,
                            const double *h_values,
                            uintptr_t len,
                            double *alpha_out,
                            double *residual);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus
