#ifndef WIGNER_VLASOV_H
#define WIGNER_VLASOV_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum WvStatus {
  WV_STATUS_OK = 0,
  WV_STATUS_NULL_POINTER = 1,
  WV_STATUS_INVALID_ARGUMENT = 2,
  WV_STATUS_INVALID_GRID = 3,
  WV_STATUS_GRID_MISMATCH = 4,
  WV_STATUS_BUFFER_SIZE = 5,
  WV_STATUS_NUMERICAL = 6,
  WV_STATUS_IO = 7,
  WV_STATUS_CONFIG = 8,
  WV_STATUS_PANIC = 9,
} WvStatus;

typedef enum WvPotentialKind {
  // `V_hat = strength`.
  WV_POTENTIAL_KIND_CONTACT = 0,
  // `V_hat(xi) = strength / (1 + xi^2)`.
  WV_POTENTIAL_KIND_SCREENED_COULOMB = 1,
  // `V_hat(xi) = strength exp(-width |xi|)`.
  WV_POTENTIAL_KIND_LORENTZIAN = 2,
} WvPotentialKind;

typedef enum WvProfileKind {
  // Parameters: `sigma`, unused.
  WV_PROFILE_KIND_MAXWELLIAN = 0,
  // Parameters: `u`, `sigma`.
  WV_PROFILE_KIND_TWO_STREAM = 1,
  // Parameters: `center`, `width`.
  WV_PROFILE_KIND_BUMP = 2,
} WvProfileKind;

typedef enum WvPenroseKind {
  WV_PENROSE_KIND_QUANT = 0,
  WV_PENROSE_KIND_VB = 1,
  WV_PENROSE_KIND_VP = 2,
} WvPenroseKind;

typedef struct WvField WvField;

typedef struct WvGrid WvGrid;

typedef struct WvPotential WvPotential;

typedef struct WvProfile WvProfile;

// A Strang splitting integrator for one model and time step.
typedef struct WvSolver WvSolver;

// Outcome of [`wv_penrose_margin`].
typedef struct WvMargin {
  // Smallest sampled `|1 - P|`.
  double margin;
  double gamma;
  double tau;
  double eta;
  // Bound on `|P|` outside the sampled box.
  double envelope;
  double lower_bound;
  bool certified;
} WvMargin;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failing call on this thread, or NULL. The pointer
// stays valid until the next failing call on the same thread.
const char *wv_last_error_message(void);

void wv_clear_last_error(void);

// Static NUL-terminated version string.
const char *wv_version(void);

// `nx` points on `[x0, x0 + lx)` times `nv` points on `[-lv/2, lv/2)`.
//
// # Safety
// `out` must be a valid pointer.
enum WvStatus wv_grid_new(size_t nx,
                          double lx,
                          double x0,
                          size_t nv,
                          double lv,
                          struct WvGrid **out);

// # Safety
// `grid` must be NULL or a handle from [`wv_grid_new`] not yet freed.
void wv_grid_free(struct WvGrid *grid);

// # Safety
// All pointers must be valid.
enum WvStatus wv_grid_shape(const struct WvGrid *grid, size_t *nx, size_t *nv);

// # Safety
// `out` must be a valid pointer.
enum WvStatus wv_potential_new(enum WvPotentialKind kind,
                               double strength,
                               double width,
                               struct WvPotential **out);

// # Safety
// `pot` must be NULL or a live handle.
void wv_potential_free(struct WvPotential *pot);

// Real field from `nx * nv` samples.
//
// # Safety
// `samples` must point to `len` readable doubles.
enum WvStatus wv_field_from_samples(const struct WvGrid *grid,
                                    const double *samples,
                                    size_t len,
                                    struct WvField **out);

// `(1 + alpha cos(k x)) M(v)` with the unit Maxwellian `M`.
//
// # Safety
// Pointers must be valid.
enum WvStatus wv_field_modulated_maxwellian(const struct WvGrid *grid,
                                            double alpha,
                                            double k,
                                            struct WvField **out);

// # Safety
// `field` must be NULL or a live handle.
void wv_field_free(struct WvField *field);

// Real parts of the physical samples into `out[0..nx*nv]`.
//
// # Safety
// `out` must point to `len` writable doubles.
enum WvStatus wv_field_samples(const struct WvField *field, double *out, size_t len);

// Density `rho(x) = int f dv` into `out[0..nx]`.
//
// # Safety
// `out` must point to `len` writable doubles.
enum WvStatus wv_field_density(const struct WvField *field, double *out, size_t len);

// # Safety
// Pointers must be valid.
enum WvStatus wv_field_mass(const struct WvField *field, double *out);

// # Safety
// Pointers must be valid.
enum WvStatus wv_field_l2_norm(const struct WvField *field, double *out);

// Binary checkpoint; `eps <= 0` records a classical field.
//
// # Safety
// `path` must be a NUL-terminated string.
enum WvStatus wv_field_write_checkpoint(const struct WvField *field,
                                        const char *path,
                                        double eps,
                                        double t);

// Wigner integrator for `eps` in `(0, 1]`, Vlasov-Benney for `eps == 0`.
//
// # Safety
// Pointers must be valid.
enum WvStatus wv_solver_new(const struct WvPotential *pot,
                            double eps,
                            double dt,
                            struct WvSolver **out);

// # Safety
// `solver` must be NULL or a live handle.
void wv_solver_free(struct WvSolver *solver);

// Advances `field` in place by `steps` Strang steps; `max_phase` (may be
// NULL) receives the largest kick phase seen.
//
// # Safety
// `solver` and `field` must be live handles.
enum WvStatus wv_solver_step(const struct WvSolver *solver,
                             struct WvField *field,
                             size_t steps,
                             double *max_phase);

// # Safety
// `out` must be a valid pointer.
enum WvStatus wv_profile_new(enum WvProfileKind kind, double a, double b, struct WvProfile **out);

// # Safety
// `prof` must be NULL or a live handle.
void wv_profile_free(struct WvProfile *prof);

// Penrose function at `(gamma, tau, eta)`; `gamma == 0` takes the limit
// `gamma -> 0+`.
//
// # Safety
// Handles must be live, `re` and `im` valid.
enum WvStatus wv_penrose(enum WvPenroseKind kind,
                         double gamma,
                         double tau,
                         double eta,
                         const struct WvProfile *prof,
                         const struct WvPotential *pot,
                         double *re,
                         double *im);

// Margin search over the default box with `refine_levels` refinements.
//
// # Safety
// Handles must be live, `out` valid.
enum WvStatus wv_penrose_margin(enum WvPenroseKind kind,
                                const struct WvProfile *prof,
                                const struct WvPotential *pot,
                                size_t refine_levels,
                                struct WvMargin *out);

// Runs the experiment described by a TOML file, writing into `out_dir`;
// `workers == 0` uses every core.
//
// # Safety
// Both paths must be NUL-terminated strings.
enum WvStatus wv_run_experiment(const char *config, const char *out_dir, size_t workers);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* WIGNER_VLASOV_H */
