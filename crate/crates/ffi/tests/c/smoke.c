#include <math.h>
#include <stdio.h>
#include <stdlib.h>

#include "wigner_vlasov.h"

#define CHECK(call)                                                              \
  do {                                                                           \
    WvStatus s_ = (call);                                                        \
    if (s_ != WV_STATUS_OK) {                                                    \
      fprintf(stderr, "%s -> %d: %s\n", #call, (int)s_, wv_last_error_message()); \
      return 1;                                                                  \
    }                                                                            \
  } while (0)

int main(void) {
  WvGrid *grid = NULL;
  WvPotential *pot = NULL;
  WvField *f = NULL;
  WvSolver *solver = NULL;
  size_t nx = 0, nv = 0;
  double m0 = 0, m1 = 0, l0 = 0, l1 = 0, phase = 0;

  CHECK(wv_grid_new(32, 6.283185307179586, 0.0, 64, 20.0, &grid));
  CHECK(wv_grid_shape(grid, &nx, &nv));
  CHECK(wv_potential_new(WV_POTENTIAL_KIND_CONTACT, 1.0, 0.0, &pot));
  CHECK(wv_field_modulated_maxwellian(grid, 0.1, 1.0, &f));
  CHECK(wv_field_mass(f, &m0));
  CHECK(wv_field_l2_norm(f, &l0));
  CHECK(wv_solver_new(pot, 0.1, 0.01, &solver));
  CHECK(wv_solver_step(solver, f, 20, &phase));
  CHECK(wv_field_mass(f, &m1));
  CHECK(wv_field_l2_norm(f, &l1));

  double *rho = malloc(nx * sizeof(double));
  CHECK(wv_field_density(f, rho, nx));
  if (wv_field_density(f, rho, nx + 1) != WV_STATUS_BUFFER_SIZE) return 2;
  if (wv_grid_new(0, 1.0, 0.0, 8, 1.0, &grid) != WV_STATUS_INVALID_GRID) return 3;
  if (wv_last_error_message() == NULL) return 4;
  free(rho);

  printf("nx=%zu nv=%zu mass_drift=%.3e l2_drift=%.3e version=%s\n", nx, nv,
         fabs(m1 - m0) / m0, fabs(l1 - l0) / l0, wv_version());
  if (fabs(m1 - m0) / m0 > 1e-12 || fabs(l1 - l0) / l0 > 1e-12) return 5;

  wv_solver_free(solver);
  wv_field_free(f);
  wv_potential_free(pot);
  wv_grid_free(grid);
  return 0;
}
