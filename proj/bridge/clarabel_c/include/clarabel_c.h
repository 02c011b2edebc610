#ifndef CLARABEL_C_H
#define CLARABEL_C_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

enum {
  CLARABEL_C_CONE_ZERO = 0,
  CLARABEL_C_CONE_NONNEG = 1,
  CLARABEL_C_CONE_SOC = 2,
  CLARABEL_C_CONE_PSD_TRIANGLE = 3
};

enum {
  CLARABEL_C_SOLVED = 0,
  CLARABEL_C_ALMOST_SOLVED = 1,
  CLARABEL_C_PRIMAL_INFEASIBLE = 2,
  CLARABEL_C_DUAL_INFEASIBLE = 3,
  CLARABEL_C_MAX_ITER = 4,
  CLARABEL_C_NUMERICAL = 5,
  CLARABEL_C_BAD_INPUT = 6
};

typedef struct {
  uint32_t max_iter;
  int32_t verbose;
  double tol_gap_abs;
  double tol_gap_rel;
  double tol_feas;
  double time_limit;
} ClarabelCSettings;

typedef struct {
  int32_t status;
  uint32_t iterations;
  double obj_val;
  double solve_time;
} ClarabelCInfo;

/* min q'x  s.t.  A x + s = b,  s in K.  A is CSC (m x n).
   PSD triangle cones use the upper triangle, column-major, off-diagonals scaled by sqrt(2). */
int32_t clarabel_c_solve(size_t n, size_t m, const double* q, const size_t* a_colptr,
                         const size_t* a_rowval, const double* a_nzval, const double* b,
                         size_t n_cones, const int32_t* cone_kind, const size_t* cone_dim,
                         const ClarabelCSettings* settings, double* x_out, ClarabelCInfo* info);

#ifdef __cplusplus
}
#endif

#endif
