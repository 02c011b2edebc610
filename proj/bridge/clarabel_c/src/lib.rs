//! Minimal C ABI over the Clarabel interior-point solver.
//!
//! Only the linear-objective form is exposed: min qᵀx s.t. Ax + s = b, s ∈ K.
//! Cones are passed as parallel (kind, dim) arrays using the codes below.

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
};
use std::slice;

extern crate openblas_src;

pub const CONE_ZERO: i32 = 0;
pub const CONE_NONNEG: i32 = 1;
pub const CONE_SOC: i32 = 2;
pub const CONE_PSD_TRIANGLE: i32 = 3;

pub const STATUS_SOLVED: i32 = 0;
pub const STATUS_ALMOST_SOLVED: i32 = 1;
pub const STATUS_PRIMAL_INFEASIBLE: i32 = 2;
pub const STATUS_DUAL_INFEASIBLE: i32 = 3;
pub const STATUS_MAX_ITER: i32 = 4;
pub const STATUS_NUMERICAL: i32 = 5;
pub const STATUS_BAD_INPUT: i32 = 6;

#[repr(C)]
pub struct ClarabelCSettings {
    pub max_iter: u32,
    pub verbose: i32,
    pub tol_gap_abs: f64,
    pub tol_gap_rel: f64,
    pub tol_feas: f64,
    pub time_limit: f64,
}

#[repr(C)]
pub struct ClarabelCInfo {
    pub status: i32,
    pub iterations: u32,
    pub obj_val: f64,
    pub solve_time: f64,
}

/// # Safety
/// All pointers must reference arrays of the documented lengths:
/// colptr n+1, rowval/nzval colptr[n], q n, b m, cone_kind/cone_dim n_cones, x_out n.
#[no_mangle]
pub unsafe extern "C" fn clarabel_c_solve(
    n: usize,
    m: usize,
    q: *const f64,
    a_colptr: *const usize,
    a_rowval: *const usize,
    a_nzval: *const f64,
    b: *const f64,
    n_cones: usize,
    cone_kind: *const i32,
    cone_dim: *const usize,
    settings: *const ClarabelCSettings,
    x_out: *mut f64,
    info: *mut ClarabelCInfo,
) -> i32 {
    let info = &mut *info;
    let settings = &*settings;
    let colptr = slice::from_raw_parts(a_colptr, n + 1).to_vec();
    let nnz = colptr[n];
    let rowval = slice::from_raw_parts(a_rowval, nnz).to_vec();
    let nzval = slice::from_raw_parts(a_nzval, nnz).to_vec();
    let q = slice::from_raw_parts(q, n);
    let b = slice::from_raw_parts(b, m);

    let mut cones = Vec::with_capacity(n_cones);
    for i in 0..n_cones {
        let d = *cone_dim.add(i);
        let cone = match *cone_kind.add(i) {
            CONE_ZERO => SupportedConeT::ZeroConeT(d),
            CONE_NONNEG => SupportedConeT::NonnegativeConeT(d),
            CONE_SOC => SupportedConeT::SecondOrderConeT(d),
            CONE_PSD_TRIANGLE => SupportedConeT::PSDTriangleConeT(d),
            _ => {
                info.status = STATUS_BAD_INPUT;
                return STATUS_BAD_INPUT;
            }
        };
        cones.push(cone);
    }

    let a = CscMatrix::new(m, n, colptr, rowval, nzval);
    let p = CscMatrix::<f64>::zeros((n, n));

    let built = DefaultSettingsBuilder::default()
        .max_iter(settings.max_iter)
        .verbose(settings.verbose != 0)
        .tol_gap_abs(settings.tol_gap_abs)
        .tol_gap_rel(settings.tol_gap_rel)
        .tol_feas(settings.tol_feas)
        .time_limit(settings.time_limit)
        .build();
    let built = match built {
        Ok(s) => s,
        Err(_) => {
            info.status = STATUS_BAD_INPUT;
            return STATUS_BAD_INPUT;
        }
    };

    let mut solver = match DefaultSolver::new(&p, q, &a, b, &cones, built) {
        Ok(s) => s,
        Err(_) => {
            info.status = STATUS_BAD_INPUT;
            return STATUS_BAD_INPUT;
        }
    };
    solver.solve();

    let x = slice::from_raw_parts_mut(x_out, n);
    x.copy_from_slice(&solver.solution.x);
    info.iterations = solver.solution.iterations;
    info.obj_val = solver.solution.obj_val;
    info.solve_time = solver.solution.solve_time;
    info.status = match solver.solution.status {
        SolverStatus::Solved => STATUS_SOLVED,
        SolverStatus::AlmostSolved => STATUS_ALMOST_SOLVED,
        SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => {
            STATUS_PRIMAL_INFEASIBLE
        }
        SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => {
            STATUS_DUAL_INFEASIBLE
        }
        SolverStatus::MaxIterations | SolverStatus::MaxTime => STATUS_MAX_ITER,
        _ => STATUS_NUMERICAL,
    };
    info.status
}
