#pragma once

#include <optional>
#include <vector>

#include "csof/conic.hpp"
#include "csof/filter.hpp"
#include "csof/linalg.hpp"
#include "csof/model.hpp"
#include "csof/policy.hpp"

namespace csof {

using conic::SolveStatus;

/// Decoded decision variables of one stage.
struct StageVars {
  Vector mu;
  Vector ubar;
  SymMatrix Paug_minus;
  SymMatrix Paug;
  Matrix U;     ///< K P̂
  SymMatrix Y;  ///< K P̂ Kᵀ (relaxed)
  Matrix S;     ///< K Σ
  SymMatrix Z;  ///< Σᵀ P̂⁻¹ Σ (relaxed)
  double e = 0.0;  ///< rank surrogate, IRM iterates only

  Index nx() const { return mu.size(); }
  SymMatrix phat() const { return Paug.principal_block(nx(), nx()); }
  Matrix sigma() const { return Paug.matrix().block(nx(), 0, nx(), nx()); }
  /// 𝐔 = [U; Σᵀ]
  Matrix u_aug() const;
  /// 𝐒 = [[Y, S], [Sᵀ, Z]]
  SymMatrix s_aug() const;
  /// M = [[P̂, 𝐔ᵀ], [𝐔, 𝐒]], size 2nx + nu.
  SymMatrix stacked() const;
};

struct SubproblemSolution {
  std::vector<StageVars> stages;
  double objective = 0.0;  ///< Σ‖ū_k‖ + tr Y_k + ε tr Z_k, penalty excluded
  SolveStatus status = SolveStatus::NumericalTrouble;
  int backend_iterations = 0;
  double solve_seconds = 0.0;
  std::string detail;
};

/// Per-stage offsets of every decision variable in the program.
struct StageLayout {
  conic::VarIndex mu = -1;
  conic::VarIndex ubar = -1;
  conic::VarIndex ubar_norm = -1;
  conic::VarIndex Paug_minus = -1;  ///< packed upper triangle, 2nx
  conic::VarIndex Paug = -1;        ///< packed upper triangle, 2nx
  conic::VarIndex U = -1;           ///< row-major nu × nx
  conic::VarIndex S = -1;           ///< row-major nu × nx
  conic::VarIndex Y = -1;           ///< packed, nu
  conic::VarIndex Z = -1;           ///< packed, nx
  conic::VarIndex e = -1;
  conic::VarIndex e_sq = -1;  ///< epigraph of e²
};

struct AssembledProblem {
  conic::ConicProgram program;
  std::vector<StageLayout> layout;
  Dims dims;
  double eps_cross = 0.0;
  bool irm = false;
};

/// Augmented-Lagrangian data of one IRM iterate.
struct IrmTerms {
  std::vector<Matrix> eigvecs;       ///< V_k, m × (m − nx), orthonormal columns
  std::vector<double> multipliers;   ///< λ_k
  double weight = 0.0;               ///< w
  /// Optional hard bound e_k ≤ bound_k (non-default variant).
  std::optional<std::vector<double>> e_upper;
};

/// Convex relaxation: mean dynamics, augmented filter update, lifted control
/// update, Schur LMI per stage, boundary conditions and the terminal
/// covariance LMI; objective Σ‖ū_k‖ + tr Y_k + ε tr Z_k.
AssembledProblem assemble_relaxed(const ProblemSpec& spec, const FilterSchedule& schedule);

/// The relaxation plus, per stage, e_k I − V_kᵀ M_k V_k ⪰ 0 and the penalty
/// λ_k e_k + (w/2) e_k² (quadratic term as a rotated-cone epigraph).
AssembledProblem assemble_irm_iterate(const ProblemSpec& spec, const FilterSchedule& schedule,
                                      const IrmTerms& terms);

SubproblemSolution solve(const AssembledProblem& problem,
                         const conic::ConicBackend& backend = *conic::default_backend());

/// Σ‖ū_k‖ + tr Y_k + ε tr Z_k over decoded stages.
double relaxed_objective(const std::vector<StageVars>& stages, double eps_cross);

/// K_k = U_k P̂_k⁻¹; ū_k copied through.
Policy recover_gains(const SubproblemSolution& solution);

/// ‖𝐒_k − 𝐔_k P̂_k⁻¹ 𝐔_kᵀ‖_F per stage.
std::vector<double> relaxation_gap(const SubproblemSolution& solution);

}  // namespace csof
