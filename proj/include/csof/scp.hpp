#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "csof/augmented.hpp"
#include "csof/filter.hpp"
#include "csof/sdp.hpp"

namespace csof {

struct RankData {
  Matrix V;        ///< eigenvectors of the m − nx smallest eigenvalues of M_k
  double e = 0.0;  ///< (m − nx)-th smallest eigenvalue of M_k
};

/// Rank data of a symmetric matrix whose target rank is nx.
RankData rank_data(const SymMatrix& M, Index nx);

/// Per-stage rank data of a solved subproblem.
std::vector<RankData> extract_rank_data(const SubproblemSolution& solution);

std::vector<double> initialize_multipliers(int N);

struct IterationRecord {
  int iter = 0;  ///< 0 is the relaxed solve
  double max_e = 0.0;
  double J = 0.0;
  double dJ = 0.0;  ///< |J − J_prev|, +inf on the first iterate
  double weight = 0.0;  ///< w used to assemble this iterate
  std::vector<double> e;
  std::vector<double> multipliers;  ///< λ used to assemble this iterate
  std::vector<double> gaps;
  double wall_seconds = 0.0;
  int backend_iterations = 0;
};

using ConvergenceTrace = std::vector<IterationRecord>;

enum class ScpStatus { Converged, NoConvergence, Infeasible, NumericalTrouble };

std::string_view to_string(ScpStatus s);

struct ScpOptions {
  std::shared_ptr<const conic::ConicBackend> backend;  ///< default_backend() when null
  /// Adds e_k ≤ e_k^{(i−1)} to every iterate. Off by default.
  bool hard_decrease = false;
  std::function<void(const IterationRecord&)> on_iteration;
  /// Called with every assembled program before it is solved.
  std::function<void(int iter, const conic::ConicProgram&)> on_program;
};

struct ScpResult {
  ScpStatus status = ScpStatus::NumericalTrouble;
  FilterSchedule schedule;
  Policy policy;  ///< empty unless converged
  /// Moments re-propagated with the recovered policy; empty unless converged.
  Trajectory predicted;
  SubproblemSolution final_solution;
  ConvergenceTrace trace;
  std::string message;

  bool converged() const { return status == ScpStatus::Converged; }
};

/// Relaxed solve followed by IRM iterates with augmented-Lagrangian updates
/// λ ← λ + w e, w ← β w. Stops when max_k e_k < eps_rank and |ΔJ| < eps_obj.
ScpResult run(const ProblemSpec& spec, const ScpOptions& options = {});

}  // namespace csof
