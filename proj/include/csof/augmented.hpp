#pragma once

#include <vector>

#include "csof/filter.hpp"
#include "csof/linalg.hpp"
#include "csof/model.hpp"
#include "csof/policy.hpp"

namespace csof {

enum class Phase { APriori, APosteriori };

/// Mean and joint covariance of the stacked vector [x; x̂] (a posteriori) or
/// [x; x̂⁻] (a priori). The mean is shared by all three random vectors since
/// the estimator is unbiased.
struct AugmentedMoments {
  Vector mu;
  SymMatrix Paug;
  Phase phase = Phase::APriori;

  Index nx() const { return mu.size(); }
  /// P_k, covariance of the true state.
  SymMatrix truth() const { return Paug.principal_block(0, nx()); }
  /// P̂_k (or P̂_k⁻), covariance of the estimate.
  SymMatrix estimate() const { return Paug.principal_block(nx(), nx()); }
  /// Σ_k = Cov(x̂_k, x_k), the lower-left block.
  Matrix cross() const { return Paug.matrix().block(nx(), 0, nx(), nx()); }
  /// Cov(x − x̂) = P + P̂ − Σ − Σᵀ.
  SymMatrix error_cov() const;
};

/// Block matrices of the augmented measurement and control updates.
struct PropagationMatrices {
  Matrix Phi;   ///< [[I, 0], [L H, I − L H]]
  Matrix Lblk;  ///< blockdiag(0, L R Lᵀ)
  Matrix Ablk;  ///< blockdiag(A, A)
  Matrix Bblk;  ///< blockdiag(B, B)
  Matrix Kblk;  ///< [[0, K], [0, K]]
  Matrix Qblk;  ///< blockdiag(G Gᵀ, 0)
};

PropagationMatrices propagation_matrices(const StageModel& stage, const Matrix& L, const Matrix& K);

/// [[P̂₀⁻ + P̃₀⁻, P̂₀⁻], [P̂₀⁻, P̂₀⁻]]: x₀ = x̂₀⁻ + x̃₀⁻ with x̂₀⁻ ⟂ x̃₀⁻.
SymMatrix build_case1_init(const SymMatrix& Ptilde0_minus, const SymMatrix& Phat0_minus);

/// [[P₀, P₀], [P₀, P₀ + P̃₀⁻]]: x̂₀⁻ = x₀ + x̃₀⁻ with x₀ ⟂ x̃₀⁻.
SymMatrix build_case2_init(const SymMatrix& Ptilde0_minus, const SymMatrix& P0);

Vector mean_step(const Vector& mu, const Matrix& A, const Matrix& B, const Vector& ubar);

/// 𝐏_k = Φ 𝐏_k⁻ Φᵀ + 𝐋.
SymMatrix cov_filter_update(const SymMatrix& Paug_minus, const StageModel& stage, const Matrix& L);

/// 𝐏⁻_{k+1} = (𝐀 + 𝐁𝐊) 𝐏_k (𝐀 + 𝐁𝐊)ᵀ + 𝐐.
SymMatrix cov_control_update(const SymMatrix& Paug, const StageModel& stage, const Matrix& K);

/// Same update written in the lifted variables U = K P̂, S = K Σ, Y = K P̂ Kᵀ:
/// 𝐀𝐏𝐀ᵀ + 𝐁[[Y,Y],[Y,Y]]𝐁ᵀ + 𝐁[[S,U],[S,U]]𝐀ᵀ + (·)ᵀ + 𝐐. This is the form
/// the convex subproblem constrains; it is linear in (𝐏, U, S, Y).
SymMatrix cov_control_update_lifted(const SymMatrix& Paug, const StageModel& stage,
                                    const Matrix& U, const Matrix& S, const SymMatrix& Y);

/// Moments along the horizon under a fixed policy.
struct Trajectory {
  std::vector<AugmentedMoments> prior;      ///< 𝐏_k⁻, k = 0..N−1
  std::vector<AugmentedMoments> posterior;  ///< 𝐏_k, k = 0..N−1
};

/// Propagates the boundary statistics through the filter and control
/// updates with the given policy.
Trajectory propagate(const ProblemSpec& spec, const FilterSchedule& schedule, const Policy& policy);

struct LegacyStage {
  SymMatrix Phat;  ///< covariance of the a posteriori estimate
  SymMatrix P;     ///< covariance of the true state
};

enum class LegacyMode {
  RequireOptimalGain,   ///< reject schedules built with p ≠ 1
  AssumeOrthogonality,  ///< evaluate regardless, to expose the mismatch
};

/// Covariance recursion that assumes the estimate is orthogonal to its error:
///   P̂₀ = P̂₀⁻ + L₀ P_ỹ₀ L₀ᵀ,  P₀ = P̂₀⁻ + P̃₀⁻,
///   P̂_{k+1} = (A + BK) P̂_k (A + BK)ᵀ + L_{k+1} P_ỹ_{k+1} L_{k+1}ᵀ,
///   P_{k+1} = P̂_{k+1} + P̃_{k+1}.
/// P̂₀⁻ is taken from the estimate block of the initial augmented covariance.
std::vector<LegacyStage> legacy_recursion(const ProblemSpec& spec, const FilterSchedule& schedule,
                                          const Policy& policy,
                                          LegacyMode mode = LegacyMode::RequireOptimalGain);

}  // namespace csof
