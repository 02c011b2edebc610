#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <vector>

#include "csof/augmented.hpp"
#include "csof/filter.hpp"
#include "csof/policy.hpp"

namespace csof {

/// Initial-condition sampling procedure.
enum class SamplingMode {
  Case1,  ///< x̂₀⁻ ~ N(μ₀, P̂₀⁻), x₀ = x̂₀⁻ + x̃₀⁻
  Case2,  ///< x₀ ~ N(μ₀, P₀), x̂₀⁻ = x₀ + x̃₀⁻
  Joint,  ///< [x₀; x̂₀⁻] ~ N([μ₀; μ₀], 𝐏₀⁻) directly
};

std::string_view to_string(SamplingMode m);

/// Procedure matching the problem's initial-covariance mode.
SamplingMode default_sampling(const ProblemSpec& spec);

using Rng = std::mt19937_64;

/// Independent stream for one trial, a function of (seed, trial) only.
Rng trial_rng(std::uint64_t seed, std::uint64_t trial);

/// Draws from N(mean, cov) via cov = V diag(λ) Vᵀ. Eigenvalues in
/// [−1e-10, 0) are clamped to zero; anything more negative is rejected.
class GaussianSampler {
 public:
  GaussianSampler() = default;
  GaussianSampler(Vector mean, const SymMatrix& cov);

  Vector operator()(Rng& rng) const;
  Index dim() const { return mean_.size(); }

 private:
  Vector mean_;
  Matrix factor_;
};

struct InitialDraw {
  Vector x0;
  Vector xhat0_minus;
};

/// Samplers for one procedure, built once per ensemble.
class InitialSampler {
 public:
  InitialSampler(const ProblemSpec& spec, SamplingMode mode);
  InitialDraw operator()(Rng& rng) const;

 private:
  SamplingMode mode_;
  Index nx_;
  GaussianSampler first_;   ///< x̂₀⁻, x₀ or the joint vector
  GaussianSampler second_;  ///< x̃₀⁻ (unused for Joint)
};

InitialDraw sample_initial(const ProblemSpec& spec, SamplingMode mode, Rng& rng);

/// One closed-loop realization.
struct TrialTrajectory {
  std::vector<Vector> x;           ///< true state, k = 0..N−1
  std::vector<Vector> xhat_minus;  ///< a priori estimate
  std::vector<Vector> xhat;        ///< a posteriori estimate
  std::vector<Vector> u;           ///< control, k = 0..N−2
};

/// Nominal means μ_{k+1} = A μ_k + B ū_k from μ₀.
std::vector<Vector> nominal_means(const ProblemSpec& spec, const Policy& policy);

/// y_k = H x_k + v_k, x̂_k = x̂_k⁻ + L_k (y_k − H x̂_k⁻),
/// u_k = ū_k + K_k (x̂_k − μ_k), x_{k+1} = A x_k + B u_k + G w_k,
/// x̂_{k+1}⁻ = A x̂_k + B u_k; the last stage ends with a measurement update.
TrialTrajectory simulate_trial(const ProblemSpec& spec, const FilterSchedule& schedule,
                               const Policy& policy, const InitialDraw& init, Rng& rng);

struct McOptions {
  int n_trials = 10000;
  std::uint64_t seed = 0;
  SamplingMode mode = SamplingMode::Case1;
  unsigned threads = 0;  ///< 0: hardware concurrency
  bool keep_trials = false;
  double mean_tol = 0.05;  ///< absolute, per component
  double cov_tol = 0.05;   ///< relative Frobenius
};

struct McStage {
  Vector mean;         ///< empirical E[x]
  Vector mean_xhat;    ///< empirical E[x̂]
  SymMatrix cov;       ///< empirical covariance of [x; x̂]
  Vector mean_u;       ///< empirical E[u]; empty at k = N−1
  double mean_error = 0.0;      ///< ‖E[x] − μ_k‖₂
  double mean_max_abs = 0.0;    ///< max_i |E[x]_i − μ_k,i|
  double truth_cov_error = 0.0; ///< relative Frobenius, truth block
  double aug_cov_error = 0.0;   ///< relative Frobenius, full 2nx block

  SymMatrix truth() const { return cov.principal_block(0, mean.size()); }
};

struct McReport {
  int n_trials = 0;
  std::uint64_t seed = 0;
  SamplingMode mode = SamplingMode::Case1;
  double mean_tol = 0.0;
  double cov_tol = 0.0;
  std::vector<McStage> stages;
  std::vector<AugmentedMoments> predicted;  ///< a posteriori
  std::vector<TrialTrajectory> trials;      ///< only with keep_trials
  /// Terminal check on the empirical moments: mean within mean_tol of μ_f
  /// and λ_min(P_f − P_emp) ≥ −cov_tol·‖P_f‖_F.
  bool terminal_ok = false;
  double terminal_min_eig = 0.0;
  double terminal_mean_error = 0.0;

  /// Every stage within mean_tol and cov_tol of the prediction.
  bool consistent(const std::vector<int>& stages_to_check) const;
};

/// Runs the ensemble in parallel. Each trial draws from its own stream and
/// the moments are reduced pairwise in trial order, so the report depends
/// only on the inputs and the seed.
McReport run_ensemble(const ProblemSpec& spec, const FilterSchedule& schedule, const Policy& policy,
                      const McOptions& options);

/// One CSV row per (trial, stage): trial,k,x...,xhat...,u...
void write_trials_csv(std::ostream& os, const McReport& report);

}  // namespace csof
