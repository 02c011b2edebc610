#pragma once

#include <vector>

#include "csof/linalg.hpp"
#include "csof/model.hpp"

namespace csof {

struct FilterStage {
  Matrix L;                ///< gain L_k (optimal or underweighted)
  SymMatrix Ptilde_minus;  ///< a priori error covariance P̃_k⁻
  SymMatrix Ptilde;        ///< a posteriori error covariance P̃_k
  SymMatrix Pinno;         ///< innovation covariance H P̃_k⁻ Hᵀ + R

  friend bool operator==(const FilterStage&, const FilterStage&) = default;
};

/// Gains and filter covariances for k = 0..N−1, computed before any control
/// optimization; independent of the policy.
struct FilterSchedule {
  std::vector<FilterStage> stages;
  double p = 1.0;

  std::size_t size() const { return stages.size(); }
  friend bool operator==(const FilterSchedule&, const FilterSchedule&) = default;
};

/// L = P̃⁻ Hᵀ ((1/p) H P̃⁻ Hᵀ + R)⁻¹; p = 1 is the optimal Kalman gain.
Matrix kalman_gain(const SymMatrix& Ptilde_minus, const Matrix& H, const SymMatrix& R, double p);

/// Joseph form (I − L H) P̃⁻ (I − L H)ᵀ + L R Lᵀ, valid for any gain.
SymMatrix joseph_update(const SymMatrix& Ptilde_minus, const Matrix& L, const Matrix& H,
                        const SymMatrix& R);

/// A P̃ Aᵀ + G Gᵀ.
SymMatrix time_update(const SymMatrix& Ptilde, const Matrix& A, const Matrix& G);

/// H P̃⁻ Hᵀ + R.
SymMatrix innovation_cov(const SymMatrix& Ptilde_minus, const Matrix& H, const SymMatrix& R);

FilterSchedule design_filter(const ProblemSpec& spec);

}  // namespace csof
