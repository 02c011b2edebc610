#pragma once

#include <vector>

#include "csof/linalg.hpp"

namespace csof {

/// u_k = ū_k + K_k (x̂_k − μ_k), k = 0..N−1.
struct Policy {
  std::vector<Vector> ubar;
  std::vector<Matrix> K;

  std::size_t size() const { return ubar.size(); }

  /// Policy with ū = 0 and K = 0 at every stage.
  static Policy zero(int N, int nx, int nu);
};

}  // namespace csof
