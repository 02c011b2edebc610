#pragma once

#include <random>

#include "csof/model.hpp"

namespace csof::testing {

inline Matrix random_matrix(std::mt19937_64& rng, Index rows, Index cols, double scale = 1.0) {
  std::normal_distribution<double> n01;
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) m(i, j) = scale * n01(rng);
  }
  return m;
}

/// W Wᵀ + shift·I with W n × rank.
inline SymMatrix random_psd(std::mt19937_64& rng, Index n, Index rank, double shift = 0.0) {
  const Matrix w = random_matrix(rng, n, rank);
  return SymMatrix(w * w.transpose() + shift * Matrix::Identity(n, n));
}

/// Two-state position/velocity system with a position sensor, small enough
/// for fast end-to-end solves.
inline ProblemSpec toy_problem(int N = 6, InitMode mode = InitMode::Case1, double p = 1.0) {
  const double dt = 0.5;
  ProblemSpec s;
  s.name = "toy";
  s.N = N;
  s.dims = {2, 1, 1, 2};
  StageModel st;
  st.A = (Matrix(2, 2) << 1, dt, 0, 1).finished();
  st.B = (Matrix(2, 1) << 0.5 * dt * dt, dt).finished();
  st.G = 0.01 * Matrix::Identity(2, 2);
  st.H = (Matrix(1, 2) << 1, 0).finished();
  st.R = SymMatrix(Matrix::Constant(1, 1, 0.01));
  s.stages.assign(static_cast<std::size_t>(N), st);
  s.boundary.mu0 = Vector::Zero(2);
  s.boundary.muf = (Vector(2) << 1.0, 0.0).finished();
  s.boundary.Pf = SymMatrix::Diagonal((Vector(2) << 0.05, 0.05).finished());
  auto& init = s.boundary.init;
  init.mode = mode;
  init.Ptilde0_minus = SymMatrix::Diagonal((Vector(2) << 0.02, 0.02).finished());
  const SymMatrix other = SymMatrix::Diagonal((Vector(2) << 0.1, 0.05).finished());
  if (mode == InitMode::Case2) {
    init.P0 = other;
    const Matrix& P0 = other.matrix();
    Matrix pa(4, 4);
    pa << P0, P0, P0, P0 + init.Ptilde0_minus.matrix();
    init.Paug0 = SymMatrix(pa);
  } else {
    init.mode = InitMode::Case1;
    init.Phat0_minus = other;
    const Matrix& Ph = other.matrix();
    Matrix pa(4, 4);
    pa << Ph + init.Ptilde0_minus.matrix(), Ph, Ph, Ph;
    init.Paug0 = SymMatrix(pa);
  }
  s.underweight_p = p;
  validate(s);
  return s;
}

}  // namespace csof::testing
