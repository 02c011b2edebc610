#include "csof/filter.hpp"

#include <sstream>

namespace csof {

Matrix kalman_gain(const SymMatrix& Ptilde_minus, const Matrix& H, const SymMatrix& R, double p) {
  if (!(p > 0.0 && p <= 1.0)) throw PreconditionError("kalman_gain: p must lie in (0, 1]");
  if (H.cols() != Ptilde_minus.dim() || H.rows() != R.dim()) {
    throw DimensionError("kalman_gain: H, P̃⁻ and R are not conformable");
  }
  const Matrix PHt = Ptilde_minus.matrix() * H.transpose();
  const SymMatrix W((1.0 / p) * H * PHt + R.matrix());
  // L = P̃⁻Hᵀ W⁻¹ = (W⁻¹ H P̃⁻)ᵀ
  return spd_solve(W, PHt.transpose(), "kalman_gain: innovation matrix").transpose();
}

SymMatrix joseph_update(const SymMatrix& Ptilde_minus, const Matrix& L, const Matrix& H,
                        const SymMatrix& R) {
  const Index n = Ptilde_minus.dim();
  if (L.rows() != n || H.cols() != n || L.cols() != H.rows() || R.dim() != H.rows()) {
    throw DimensionError("joseph_update: dimensions are not conformable");
  }
  const Matrix IKH = Matrix::Identity(n, n) - L * H;
  return SymMatrix(IKH * Ptilde_minus.matrix() * IKH.transpose() +
                   L * R.matrix() * L.transpose());
}

SymMatrix time_update(const SymMatrix& Ptilde, const Matrix& A, const Matrix& G) {
  if (A.cols() != Ptilde.dim() || A.rows() != G.rows()) {
    throw DimensionError("time_update: dimensions are not conformable");
  }
  return SymMatrix(A * Ptilde.matrix() * A.transpose() + G * G.transpose());
}

SymMatrix innovation_cov(const SymMatrix& Ptilde_minus, const Matrix& H, const SymMatrix& R) {
  if (H.cols() != Ptilde_minus.dim() || H.rows() != R.dim()) {
    throw DimensionError("innovation_cov: dimensions are not conformable");
  }
  return SymMatrix(H * Ptilde_minus.matrix() * H.transpose() + R.matrix());
}

FilterSchedule design_filter(const ProblemSpec& spec) {
  FilterSchedule schedule;
  schedule.p = spec.underweight_p;
  schedule.stages.reserve(spec.stages.size());

  SymMatrix prior = spec.boundary.init.Ptilde0_minus;
  for (int k = 0; k < spec.N; ++k) {
    const auto& s = spec.stages[k];
    FilterStage fs;
    try {
      fs.L = kalman_gain(prior, s.H, s.R, spec.underweight_p);
    } catch (const SingularityError& e) {
      std::ostringstream os;
      os << "design_filter: stage " << k << ": " << e.what();
      throw SingularityError(os.str());
    }
    fs.Ptilde_minus = prior;
    fs.Ptilde = joseph_update(prior, fs.L, s.H, s.R);
    fs.Pinno = innovation_cov(prior, s.H, s.R);
    prior = time_update(fs.Ptilde, s.A, s.G);
    schedule.stages.push_back(std::move(fs));
  }
  return schedule;
}

}  // namespace csof
