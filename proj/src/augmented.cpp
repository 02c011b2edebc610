#include "csof/augmented.hpp"

#include <sstream>

namespace csof {

namespace {

void require_psd_input(const SymMatrix& m, const char* what) {
  if (!is_psd(m, 1e-12 * std::max(1.0, m.norm()))) {
    throw ValidationError(std::string(what) + " is not positive semidefinite");
  }
}

Matrix blockdiag(const Matrix& a, const Matrix& b) {
  Matrix out = Matrix::Zero(a.rows() + b.rows(), a.cols() + b.cols());
  out.topLeftCorner(a.rows(), a.cols()) = a;
  out.bottomRightCorner(b.rows(), b.cols()) = b;
  return out;
}

}  // namespace

SymMatrix AugmentedMoments::error_cov() const {
  const Matrix s = cross();
  return SymMatrix(truth().matrix() + estimate().matrix() - s - s.transpose());
}

Policy Policy::zero(int N, int nx, int nu) {
  Policy p;
  p.ubar.assign(N, Vector::Zero(nu));
  p.K.assign(N, Matrix::Zero(nu, nx));
  return p;
}

PropagationMatrices propagation_matrices(const StageModel& stage, const Matrix& L, const Matrix& K) {
  const Index nx = stage.A.rows();
  const Index nu = stage.B.cols();
  if (L.rows() != nx || L.cols() != stage.H.rows()) {
    throw DimensionError("propagation_matrices: gain L has wrong shape");
  }
  if (K.rows() != nu || K.cols() != nx) {
    throw DimensionError("propagation_matrices: gain K has wrong shape");
  }
  const Matrix I = Matrix::Identity(nx, nx);
  const Matrix LH = L * stage.H;
  PropagationMatrices pm;
  pm.Phi = Matrix::Zero(2 * nx, 2 * nx);
  pm.Phi.topLeftCorner(nx, nx) = I;
  pm.Phi.bottomLeftCorner(nx, nx) = LH;
  pm.Phi.bottomRightCorner(nx, nx) = I - LH;
  pm.Lblk = blockdiag(Matrix::Zero(nx, nx), L * stage.R.matrix() * L.transpose());
  pm.Ablk = blockdiag(stage.A, stage.A);
  pm.Bblk = blockdiag(stage.B, stage.B);
  pm.Kblk = Matrix::Zero(2 * nu, 2 * nx);
  pm.Kblk.topRightCorner(nu, nx) = K;
  pm.Kblk.bottomRightCorner(nu, nx) = K;
  pm.Qblk = blockdiag(stage.G * stage.G.transpose(), Matrix::Zero(nx, nx));
  return pm;
}

SymMatrix build_case1_init(const SymMatrix& Ptilde0_minus, const SymMatrix& Phat0_minus) {
  if (Ptilde0_minus.dim() != Phat0_minus.dim()) {
    throw DimensionError("build_case1_init: block dimensions differ");
  }
  require_psd_input(Ptilde0_minus, "build_case1_init: P̃₀⁻");
  require_psd_input(Phat0_minus, "build_case1_init: P̂₀⁻");
  const Index n = Phat0_minus.dim();
  Matrix m(2 * n, 2 * n);
  m << Phat0_minus.matrix() + Ptilde0_minus.matrix(), Phat0_minus.matrix(), Phat0_minus.matrix(),
      Phat0_minus.matrix();
  return SymMatrix(m);
}

SymMatrix build_case2_init(const SymMatrix& Ptilde0_minus, const SymMatrix& P0) {
  if (Ptilde0_minus.dim() != P0.dim()) {
    throw DimensionError("build_case2_init: block dimensions differ");
  }
  require_psd_input(Ptilde0_minus, "build_case2_init: P̃₀⁻");
  require_psd_input(P0, "build_case2_init: P₀");
  const Index n = P0.dim();
  Matrix m(2 * n, 2 * n);
  m << P0.matrix(), P0.matrix(), P0.matrix(), P0.matrix() + Ptilde0_minus.matrix();
  return SymMatrix(m);
}

Vector mean_step(const Vector& mu, const Matrix& A, const Matrix& B, const Vector& ubar) {
  if (A.cols() != mu.size() || B.cols() != ubar.size() || A.rows() != B.rows()) {
    throw DimensionError("mean_step: dimensions are not conformable");
  }
  return A * mu + B * ubar;
}

SymMatrix cov_filter_update(const SymMatrix& Paug_minus, const StageModel& stage, const Matrix& L) {
  const Index nx = stage.A.rows();
  if (Paug_minus.dim() != 2 * nx) throw DimensionError("cov_filter_update: Paug has wrong size");
  const auto pm = propagation_matrices(stage, L, Matrix::Zero(stage.B.cols(), nx));
  return SymMatrix(pm.Phi * Paug_minus.matrix() * pm.Phi.transpose() + pm.Lblk);
}

SymMatrix cov_control_update(const SymMatrix& Paug, const StageModel& stage, const Matrix& K) {
  const Index nx = stage.A.rows();
  if (Paug.dim() != 2 * nx) throw DimensionError("cov_control_update: Paug has wrong size");
  const auto pm = propagation_matrices(stage, Matrix::Zero(nx, stage.H.rows()), K);
  const Matrix closed = pm.Ablk + pm.Bblk * pm.Kblk;
  return SymMatrix(closed * Paug.matrix() * closed.transpose() + pm.Qblk);
}

SymMatrix cov_control_update_lifted(const SymMatrix& Paug, const StageModel& stage,
                                    const Matrix& U, const Matrix& S, const SymMatrix& Y) {
  const Index nx = stage.A.rows();
  const Index nu = stage.B.cols();
  if (Paug.dim() != 2 * nx || U.rows() != nu || U.cols() != nx || S.rows() != nu ||
      S.cols() != nx || Y.dim() != nu) {
    throw DimensionError("cov_control_update_lifted: dimensions are not conformable");
  }
  const auto pm = propagation_matrices(stage, Matrix::Zero(nx, stage.H.rows()),
                                       Matrix::Zero(nu, nx));
  Matrix YY(2 * nu, 2 * nu);
  YY << Y.matrix(), Y.matrix(), Y.matrix(), Y.matrix();
  Matrix SU(2 * nu, 2 * nx);
  SU << S, U, S, U;
  const Matrix cross = pm.Bblk * SU * pm.Ablk.transpose();
  return SymMatrix(pm.Ablk * Paug.matrix() * pm.Ablk.transpose() +
                   pm.Bblk * YY * pm.Bblk.transpose() + cross + cross.transpose() + pm.Qblk);
}

Trajectory propagate(const ProblemSpec& spec, const FilterSchedule& schedule, const Policy& policy) {
  const int N = spec.N;
  if (static_cast<int>(schedule.size()) != N || static_cast<int>(policy.size()) != N ||
      policy.K.size() != policy.ubar.size()) {
    throw PreconditionError("propagate: schedule and policy must have length N");
  }
  Trajectory traj;
  traj.prior.reserve(N);
  traj.posterior.reserve(N);

  AugmentedMoments prior{spec.boundary.mu0, spec.boundary.init.Paug0, Phase::APriori};
  for (int k = 0; k < N; ++k) {
    const auto& stage = spec.stages[k];
    traj.prior.push_back(prior);
    AugmentedMoments post{prior.mu, cov_filter_update(prior.Paug, stage, schedule.stages[k].L),
                          Phase::APosteriori};
    traj.posterior.push_back(post);
    if (k + 1 < N) {
      prior = AugmentedMoments{mean_step(post.mu, stage.A, stage.B, policy.ubar[k]),
                               cov_control_update(post.Paug, stage, policy.K[k]), Phase::APriori};
    }
  }
  return traj;
}

std::vector<LegacyStage> legacy_recursion(const ProblemSpec& spec, const FilterSchedule& schedule,
                                          const Policy& policy, LegacyMode mode) {
  if (mode == LegacyMode::RequireOptimalGain && schedule.p != 1.0) {
    std::ostringstream os;
    os << "legacy_recursion: requires the optimal gain (p = 1), schedule has p = " << schedule.p
       << "; the recursion assumes the estimate is orthogonal to its error";
    throw PreconditionError(os.str());
  }
  const int N = spec.N;
  if (static_cast<int>(schedule.size()) != N || static_cast<int>(policy.size()) != N) {
    throw PreconditionError("legacy_recursion: schedule and policy must have length N");
  }
  const Index nx = spec.dims.nx;
  const SymMatrix Phat0_minus = spec.boundary.init.Paug0.principal_block(nx, nx);

  auto measurement_gain_cov = [&](int k) {
    const auto& fs = schedule.stages[k];
    return SymMatrix(fs.L * fs.Pinno.matrix() * fs.L.transpose());
  };

  std::vector<LegacyStage> out;
  out.reserve(N);
  SymMatrix Phat = Phat0_minus + measurement_gain_cov(0);
  out.push_back({Phat, Phat0_minus + schedule.stages[0].Ptilde_minus});
  for (int k = 0; k + 1 < N; ++k) {
    const auto& s = spec.stages[k];
    const Matrix closed = s.A + s.B * policy.K[k];
    Phat = congruence(closed, Phat) + measurement_gain_cov(k + 1);
    out.push_back({Phat, Phat + schedule.stages[k + 1].Ptilde});
  }
  return out;
}

}  // namespace csof
