#include <doctest.h>

#include "csof/augmented.hpp"
#include "fixtures.hpp"

using namespace csof;

namespace {

Policy random_policy(std::mt19937_64& rng, int N, int nx, int nu, double scale) {
  Policy p;
  for (int k = 0; k < N; ++k) {
    p.ubar.push_back(testing::random_matrix(rng, nu, 1));
    p.K.push_back(testing::random_matrix(rng, nu, nx, scale));
  }
  return p;
}

StageModel random_stage(std::mt19937_64& rng, int nx, int nu, int ny, int nw) {
  StageModel s;
  s.A = testing::random_matrix(rng, nx, nx);
  s.B = testing::random_matrix(rng, nx, nu);
  s.G = testing::random_matrix(rng, nx, nw, 0.3);
  s.H = testing::random_matrix(rng, ny, nx);
  s.R = testing::random_psd(rng, ny, ny, 0.01);
  return s;
}

}  // namespace

TEST_CASE("case-1 initial covariance") {
  const auto c1 = builtin_double_integrator(BuiltinCase::Case1);
  const SymMatrix P = build_case1_init(c1.boundary.init.Ptilde0_minus, c1.boundary.init.Phat0_minus);
  const AugmentedMoments m{c1.boundary.mu0, P, Phase::APriori};
  Vector d(4);
  d << 12e-2, 11e-2, 3.4e-2, 3.4e-2;
  CHECK((m.truth().matrix() - Matrix(d.asDiagonal())).norm() < 1e-16);
  CHECK(m.estimate() == c1.boundary.init.Phat0_minus);
  CHECK(m.cross() == c1.boundary.init.Phat0_minus.matrix());

  const SymMatrix Ph = c1.boundary.init.Phat0_minus;
  const SymMatrix z = build_case1_init(SymMatrix::Zero(4), Ph);
  for (Index r = 0; r < 2; ++r) {
    for (Index c = 0; c < 2; ++c) CHECK(z.matrix().block(4 * r, 4 * c, 4, 4) == Ph.matrix());
  }
}

TEST_CASE("case-2 initial covariance") {
  const auto c2 = builtin_double_integrator(BuiltinCase::Case2);
  const SymMatrix P = build_case2_init(c2.boundary.init.Ptilde0_minus, c2.boundary.init.P0);
  Vector d(4);
  d << 10e-2, 10e-2, 2e-2, 2e-2;
  CHECK((P.matrix().bottomRightCorner(4, 4) - Matrix(d.asDiagonal())).norm() < 1e-16);
  CHECK(P.matrix().topLeftCorner(4, 4) == c2.boundary.init.P0.matrix());

  const SymMatrix degenerate = build_case2_init(SymMatrix::Zero(4), c2.boundary.init.P0);
  const auto ev = eig_sym(degenerate).values;
  CHECK(std::abs(ev(3)) < 1e-15);
  CHECK(ev(4) > 1e-3);
}

TEST_CASE("initial covariance builders preserve PSD and reject bad input") {
  std::mt19937_64 rng(10);
  for (int t = 0; t < 25; ++t) {
    const SymMatrix a = testing::random_psd(rng, 3, 1 + t % 3);
    const SymMatrix b = testing::random_psd(rng, 3, 1 + (t + 1) % 3);
    CHECK(is_psd(build_case1_init(a, b), 1e-12));
    CHECK(is_psd(build_case2_init(a, b), 1e-12));
  }
  const SymMatrix bad = SymMatrix::Diagonal((Vector(2) << 1, -1).finished());
  CHECK_THROWS_AS(build_case1_init(bad, SymMatrix::Identity(2)), ValidationError);
  CHECK_THROWS_AS(build_case2_init(SymMatrix::Identity(2), bad), ValidationError);
  CHECK_THROWS_AS(build_case1_init(SymMatrix::Identity(2), SymMatrix::Identity(3)), DimensionError);
}

TEST_CASE("mean_step") {
  const Vector mu = (Vector(2) << 1, 2).finished();
  const Matrix B = (Matrix(2, 1) << 1, 3).finished();
  CHECK(mean_step(mu, Matrix::Identity(2, 2), B, Vector::Zero(1)) == mu);
  const Vector u = Vector::Constant(1, 2.0);
  CHECK(mean_step(mu, Matrix::Zero(2, 2), B, u) == B * u);
}

TEST_CASE("propagation matrices have the documented block structure") {
  std::mt19937_64 rng(11);
  const auto st = random_stage(rng, 3, 2, 2, 3);
  const Matrix L = testing::random_matrix(rng, 3, 2);
  const Matrix K = testing::random_matrix(rng, 2, 3);
  const auto pm = propagation_matrices(st, L, K);
  const Matrix I = Matrix::Identity(3, 3);
  CHECK(pm.Phi.topLeftCorner(3, 3) == I);
  CHECK(pm.Phi.topRightCorner(3, 3).isZero());
  CHECK((pm.Phi.bottomLeftCorner(3, 3) - L * st.H).norm() < 1e-15);
  CHECK((pm.Phi.bottomRightCorner(3, 3) - (I - L * st.H)).norm() < 1e-15);
  CHECK((pm.Lblk.bottomRightCorner(3, 3) - L * st.R.matrix() * L.transpose()).norm() < 1e-14);
  CHECK(pm.Lblk.topLeftCorner(3, 3).isZero());
  CHECK((pm.Qblk.topLeftCorner(3, 3) - st.G * st.G.transpose()).norm() < 1e-15);
  CHECK(pm.Qblk.bottomRightCorner(3, 3).isZero());
  CHECK(pm.Kblk.topRows(2).leftCols(3).isZero());
  CHECK(pm.Kblk.topRows(2).rightCols(3) == K);
  CHECK(pm.Kblk.bottomRows(2).rightCols(3) == K);
}

TEST_CASE("filter update with a zero gain is the identity") {
  std::mt19937_64 rng(12);
  const auto st = random_stage(rng, 3, 1, 2, 3);
  const SymMatrix P = testing::random_psd(rng, 6, 6);
  CHECK(cov_filter_update(P, st, Matrix::Zero(3, 2)) == P);
}

TEST_CASE("filter update, scalar hand expansion") {
  const double a = 2.0, b = 0.5, c = 1.5, l = 0.3, h = 2.0, r = 0.7;
  StageModel st{Matrix::Constant(1, 1, 1.0), Matrix::Constant(1, 1, 1.0), Matrix::Zero(1, 1),
                Matrix::Constant(1, 1, h), SymMatrix(Matrix::Constant(1, 1, r))};
  const SymMatrix Pm((Matrix(2, 2) << a, b, b, c).finished());
  const SymMatrix P = cov_filter_update(Pm, st, Matrix::Constant(1, 1, l));
  const double lh = l * h;
  CHECK(P(0, 0) == doctest::Approx(a));
  CHECK(P(1, 0) == doctest::Approx(lh * a + (1 - lh) * b));
  CHECK(P(1, 1) == doctest::Approx(lh * lh * a + 2 * lh * (1 - lh) * b + (1 - lh) * (1 - lh) * c + l * l * r));
}

TEST_CASE("filter update with the optimal gain on the case-1 prior") {
  const auto c1 = builtin_double_integrator(BuiltinCase::Case1);
  const auto sched = design_filter(c1);
  const auto& st = c1.stages.front();
  const auto& fs = sched.stages.front();
  const SymMatrix P = cov_filter_update(c1.boundary.init.Paug0, st, fs.L);
  const Matrix Ph0 = c1.boundary.init.Phat0_minus.matrix();
  CHECK(rel_frobenius(P.matrix().topLeftCorner(4, 4), c1.boundary.init.Paug0.matrix().topLeftCorner(4, 4)) < 1e-15);
  const Matrix est = Ph0 + fs.L * fs.Pinno.matrix() * fs.L.transpose();
  CHECK(rel_frobenius(P.matrix().bottomRightCorner(4, 4), est) < 1e-12);
}

TEST_CASE("control update with zero gain and identity dynamics") {
  std::mt19937_64 rng(13);
  StageModel st{Matrix::Identity(3, 3), testing::random_matrix(rng, 3, 2), Matrix::Zero(3, 3),
                testing::random_matrix(rng, 1, 3), SymMatrix::Identity(1)};
  const SymMatrix P = testing::random_psd(rng, 6, 6);
  CHECK(cov_control_update(P, st, Matrix::Zero(2, 3)) == P);
}

TEST_CASE("control update, scalar hand expansion with K = A = B = 1") {
  const double a = 2.0, b = 0.5, c = 1.5, g = 0.4;
  StageModel st{Matrix::Constant(1, 1, 1.0), Matrix::Constant(1, 1, 1.0), Matrix::Constant(1, 1, g),
                Matrix::Constant(1, 1, 1.0), SymMatrix(Matrix::Constant(1, 1, 1.0))};
  const SymMatrix P((Matrix(2, 2) << a, b, b, c).finished());
  const SymMatrix n = cov_control_update(P, st, Matrix::Constant(1, 1, 1.0));
  CHECK(n(0, 0) == doctest::Approx(a + 2 * b + c + g * g));
  CHECK(n(0, 1) == doctest::Approx(2 * b + 2 * c));
  CHECK(n(1, 1) == doctest::Approx(4 * c));
}

TEST_CASE("lifted control update equals the closed-loop form") {
  std::mt19937_64 rng(14);
  for (int t = 0; t < 50; ++t) {
    const auto st = random_stage(rng, 4, 2, 3, 4);
    const SymMatrix P = testing::random_psd(rng, 8, 8);
    const Matrix K = testing::random_matrix(rng, 2, 4);
    const AugmentedMoments m{Vector::Zero(4), P, Phase::APosteriori};
    const Matrix U = K * m.estimate().matrix();
    const Matrix S = K * m.cross();
    const SymMatrix Y(K * m.estimate().matrix() * K.transpose());
    const SymMatrix direct = cov_control_update(P, st, K);
    const SymMatrix lifted = cov_control_update_lifted(P, st, U, S, Y);
    CHECK((direct.matrix() - lifted.matrix()).norm() <= 1e-10 * (1 + direct.norm()));
  }
}

TEST_CASE("both augmented updates keep random PSD inputs PSD") {
  std::mt19937_64 rng(15);
  for (int t = 0; t < 100; ++t) {
    const auto st = random_stage(rng, 3, 2, 2, 3);
    const SymMatrix P = testing::random_psd(rng, 6, 1 + t % 6);
    const Matrix L = testing::random_matrix(rng, 3, 2);
    const Matrix K = testing::random_matrix(rng, 2, 3);
    const SymMatrix f = cov_filter_update(P, st, L);
    const SymMatrix c = cov_control_update(P, st, K);
    CHECK(min_eigenvalue(f) >= -1e-10 * std::max(1.0, f.norm()));
    CHECK(min_eigenvalue(c) >= -1e-10 * std::max(1.0, c.norm()));
  }
}

TEST_CASE("filter update leaves the truth block unchanged") {
  std::mt19937_64 rng(16);
  const auto st = random_stage(rng, 3, 1, 2, 3);
  const SymMatrix P = testing::random_psd(rng, 6, 6);
  const SymMatrix f = cov_filter_update(P, st, testing::random_matrix(rng, 3, 2));
  CHECK(f.matrix().topLeftCorner(3, 3) == P.matrix().topLeftCorner(3, 3));
}

TEST_CASE("augmented recursion reduces to the orthogonality-based recursion") {
  std::mt19937_64 rng(17);
  const auto spec = builtin_double_integrator(BuiltinCase::Case1);
  const auto sched = design_filter(spec);
  for (int t = 0; t < 20; ++t) {
    const Policy pol = random_policy(rng, spec.N, 4, 2, 0.5);
    const auto traj = propagate(spec, sched, pol);
    const auto legacy = legacy_recursion(spec, sched, pol);
    for (int k = 0; k < spec.N; ++k) {
      const auto& m = traj.posterior[static_cast<std::size_t>(k)];
      const auto& l = legacy[static_cast<std::size_t>(k)];
      CHECK(rel_frobenius(m.truth().matrix(), l.P.matrix()) <= 1e-9);
      CHECK(rel_frobenius(m.estimate().matrix(), l.Phat.matrix()) <= 1e-9);
    }
  }
}

TEST_CASE("legacy recursion with zero gains") {
  const auto spec = builtin_double_integrator(BuiltinCase::Case1);
  const auto sched = design_filter(spec);
  const auto legacy = legacy_recursion(spec, sched, Policy::zero(spec.N, 4, 2));
  const auto& f0 = sched.stages.front();
  Matrix Ph = spec.boundary.init.Phat0_minus.matrix() + f0.L * f0.Pinno.matrix() * f0.L.transpose();
  for (int k = 0; k < spec.N; ++k) {
    const auto ks = static_cast<std::size_t>(k);
    CHECK(rel_frobenius(legacy[ks].Phat.matrix(), Ph) < 1e-12);
    CHECK(rel_frobenius(legacy[ks].P.matrix(), Ph + sched.stages[ks].Ptilde.matrix()) < 1e-12);
    if (k + 1 < spec.N) {
      const auto& A = spec.stages[ks].A;
      const auto& fn = sched.stages[ks + 1];
      Ph = A * Ph * A.transpose() + fn.L * fn.Pinno.matrix() * fn.L.transpose();
    }
  }
}

TEST_CASE("legacy recursion refuses an underweighted schedule unless asked") {
  const auto spec = builtin_double_integrator(BuiltinCase::Case3);
  const auto sched = design_filter(spec);
  const auto pol = Policy::zero(spec.N, 4, 2);
  CHECK_THROWS_AS(legacy_recursion(spec, sched, pol), PreconditionError);
  CHECK(legacy_recursion(spec, sched, pol, LegacyMode::AssumeOrthogonality).size() == 20);
}

TEST_CASE("estimation-error covariance from the augmented blocks") {
  std::mt19937_64 rng(18);
  // When the filter's initial error covariance is the true one, the error
  // dynamics do not depend on the control, for any gain and any split.
  for (auto c : {BuiltinCase::Case1, BuiltinCase::Case2, BuiltinCase::Case3}) {
    const auto spec = builtin_double_integrator(c);
    const auto sched = design_filter(spec);
    const auto traj = propagate(spec, sched, random_policy(rng, spec.N, 4, 2, 0.5));
    for (int k = 0; k < spec.N; ++k) {
      const auto ks = static_cast<std::size_t>(k);
      CHECK(rel_frobenius(traj.posterior[ks].error_cov().matrix(), sched.stages[ks].Ptilde.matrix()) < 1e-9);
      CHECK(rel_frobenius(traj.prior[ks].error_cov().matrix(), sched.stages[ks].Ptilde_minus.matrix()) < 1e-9);
    }
  }

  // A filter designed with a different initial error covariance disagrees.
  auto spec = builtin_double_integrator(BuiltinCase::Case1);
  spec.boundary.init.mode = InitMode::Explicit;
  spec.boundary.init.Ptilde0_minus = 2.0 * spec.boundary.init.Ptilde0_minus;
  validate(spec);
  const auto sched = design_filter(spec);
  const auto traj = propagate(spec, sched, Policy::zero(spec.N, 4, 2));
  for (int k = 0; k < spec.N; ++k) {
    const auto ks = static_cast<std::size_t>(k);
    CHECK(rel_frobenius(traj.posterior[ks].error_cov().matrix(), sched.stages[ks].Ptilde.matrix()) > 1e-3);
  }
}

TEST_CASE("orthogonality holds only for case 1 with the optimal gain") {
  std::mt19937_64 rng(19);
  auto max_violation = [&](BuiltinCase c) {
    const auto spec = builtin_double_integrator(c);
    const auto traj = propagate(spec, design_filter(spec), random_policy(rng, spec.N, 4, 2, 0.5));
    double worst = 0.0;
    for (const auto& m : traj.posterior) {
      // Cov(x̂, x − x̂) = Σ − P̂
      worst = std::max(worst, rel_frobenius(m.cross(), m.estimate().matrix()));
    }
    return worst;
  };
  CHECK(max_violation(BuiltinCase::Case1) < 1e-10);
  CHECK(max_violation(BuiltinCase::Case2) > 1e-2);
  CHECK(max_violation(BuiltinCase::Case3) > 1e-2);
}

TEST_CASE("propagate follows the nominal mean and the two updates") {
  std::mt19937_64 rng(20);
  const auto spec = testing::toy_problem(5);
  const auto sched = design_filter(spec);
  const auto pol = random_policy(rng, spec.N, 2, 1, 1.0);
  const auto traj = propagate(spec, sched, pol);
  REQUIRE(traj.prior.size() == 5);
  REQUIRE(traj.posterior.size() == 5);
  CHECK(traj.prior[0].Paug == spec.boundary.init.Paug0);
  for (int k = 0; k < spec.N; ++k) {
    const auto ks = static_cast<std::size_t>(k);
    CHECK(traj.posterior[ks].phase == Phase::APosteriori);
    CHECK(traj.prior[ks].phase == Phase::APriori);
    CHECK(traj.posterior[ks].Paug == cov_filter_update(traj.prior[ks].Paug, spec.stages[ks], sched.stages[ks].L));
    if (k + 1 < spec.N) {
      CHECK(traj.prior[ks + 1].Paug == cov_control_update(traj.posterior[ks].Paug, spec.stages[ks], pol.K[ks]));
      CHECK(traj.prior[ks + 1].mu == mean_step(traj.prior[ks].mu, spec.stages[ks].A, spec.stages[ks].B, pol.ubar[ks]));
    }
  }
}
