#include <chrono>
#include <cstdio>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>

#include "csof/augmented.hpp"
#include "csof/montecarlo.hpp"
#include "csof/scp.hpp"

using namespace csof;

namespace {

constexpr std::uint64_t kSeed = 20240501;
const std::vector<int> kMcStages = {0, 5, 10, 15, 19};

struct CaseRun {
  ProblemSpec spec;
  ScpResult result;
  double seconds = 0.0;
};

int failures = 0;

void report(int id, bool pass, const std::string& title, const std::string& detail) {
  std::cout << (pass ? "[PASS] " : "[FAIL] ") << "criterion " << id << ": " << title << " | " << detail
            << std::endl;
  if (!pass) ++failures;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

Matrix random_matrix(std::mt19937_64& rng, Index rows, Index cols, double scale = 1.0) {
  std::normal_distribution<double> n01;
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) m(i, j) = scale * n01(rng);
  }
  return m;
}

SymMatrix random_psd(std::mt19937_64& rng, Index n, Index rank, double shift = 0.0) {
  const Matrix w = random_matrix(rng, n, rank);
  return SymMatrix(w * w.transpose() + shift * Matrix::Identity(n, n));
}

McReport ensemble(const CaseRun& c) {
  McOptions o;
  o.n_trials = 10000;
  o.seed = kSeed;
  o.mode = default_sampling(c.spec);
  return run_ensemble(c.spec, c.result.schedule, c.result.policy, o);
}

void terminal_constraints(std::map<BuiltinCase, CaseRun>& runs) {
  bool pass = true;
  std::ostringstream d;
  for (auto c : {BuiltinCase::Case1, BuiltinCase::Case2}) {
    const auto& r = runs.at(c);
    d << to_string(c) << ": ";
    if (!r.result.converged()) {
      pass = false;
      d << to_string(r.result.status) << "; ";
      continue;
    }
    const auto& last = r.result.predicted.posterior.back();
    const double mean_err = (last.mu - r.spec.boundary.muf).norm();
    const double min_eig = min_eigenvalue(r.spec.boundary.Pf - last.truth());
    const bool ok = mean_err <= 1e-6 && min_eig >= -1e-6 && r.seconds < 300.0;
    pass = pass && ok;
    d << "|mu-muf|=" << fmt(mean_err) << " min eig(Pf-P)=" << fmt(min_eig) << " time=" << fmt(r.seconds)
      << "s; ";
  }
  report(1, pass, "terminal mean and covariance constraints after re-propagation", d.str());
}

void convergence(std::map<BuiltinCase, CaseRun>& runs) {
  bool pass = true;
  std::ostringstream d;
  for (auto& [c, r] : runs) {
    const auto& tr = r.result.trace;
    const int iters = tr.empty() ? 0 : tr.back().iter;
    const bool ok = r.result.converged() && iters <= 200 && tr.back().max_e < r.spec.scp.eps_rank &&
                    tr.back().dJ < r.spec.scp.eps_obj;
    pass = pass && ok;
    d << to_string(c) << ": " << to_string(r.result.status) << " in " << iters << " iterations; ";
  }
  report(2, pass, "IRM convergence within 200 iterations", d.str());
}

void recursion_equivalence() {
  const auto spec = builtin_double_integrator(BuiltinCase::Case1);
  const auto sched = design_filter(spec);
  std::mt19937_64 rng(3);
  double worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    Policy pol = Policy::zero(spec.N, spec.dims.nx, spec.dims.nu);
    for (std::size_t k = 0; k < pol.size(); ++k) {
      pol.ubar[k] = random_matrix(rng, spec.dims.nu, 1);
      pol.K[k] = random_matrix(rng, spec.dims.nu, spec.dims.nx, 0.3);
    }
    const auto traj = propagate(spec, sched, pol);
    const auto legacy = legacy_recursion(spec, sched, pol);
    for (std::size_t k = 0; k < legacy.size(); ++k) {
      worst = std::max(worst, rel_frobenius(traj.posterior[k].truth().matrix(), legacy[k].P.matrix()));
      worst = std::max(worst, rel_frobenius(traj.posterior[k].estimate().matrix(), legacy[k].Phat.matrix()));
    }
  }
  report(3, worst <= 1e-9, "augmented and orthogonality-based recursions agree for Case 1, p = 1",
         "20 gain sequences, max relative Frobenius error " + fmt(worst));
}

void legacy_cross_validation(const CaseRun& r) {
  if (!r.result.converged()) {
    report(4, false, "legacy recursion reproduces the Case 1 trajectory", "Case 1 did not converge");
    return;
  }
  const auto legacy = legacy_recursion(r.spec, r.result.schedule, r.result.policy);
  double worst = 0.0;
  for (std::size_t k = 0; k < legacy.size(); ++k) {
    worst = std::max(worst, rel_frobenius(r.result.predicted.posterior[k].truth().matrix(), legacy[k].P.matrix()));
  }
  report(4, worst <= 1e-6, "legacy recursion reproduces the Case 1 trajectory",
         "max relative Frobenius error " + fmt(worst));
}

void monte_carlo(std::map<BuiltinCase, CaseRun>& runs, std::map<BuiltinCase, McReport>& reports) {
  bool pass = true;
  std::ostringstream d;
  for (auto& [c, r] : runs) {
    if (!r.result.converged()) {
      pass = false;
      d << to_string(c) << ": not converged; ";
      continue;
    }
    const auto t0 = std::chrono::steady_clock::now();
    reports[c] = ensemble(r);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const auto& rep = reports.at(c);
    double cov = 0.0, mean = 0.0;
    for (int k : kMcStages) {
      cov = std::max(cov, rep.stages[static_cast<std::size_t>(k)].truth_cov_error);
      mean = std::max(mean, rep.stages[static_cast<std::size_t>(k)].mean_max_abs);
    }
    const bool ok = cov <= 0.05 && mean <= 0.05;
    pass = pass && ok;
    d << to_string(c) << ": cov err " << fmt(cov) << " mean err " << fmt(mean) << " (" << fmt(secs) << "s); ";
  }
  report(5, pass, "Monte Carlo statistics match predictions at k = 0,5,10,15,19 (n = 10000)", d.str());
}

void orthogonality_violation(const CaseRun& r, const std::map<BuiltinCase, McReport>& reports) {
  if (!r.result.converged() || !reports.contains(BuiltinCase::Case3)) {
    report(6, false, "legacy prediction misses Monte Carlo for Case 3", "Case 3 did not converge");
    return;
  }
  const auto& rep = reports.at(BuiltinCase::Case3);
  const auto legacy = legacy_recursion(r.spec, r.result.schedule, r.result.policy, LegacyMode::AssumeOrthogonality);
  const auto& emp = rep.stages.back().truth();
  const double legacy_err = rel_frobenius(emp.matrix(), legacy.back().P.matrix());
  const double ours = rep.stages.back().truth_cov_error;
  report(6, legacy_err > 0.05 && ours <= 0.05, "legacy prediction misses Monte Carlo for Case 3",
         "terminal relative error legacy " + fmt(legacy_err) + ", augmented " + fmt(ours));
}

void relaxation_tightness(std::map<BuiltinCase, CaseRun>& runs) {
  bool pass = true;
  std::ostringstream d;
  for (auto& [c, r] : runs) {
    if (!r.result.converged()) {
      pass = false;
      d << to_string(c) << ": not converged; ";
      continue;
    }
    double worst_ratio = 0.0;
    const auto& stages = r.result.final_solution.stages;
    const auto gaps = relaxation_gap(r.result.final_solution);
    for (std::size_t k = 0; k < stages.size(); ++k) {
      const double bound = 10 * r.spec.scp.eps_rank * (1 + stages[k].s_aug().norm());
      worst_ratio = std::max(worst_ratio, gaps[k] / bound);
    }
    pass = pass && worst_ratio <= 1.0;
    d << to_string(c) << ": max gap/bound " << fmt(worst_ratio) << "; ";
  }
  report(7, pass, "relaxation gap within 10 eps (1 + |S|) at every stage", d.str());
}

void mean_decoupling(std::map<BuiltinCase, CaseRun>& runs) {
  const auto& a = runs.at(BuiltinCase::Case1).result;
  const auto& b = runs.at(BuiltinCase::Case2).result;
  if (!a.converged() || !b.converged()) {
    report(8, false, "Case 1 and Case 2 mean trajectories coincide", "a case did not converge");
    return;
  }
  double worst = 0.0;
  for (std::size_t k = 0; k < a.predicted.posterior.size(); ++k) {
    worst = std::max(worst, (a.predicted.posterior[k].mu - b.predicted.posterior[k].mu).cwiseAbs().maxCoeff());
  }
  report(8, worst <= 1e-6, "Case 1 and Case 2 mean trajectories coincide", "max difference " + fmt(worst));
}

void covariance_trends(std::map<BuiltinCase, CaseRun>& runs) {
  const auto trend = [](const ScpResult& r) {
    return std::pair{r.predicted.posterior.front().truth().matrix().trace(),
                     r.predicted.posterior.back().truth().matrix().trace()};
  };
  const auto& a = runs.at(BuiltinCase::Case1).result;
  const auto& b = runs.at(BuiltinCase::Case2).result;
  if (!a.converged() || !b.converged()) {
    report(9, false, "truth covariance shrinks for Case 1 and grows for Case 2", "a case did not converge");
    return;
  }
  const auto [a0, a1] = trend(a);
  const auto [b0, b1] = trend(b);
  report(9, a1 < a0 && b1 > b0, "truth covariance shrinks for Case 1 and grows for Case 2",
         "Case 1 trace " + fmt(a0) + " -> " + fmt(a1) + ", Case 2 trace " + fmt(b0) + " -> " + fmt(b1));
}

void property_suites(const CaseRun& toy_source) {
  std::mt19937_64 rng(10);
  const auto spec = builtin_double_integrator(BuiltinCase::Case1);
  const auto& st = spec.stages.front();
  const int nx = spec.dims.nx, nu = spec.dims.nu, ny = spec.dims.ny;

  int closure = 0;
  for (int t = 0; t < 100; ++t) {
    const SymMatrix P = random_psd(rng, 2 * nx, 1 + t % (2 * nx));
    const Matrix L = random_matrix(rng, nx, ny);
    const Matrix K = random_matrix(rng, nu, nx);
    const SymMatrix f = cov_filter_update(P, st, L);
    const SymMatrix c = cov_control_update(P, st, K);
    const double tol = 1e-9 * (1 + f.norm() + c.norm());
    if (is_psd(f, tol) && is_psd(c, tol)) ++closure;
  }

  int schur = 0;
  const int m = 2 * nx + nu;
  for (int t = 0; t < 100; ++t) {
    const SymMatrix phat = random_psd(rng, nx, nx, 0.1);
    const Matrix U = random_matrix(rng, m - nx, nx);
    Matrix perturb = random_psd(rng, m - nx, 2).matrix() + 0.05 * Matrix::Identity(m - nx, m - nx);
    if (t % 2 == 1) perturb = -perturb;
    if (t % 4 == 3) perturb.diagonal().head(1) *= -40.0;
    const Matrix S = U * phat.matrix().inverse() * U.transpose() + perturb;
    Matrix M(m, m);
    M << phat.matrix(), U.transpose(), U, S;
    const SymMatrix Ms = symmetrize(M);
    const SymMatrix res = schur_residual(phat, U, symmetrize(S));
    if (is_psd(Ms, 1e-12) == is_psd(res, 1e-12)) ++schur;
  }

  double guttman = 0.0;
  for (int t = 0; t < 50; ++t) {
    const SymMatrix phat = random_psd(rng, nx, nx, 0.1);
    const Matrix U = random_matrix(rng, m - nx, nx);
    Matrix M(m, m);
    M << phat.matrix(), U.transpose(), U, U * phat.matrix().inverse() * U.transpose();
    guttman = std::max(guttman, std::abs(rank_data(symmetrize(M), nx).e));
  }

  bool deterministic = toy_source.result.converged();
  if (deterministic) {
    McOptions o;
    o.n_trials = 2000;
    o.seed = kSeed;
    o.threads = 1;
    const auto a = run_ensemble(toy_source.spec, toy_source.result.schedule, toy_source.result.policy, o);
    o.threads = 8;
    const auto b = run_ensemble(toy_source.spec, toy_source.result.schedule, toy_source.result.policy, o);
    for (std::size_t k = 0; k < a.stages.size(); ++k) {
      deterministic = deterministic && a.stages[k].mean == b.stages[k].mean && a.stages[k].cov == b.stages[k].cov;
    }
  }

  report(10, closure == 100 && schur == 100 && guttman <= 1e-10 && deterministic,
         "property suites",
         "PSD closure " + std::to_string(closure) + "/100, Schur verdicts " + std::to_string(schur) +
             "/100, Guttman max e " + fmt(guttman) + ", MC determinism " + (deterministic ? "yes" : "no"));
}

}  // namespace

int main() {
  std::map<BuiltinCase, CaseRun> runs;
  for (auto c : {BuiltinCase::Case1, BuiltinCase::Case2, BuiltinCase::Case3}) {
    CaseRun r;
    r.spec = builtin_double_integrator(c);
    const auto t0 = std::chrono::steady_clock::now();
    r.result = run(r.spec);
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cerr << to_string(c) << ": " << to_string(r.result.status) << " after " << r.seconds << " s\n";
    runs.emplace(c, std::move(r));
  }
  std::map<BuiltinCase, McReport> reports;

  terminal_constraints(runs);
  convergence(runs);
  recursion_equivalence();
  legacy_cross_validation(runs.at(BuiltinCase::Case1));
  monte_carlo(runs, reports);
  orthogonality_violation(runs.at(BuiltinCase::Case3), reports);
  relaxation_tightness(runs);
  mean_decoupling(runs);
  covariance_trends(runs);
  property_suites(runs.at(BuiltinCase::Case1));

  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
