#include "csof/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>
#include <thread>

namespace csof {

std::string_view to_string(SamplingMode m) {
  switch (m) {
    case SamplingMode::Case1: return "case1";
    case SamplingMode::Case2: return "case2";
    case SamplingMode::Joint: return "joint";
  }
  return "unknown";
}

SamplingMode default_sampling(const ProblemSpec& spec) {
  switch (spec.boundary.init.mode) {
    case InitMode::Case1: return SamplingMode::Case1;
    case InitMode::Case2: return SamplingMode::Case2;
    case InitMode::Explicit: return SamplingMode::Joint;
  }
  return SamplingMode::Joint;
}

Rng trial_rng(std::uint64_t seed, std::uint64_t trial) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(trial), static_cast<std::uint32_t>(trial >> 32)};
  return Rng(seq);
}

GaussianSampler::GaussianSampler(Vector mean, const SymMatrix& cov) : mean_(std::move(mean)) {
  if (cov.dim() != mean_.size()) throw DimensionError("GaussianSampler: mean and covariance differ in size");
  auto ed = eig_sym(cov);
  for (Index i = 0; i < ed.values.size(); ++i) {
    double& l = ed.values(i);
    if (l < -1e-10) {
      std::ostringstream os;
      os << "GaussianSampler: covariance has eigenvalue " << l << " below -1e-10";
      throw NumericError(os.str());
    }
    l = std::max(l, 0.0);
  }
  factor_ = ed.vectors * ed.values.cwiseSqrt().asDiagonal();
}

Vector GaussianSampler::operator()(Rng& rng) const {
  std::normal_distribution<double> n01;
  Vector z(mean_.size());
  for (Index i = 0; i < z.size(); ++i) z(i) = n01(rng);
  return mean_ + factor_ * z;
}

InitialSampler::InitialSampler(const ProblemSpec& spec, SamplingMode mode)
    : mode_(mode), nx_(spec.dims.nx) {
  const auto& init = spec.boundary.init;
  const Vector& mu0 = spec.boundary.mu0;
  switch (mode) {
    case SamplingMode::Case1:
      if (init.mode != InitMode::Case1) {
        throw PreconditionError("case1 sampling requires a case1 initial covariance");
      }
      first_ = GaussianSampler(mu0, init.Phat0_minus);
      second_ = GaussianSampler(Vector::Zero(nx_), init.Ptilde0_minus);
      break;
    case SamplingMode::Case2:
      if (init.mode != InitMode::Case2) {
        throw PreconditionError("case2 sampling requires a case2 initial covariance");
      }
      first_ = GaussianSampler(mu0, init.P0);
      second_ = GaussianSampler(Vector::Zero(nx_), init.Ptilde0_minus);
      break;
    case SamplingMode::Joint: {
      Vector m(2 * nx_);
      m << mu0, mu0;
      first_ = GaussianSampler(m, init.Paug0);
      break;
    }
  }
}

InitialDraw InitialSampler::operator()(Rng& rng) const {
  switch (mode_) {
    case SamplingMode::Case1: {
      Vector xhat = first_(rng);
      Vector err = second_(rng);
      return {xhat + err, xhat};
    }
    case SamplingMode::Case2: {
      Vector x = first_(rng);
      Vector err = second_(rng);
      return {x, x + err};
    }
    case SamplingMode::Joint: {
      const Vector z = first_(rng);
      return {z.head(nx_), z.tail(nx_)};
    }
  }
  throw Error("InitialSampler: unknown mode");
}

InitialDraw sample_initial(const ProblemSpec& spec, SamplingMode mode, Rng& rng) {
  return InitialSampler(spec, mode)(rng);
}

std::vector<Vector> nominal_means(const ProblemSpec& spec, const Policy& policy) {
  if (static_cast<int>(policy.size()) != spec.N) {
    throw PreconditionError("nominal_means: policy length differs from horizon");
  }
  std::vector<Vector> mu{spec.boundary.mu0};
  for (int k = 0; k + 1 < spec.N; ++k) {
    const auto& st = spec.stages[static_cast<std::size_t>(k)];
    mu.push_back(mean_step(mu.back(), st.A, st.B, policy.ubar[static_cast<std::size_t>(k)]));
  }
  return mu;
}

namespace {

struct NoiseSamplers {
  std::vector<GaussianSampler> v;  ///< measurement noise per stage
};

NoiseSamplers make_noise(const ProblemSpec& spec) {
  NoiseSamplers n;
  for (const auto& st : spec.stages) n.v.emplace_back(Vector::Zero(st.R.dim()), st.R);
  return n;
}

TrialTrajectory simulate(const ProblemSpec& spec, const FilterSchedule& schedule,
                         const Policy& policy, const std::vector<Vector>& mu,
                         const NoiseSamplers& noise, const InitialDraw& init, Rng& rng) {
  const int N = spec.N;
  std::normal_distribution<double> n01;
  TrialTrajectory t;
  t.x.reserve(static_cast<std::size_t>(N));
  t.xhat_minus.reserve(static_cast<std::size_t>(N));
  t.xhat.reserve(static_cast<std::size_t>(N));
  Vector x = init.x0;
  Vector xhm = init.xhat0_minus;
  for (int k = 0; k < N; ++k) {
    const auto ks = static_cast<std::size_t>(k);
    const auto& st = spec.stages[ks];
    const Vector y = st.H * x + noise.v[ks](rng);
    const Vector xh = xhm + schedule.stages[ks].L * (y - st.H * xhm);
    t.x.push_back(x);
    t.xhat_minus.push_back(xhm);
    t.xhat.push_back(xh);
    if (k + 1 == N) break;
    const Vector u = policy.ubar[ks] + policy.K[ks] * (xh - mu[ks]);
    Vector w(st.G.cols());
    for (Index i = 0; i < w.size(); ++i) w(i) = n01(rng);
    x = st.A * x + st.B * u + st.G * w;
    xhm = st.A * xh + st.B * u;
    t.u.push_back(u);
  }
  return t;
}

// Shifted first and second moments of [x; x̂] and first moment of u per stage.
struct Moments {
  std::vector<Vector> s1;
  std::vector<Matrix> s2;
  std::vector<Vector> su;

  Moments(int N, Index nx, Index nu) {
    for (int k = 0; k < N; ++k) {
      s1.push_back(Vector::Zero(2 * nx));
      s2.push_back(Matrix::Zero(2 * nx, 2 * nx));
      su.push_back(Vector::Zero(k + 1 < N ? nu : 0));
    }
  }

  void add(const Moments& o) {
    for (std::size_t k = 0; k < s1.size(); ++k) {
      s1[k] += o.s1[k];
      s2[k] += o.s2[k];
      su[k] += o.su[k];
    }
  }
};

void accumulate(Moments& m, const TrialTrajectory& t, const std::vector<Vector>& mu) {
  const Index nx = mu.front().size();
  Vector z(2 * nx);
  for (std::size_t k = 0; k < t.x.size(); ++k) {
    z << t.x[k] - mu[k], t.xhat[k] - mu[k];
    m.s1[k] += z;
    m.s2[k].noalias() += z * z.transpose();
    if (k < t.u.size()) m.su[k] += t.u[k];
  }
}

// Trials are summed sequentially inside fixed-size blocks, and blocks are
// combined by a balanced pairwise tree over block index.
constexpr int kBlock = 64;

Moments reduce_pairwise(std::vector<Moments>& blocks, std::size_t lo, std::size_t hi) {
  if (hi - lo == 1) return std::move(blocks[lo]);
  const std::size_t mid = lo + (hi - lo) / 2;
  Moments left = reduce_pairwise(blocks, lo, mid);
  const Moments right = reduce_pairwise(blocks, mid, hi);
  left.add(right);
  return left;
}

}  // namespace

TrialTrajectory simulate_trial(const ProblemSpec& spec, const FilterSchedule& schedule,
                               const Policy& policy, const InitialDraw& init, Rng& rng) {
  if (static_cast<int>(schedule.size()) != spec.N) {
    throw PreconditionError("simulate_trial: filter schedule length differs from horizon");
  }
  return simulate(spec, schedule, policy, nominal_means(spec, policy), make_noise(spec), init, rng);
}

bool McReport::consistent(const std::vector<int>& stages_to_check) const {
  for (int k : stages_to_check) {
    if (k < 0 || k >= static_cast<int>(stages.size())) return false;
    const auto& s = stages[static_cast<std::size_t>(k)];
    if (s.mean_max_abs > mean_tol || s.truth_cov_error > cov_tol) return false;
  }
  return true;
}

McReport run_ensemble(const ProblemSpec& spec, const FilterSchedule& schedule, const Policy& policy,
                      const McOptions& options) {
  if (options.n_trials < 2) throw PreconditionError("run_ensemble: need at least two trials");
  if (static_cast<int>(schedule.size()) != spec.N) {
    throw PreconditionError("run_ensemble: filter schedule length differs from horizon");
  }
  const int N = spec.N;
  const Index nx = spec.dims.nx;
  const Index nu = spec.dims.nu;
  const auto mu = nominal_means(spec, policy);
  const auto noise = make_noise(spec);
  const InitialSampler sampler(spec, options.mode);

  const int n = options.n_trials;
  const int n_blocks = (n + kBlock - 1) / kBlock;
  std::vector<Moments> blocks(static_cast<std::size_t>(n_blocks), Moments(N, nx, nu));
  std::vector<TrialTrajectory> kept(options.keep_trials ? static_cast<std::size_t>(n) : 0);

  auto work = [&](int b) {
    Moments& m = blocks[static_cast<std::size_t>(b)];
    const int end = std::min(n, (b + 1) * kBlock);
    for (int i = b * kBlock; i < end; ++i) {
      Rng rng = trial_rng(options.seed, static_cast<std::uint64_t>(i));
      const InitialDraw init = sampler(rng);
      auto t = simulate(spec, schedule, policy, mu, noise, init, rng);
      accumulate(m, t, mu);
      if (options.keep_trials) kept[static_cast<std::size_t>(i)] = std::move(t);
    }
  };
  unsigned threads = options.threads ? options.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(n_blocks));
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        for (int b = static_cast<int>(t); b < n_blocks; b += static_cast<int>(threads)) work(b);
      });
    }
  }
  const Moments total = reduce_pairwise(blocks, 0, blocks.size());

  McReport rep;
  rep.n_trials = n;
  rep.seed = options.seed;
  rep.mode = options.mode;
  rep.mean_tol = options.mean_tol;
  rep.cov_tol = options.cov_tol;
  rep.predicted = propagate(spec, schedule, policy).posterior;
  rep.trials = std::move(kept);
  const double dn = n;
  for (int k = 0; k < N; ++k) {
    const auto ks = static_cast<std::size_t>(k);
    const Vector d = total.s1[ks] / dn;
    McStage s;
    s.mean = mu[ks] + d.head(nx);
    s.mean_xhat = mu[ks] + d.tail(nx);
    s.cov = SymMatrix((total.s2[ks] - dn * d * d.transpose()) / (dn - 1.0));
    s.mean_u = total.su[ks] / dn;
    const auto& pred = rep.predicted[ks];
    s.mean_error = (s.mean - pred.mu).norm();
    s.mean_max_abs = (s.mean - pred.mu).cwiseAbs().maxCoeff();
    s.truth_cov_error = rel_frobenius(s.truth().matrix(), pred.truth().matrix());
    s.aug_cov_error = rel_frobenius(s.cov.matrix(), pred.Paug.matrix());
    rep.stages.push_back(std::move(s));
  }

  const auto& last = rep.stages.back();
  const auto& Pf = spec.boundary.Pf;
  rep.terminal_mean_error = (last.mean - spec.boundary.muf).cwiseAbs().maxCoeff();
  rep.terminal_min_eig = min_eigenvalue(Pf - last.truth());
  rep.terminal_ok = rep.terminal_mean_error <= options.mean_tol &&
                    rep.terminal_min_eig >= -options.cov_tol * Pf.norm();
  return rep;
}

void write_trials_csv(std::ostream& os, const McReport& report) {
  if (report.trials.empty()) return;
  const auto& t0 = report.trials.front();
  const Index nx = t0.x.front().size();
  const Index nu = t0.u.empty() ? 0 : t0.u.front().size();
  os << "trial,k";
  for (Index i = 0; i < nx; ++i) os << ",x" << i;
  for (Index i = 0; i < nx; ++i) os << ",xhat" << i;
  for (Index i = 0; i < nu; ++i) os << ",u" << i;
  os << "\n";
  const auto old = os.precision(17);
  for (std::size_t trial = 0; trial < report.trials.size(); ++trial) {
    const auto& t = report.trials[trial];
    for (std::size_t k = 0; k < t.x.size(); ++k) {
      os << trial << "," << k;
      for (Index i = 0; i < nx; ++i) os << "," << t.x[k](i);
      for (Index i = 0; i < nx; ++i) os << "," << t.xhat[k](i);
      for (Index i = 0; i < nu; ++i) {
        os << ",";
        if (k < t.u.size()) os << t.u[k](i);
      }
      os << "\n";
    }
  }
  os.precision(old);
}

}  // namespace csof
