#include "csof/scp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <future>
#include <limits>
#include <sstream>

namespace csof {

RankData rank_data(const SymMatrix& M, Index nx) {
  const Index m = M.dim();
  if (nx <= 0 || nx >= m) throw DimensionError("rank_data: target rank must lie in (0, dim)");
  const auto ed = eig_sym(M);
  const Index r = m - nx;
  return {ed.vectors.leftCols(r), ed.values(r - 1)};
}

std::vector<RankData> extract_rank_data(const SubproblemSolution& solution) {
  if (solution.status != SolveStatus::Optimal) {
    throw PreconditionError("extract_rank_data: solution is not optimal");
  }
  std::vector<std::future<RankData>> jobs;
  jobs.reserve(solution.stages.size());
  for (const auto& s : solution.stages) {
    jobs.push_back(std::async(std::launch::async, [&s] { return rank_data(s.stacked(), s.nx()); }));
  }
  std::vector<RankData> out;
  out.reserve(jobs.size());
  for (auto& j : jobs) out.push_back(j.get());
  return out;
}

std::vector<double> initialize_multipliers(int N) {
  return std::vector<double>(static_cast<std::size_t>(N), 0.0);
}

std::string_view to_string(ScpStatus s) {
  switch (s) {
    case ScpStatus::Converged: return "converged";
    case ScpStatus::NoConvergence: return "no_convergence";
    case ScpStatus::Infeasible: return "infeasible";
    case ScpStatus::NumericalTrouble: return "numerical_trouble";
  }
  return "unknown";
}

namespace {

ScpStatus from_backend(SolveStatus s) {
  return s == SolveStatus::Infeasible ? ScpStatus::Infeasible : ScpStatus::NumericalTrouble;
}

}  // namespace

ScpResult run(const ProblemSpec& spec, const ScpOptions& options) {
  validate(spec);
  const auto backend = options.backend ? options.backend : conic::default_backend();
  const auto& prm = spec.scp;
  const auto start = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };

  ScpResult result;
  result.schedule = design_filter(spec);

  auto relaxed = assemble_relaxed(spec, result.schedule);
  if (options.on_program) options.on_program(0, relaxed.program);
  auto sol = solve(relaxed, *backend);
  if (sol.status != SolveStatus::Optimal) {
    result.status = from_backend(sol.status);
    result.message = "relaxed problem: " + sol.detail;
    return result;
  }

  auto rank = extract_rank_data(sol);
  auto record = [&](int iter, double w, const std::vector<double>& lambda, double dJ) {
    IterationRecord rec;
    rec.iter = iter;
    rec.J = sol.objective;
    rec.dJ = dJ;
    rec.weight = w;
    rec.multipliers = lambda;
    for (const auto& r : rank) rec.e.push_back(r.e);
    rec.max_e = *std::max_element(rec.e.begin(), rec.e.end());
    rec.gaps = relaxation_gap(sol);
    rec.wall_seconds = elapsed();
    rec.backend_iterations = sol.backend_iterations;
    if (options.on_iteration) options.on_iteration(rec);
    result.trace.push_back(std::move(rec));
  };
  std::vector<double> lambda = initialize_multipliers(spec.N);
  record(0, 0.0, lambda, std::numeric_limits<double>::infinity());

  double w = prm.w0;
  double J_prev = std::numeric_limits<double>::infinity();
  for (int i = 1; i <= prm.max_iters; ++i) {
    IrmTerms terms;
    for (const auto& r : rank) terms.eigvecs.push_back(r.V);
    terms.multipliers = lambda;
    terms.weight = w;
    if (options.hard_decrease) {
      std::vector<double> bound;
      for (const auto& r : rank) bound.push_back(std::max(r.e, 0.0));
      terms.e_upper = std::move(bound);
    }
    auto problem = assemble_irm_iterate(spec, result.schedule, terms);
    if (options.on_program) options.on_program(i, problem.program);
    sol = solve(problem, *backend);
    if (sol.status != SolveStatus::Optimal) {
      result.status = from_backend(sol.status);
      std::ostringstream os;
      os << "iteration " << i << ": " << sol.detail;
      result.message = os.str();
      return result;
    }
    rank = extract_rank_data(sol);
    const double dJ = std::abs(sol.objective - J_prev);
    J_prev = sol.objective;
    record(i, w, lambda, dJ);

    for (std::size_t k = 0; k < lambda.size(); ++k) lambda[k] += w * rank[k].e;
    w *= prm.beta;

    const auto& last = result.trace.back();
    if (last.max_e < prm.eps_rank && dJ < prm.eps_obj) {
      result.status = ScpStatus::Converged;
      break;
    }
    if (w > prm.w_max) {
      result.status = ScpStatus::NoConvergence;
      std::ostringstream os;
      os << "penalty weight exceeded " << prm.w_max << " after " << i << " iterations";
      result.message = os.str();
      break;
    }
  }
  if (result.trace.back().iter == prm.max_iters && result.status != ScpStatus::Converged &&
      result.message.empty()) {
    result.status = ScpStatus::NoConvergence;
    std::ostringstream os;
    os << "no convergence within " << prm.max_iters << " iterations";
    result.message = os.str();
  }
  result.final_solution = std::move(sol);
  if (result.status != ScpStatus::Converged) return result;

  result.policy = recover_gains(result.final_solution);
  result.predicted = propagate(spec, result.schedule, result.policy);
  std::ostringstream os;
  os << "converged after " << result.trace.back().iter << " iterations";
  result.message = os.str();
  return result;
}

}  // namespace csof
