#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "csof/result.hpp"

namespace fs = std::filesystem;
using namespace csof;

namespace {

enum Exit : int {
  kOk = 0,
  kInternal = 1,
  kUsage = 2,
  kInvalidInput = 3,
  kInfeasible = 4,
  kNoConvergence = 5,
  kNumerical = 6,
  kToleranceBreach = 7,
};

int exit_code(ScpStatus s) {
  switch (s) {
    case ScpStatus::Converged: return kOk;
    case ScpStatus::NoConvergence: return kNoConvergence;
    case ScpStatus::Infeasible: return kInfeasible;
    case ScpStatus::NumericalTrouble: return kNumerical;
  }
  return kInternal;
}

struct SolveArgs {
  std::string problem_file;
  std::string builtin;
  std::string output = "result.json";
  int mc = 0;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  bool legacy_compare = false;
  bool dump_program = false;
  bool hard_decrease = false;
  bool quiet = false;
  std::string trials_csv;
};

struct ValidateArgs {
  std::string result_file;
  int mc = 10000;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  bool legacy = false;
  double mean_tol = 0.05;
  double cov_tol = 0.05;
  std::vector<int> stages;
  std::string output;
};

struct ExportArgs {
  std::string result_file;
  std::string out_dir;
};

std::vector<int> default_check_stages(int N) {
  std::vector<int> ks;
  for (int k = 0; k < N - 1; k += 5) ks.push_back(k);
  ks.push_back(N - 1);
  return ks;
}

void print_stage_table(const McReport& rep, const std::vector<int>& ks,
                       const std::vector<LegacyStage>* legacy) {
  std::cout << "   k   mean_err   cov_err" << (legacy ? "   legacy_err" : "") << "\n";
  for (int k : ks) {
    const auto& s = rep.stages[static_cast<std::size_t>(k)];
    std::cout << std::setw(4) << k << std::scientific << std::setprecision(3) << "  "
              << s.mean_max_abs << "  " << s.truth_cov_error;
    if (legacy) {
      std::cout << "  "
                << rel_frobenius(s.truth().matrix(), (*legacy)[static_cast<std::size_t>(k)].P.matrix());
    }
    std::cout << std::defaultfloat << "\n";
  }
}

int cmd_solve(const SolveArgs& a) {
  ProblemSpec spec;
  if (!a.builtin.empty()) {
    const auto c = parse_builtin_case(a.builtin);
    if (!c) {
      std::cerr << "error: unknown case '" << a.builtin << "' (expected case1, case2 or case3)\n";
      return kUsage;
    }
    spec = builtin_double_integrator(*c);
  } else {
    spec = load_problem(a.problem_file);
  }
  std::cerr << "problem " << spec.name << ": N=" << spec.N << " nx=" << spec.dims.nx
            << " nu=" << spec.dims.nu << " p=" << spec.underweight_p << "\n";

  ScpOptions opts;
  opts.hard_decrease = a.hard_decrease;
  if (!a.quiet) {
    opts.on_iteration = [](const IterationRecord& r) {
      std::fprintf(stderr, "iter %3d  max_e %.3e  J %.9f  |dJ| %.3e  w %.4g\n", r.iter, r.max_e, r.J,
                   r.dJ, r.weight);
    };
  }
  if (a.dump_program) {
    const fs::path path = fs::path(a.output).replace_extension(".program.txt");
    opts.on_program = [path](int iter, const conic::ConicProgram& prog) {
      if (iter != 0) return;
      std::ofstream out(path);
      prog.dump(out);
      std::cerr << "relaxed program written to " << path.string() << "\n";
    };
  }

  const auto scp = run(spec, opts);
  RunResult result = make_result(spec, scp);
  std::cerr << to_string(scp.status) << ": " << scp.message << "\n";

  if (scp.converged()) {
    if (a.legacy_compare) {
      result.legacy = legacy_recursion(spec, scp.schedule, scp.policy, LegacyMode::AssumeOrthogonality);
    }
    if (a.mc > 0) {
      McOptions mo;
      mo.n_trials = a.mc;
      mo.seed = a.seed;
      mo.mode = default_sampling(spec);
      mo.threads = a.threads;
      mo.keep_trials = !a.trials_csv.empty();
      auto rep = run_ensemble(spec, scp.schedule, scp.policy, mo);
      print_stage_table(rep, default_check_stages(spec.N), result.legacy ? &*result.legacy : nullptr);
      if (!a.trials_csv.empty()) {
        std::ofstream out(a.trials_csv);
        write_trials_csv(out, rep);
        rep.trials.clear();
      }
      result.monte_carlo = std::move(rep);
    }
    const auto& last = result.predicted.posterior.back();
    std::cerr << "terminal: |mu - muf| = " << (last.mu - spec.boundary.muf).norm()
              << ", min eig(Pf - P) = " << min_eigenvalue(spec.boundary.Pf - last.truth()) << "\n";
  }
  save_result(result, a.output);
  std::cerr << "result written to " << a.output << "\n";
  return exit_code(scp.status);
}

int cmd_validate(const ValidateArgs& a) {
  if (a.mc < 2) {
    std::cerr << "error: --mc must be at least 2\n";
    return kUsage;
  }
  const RunResult stored = load_result(a.result_file);
  if (stored.status != ScpStatus::Converged || stored.policy.size() == 0) {
    std::cerr << "error: " << a.result_file << " holds no converged policy\n";
    return kInvalidInput;
  }
  const auto& spec = stored.problem;
  std::vector<int> ks = a.stages.empty() ? default_check_stages(spec.N) : a.stages;
  for (int k : ks) {
    if (k < 0 || k >= spec.N) {
      std::cerr << "error: stage " << k << " outside 0.." << spec.N - 1 << "\n";
      return kUsage;
    }
  }

  McOptions mo;
  mo.n_trials = a.mc;
  mo.seed = a.seed;
  mo.mode = default_sampling(spec);
  mo.threads = a.threads;
  mo.mean_tol = a.mean_tol;
  mo.cov_tol = a.cov_tol;
  const auto rep = run_ensemble(spec, stored.schedule, stored.policy, mo);

  std::vector<LegacyStage> legacy;
  if (a.legacy) {
    legacy = stored.legacy ? *stored.legacy
                           : legacy_recursion(spec, stored.schedule, stored.policy,
                                              LegacyMode::AssumeOrthogonality);
  }
  print_stage_table(rep, ks, a.legacy ? &legacy : nullptr);

  bool ok = rep.consistent(ks);
  if (a.legacy) {
    for (int k : ks) {
      const auto& s = rep.stages[static_cast<std::size_t>(k)];
      if (rel_frobenius(s.truth().matrix(), legacy[static_cast<std::size_t>(k)].P.matrix()) > a.cov_tol) {
        ok = false;
      }
    }
  }
  if (!a.output.empty()) {
    RunResult out = stored;
    out.monte_carlo = rep;
    if (a.legacy) out.legacy = legacy;
    save_result(out, a.output);
  }
  std::cout << (ok ? "PASS" : "FAIL") << ": " << (a.legacy ? "legacy prediction" : "prediction")
            << " vs " << a.mc << " trials (mean tol " << a.mean_tol << ", cov tol " << a.cov_tol
            << ")\n";
  return ok ? kOk : kToleranceBreach;
}

std::ofstream open_csv(const fs::path& dir, const char* name) {
  std::ofstream out(dir / name);
  if (!out) throw Error("cannot write " + (dir / name).string());
  out << std::setprecision(17);
  return out;
}

int cmd_export(const ExportArgs& a) {
  const RunResult r = load_result(a.result_file);
  const fs::path dir(a.out_dir);
  fs::create_directories(dir);
  const int nx = r.problem.dims.nx;

  if (!r.predicted.posterior.empty()) {
    auto mean = open_csv(dir, "mean.csv");
    mean << "k";
    for (int i = 0; i < nx; ++i) mean << ",mu" << i;
    mean << "\n";
    auto ell = open_csv(dir, "ellipse.csv");
    ell << "k,lambda_major,lambda_minor,angle_rad,semi_major,semi_minor\n";
    auto cov = open_csv(dir, "cov_trace.csv");
    cov << "k,trace_P,trace_Phat,trace_Ptilde\n";
    for (std::size_t k = 0; k < r.predicted.posterior.size(); ++k) {
      const auto& m = r.predicted.posterior[k];
      mean << k;
      for (int i = 0; i < nx; ++i) mean << "," << m.mu(i);
      mean << "\n";
      const auto ed = eig_sym(m.truth().principal_block(0, 2));
      const double major = std::max(ed.values(1), 0.0);
      const double minor = std::max(ed.values(0), 0.0);
      ell << k << "," << major << "," << minor << ","
          << std::atan2(ed.vectors(1, 1), ed.vectors(0, 1)) << "," << std::sqrt(major) << ","
          << std::sqrt(minor) << "\n";
      cov << k << "," << m.truth().trace() << "," << m.estimate().trace() << ","
          << m.error_cov().trace() << "\n";
    }
    auto gains = open_csv(dir, "gains.csv");
    gains << "k,spectral_norm\n";
    for (std::size_t k = 0; k < r.gain_norms.size(); ++k) gains << k << "," << r.gain_norms[k] << "\n";
    std::cout << "wrote mean.csv ellipse.csv cov_trace.csv gains.csv\n";
  } else {
    std::cout << "no converged prediction; mean, ellipse and gain files skipped\n";
  }

  auto trace = open_csv(dir, "trace.csv");
  trace << "iter,max_e,J,abs_dJ,weight,max_gap,wall_seconds,backend_iterations\n";
  for (const auto& t : r.trace) {
    double gap = 0.0;
    for (double g : t.gaps) gap = std::max(gap, g);
    trace << t.iter << "," << t.max_e << "," << t.J << ",";
    if (std::isfinite(t.dJ)) trace << t.dJ;
    trace << "," << t.weight << "," << gap << "," << t.wall_seconds << "," << t.backend_iterations
          << "\n";
  }
  std::cout << "wrote trace.csv\n";

  if (r.monte_carlo) {
    const auto& mc = *r.monte_carlo;
    auto mean = open_csv(dir, "mc_mean.csv");
    mean << "k";
    for (int i = 0; i < nx; ++i) mean << ",mean" << i;
    mean << "\n";
    auto err = open_csv(dir, "mc_error.csv");
    err << "k,mean_error,mean_max_abs,truth_cov_error,aug_cov_error";
    if (r.legacy) err << ",legacy_cov_error";
    err << "\n";
    auto ell = open_csv(dir, "mc_ellipse.csv");
    ell << "k,lambda_major,lambda_minor,angle_rad,semi_major,semi_minor\n";
    for (std::size_t k = 0; k < mc.stages.size(); ++k) {
      const auto& s = mc.stages[k];
      mean << k;
      for (int i = 0; i < nx; ++i) mean << "," << s.mean(i);
      mean << "\n";
      err << k << "," << s.mean_error << "," << s.mean_max_abs << "," << s.truth_cov_error << ","
          << s.aug_cov_error;
      if (r.legacy) err << "," << rel_frobenius(s.truth().matrix(), (*r.legacy)[k].P.matrix());
      err << "\n";
      const auto ed = eig_sym(s.truth().principal_block(0, 2));
      const double major = std::max(ed.values(1), 0.0);
      const double minor = std::max(ed.values(0), 0.0);
      ell << k << "," << major << "," << minor << ","
          << std::atan2(ed.vectors(1, 1), ed.vectors(0, 1)) << "," << std::sqrt(major) << ","
          << std::sqrt(minor) << "\n";
    }
    std::cout << "wrote mc_mean.csv mc_error.csv mc_ellipse.csv\n";
  } else {
    std::cout << "no Monte Carlo report; mc_*.csv skipped\n";
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Covariance steering with output feedback"};
  app.require_subcommand(1);

  SolveArgs solve_args;
  auto* solve = app.add_subcommand("solve", "Design the filter, run the SCP solver and write a result file");
  auto* file_opt = solve->add_option("problem", solve_args.problem_file, "Problem file (JSON)");
  auto* case_opt = solve->add_option("--case", solve_args.builtin, "Builtin example: case1, case2 or case3");
  file_opt->excludes(case_opt);
  solve->add_option("-o,--output", solve_args.output, "Result file")->capture_default_str();
  solve->add_option("--mc", solve_args.mc, "Monte Carlo trials after convergence (0: none)")
      ->check(CLI::NonNegativeNumber);
  solve->add_option("--seed", solve_args.seed, "Monte Carlo seed");
  solve->add_option("--threads", solve_args.threads, "Monte Carlo worker threads (0: all cores)");
  solve->add_option("--trials-csv", solve_args.trials_csv, "Write every Monte Carlo trajectory to this CSV");
  solve->add_flag("--legacy-compare", solve_args.legacy_compare,
                  "Also evaluate the orthogonality-assuming covariance recursion");
  solve->add_flag("--dump-program", solve_args.dump_program,
                  "Write the relaxed conic program next to the result file");
  solve->add_flag("--hard-decrease", solve_args.hard_decrease,
                  "Constrain each rank surrogate not to exceed its previous value");
  solve->add_flag("-q,--quiet", solve_args.quiet, "No per-iteration progress lines");

  ValidateArgs val_args;
  auto* validate_cmd = app.add_subcommand("validate", "Re-run Monte Carlo against a stored policy");
  validate_cmd->add_option("result", val_args.result_file, "Result file written by solve")->required();
  validate_cmd->add_option("-n,--mc", val_args.mc, "Number of trials")->capture_default_str();
  validate_cmd->add_option("--seed", val_args.seed, "Monte Carlo seed");
  validate_cmd->add_option("--threads", val_args.threads, "Worker threads (0: all cores)");
  validate_cmd->add_option("--mean-tol", val_args.mean_tol, "Absolute mean tolerance")->capture_default_str();
  validate_cmd->add_option("--cov-tol", val_args.cov_tol, "Relative Frobenius covariance tolerance")
      ->capture_default_str();
  validate_cmd->add_option("--stages", val_args.stages, "Stages to check (default 0,5,10,...,N-1)");
  validate_cmd->add_flag("--legacy", val_args.legacy,
                         "Check the orthogonality-assuming prediction instead");
  validate_cmd->add_option("-o,--output", val_args.output, "Write the result with the fresh report");

  ExportArgs exp_args;
  auto* exp = app.add_subcommand("export-plots", "Write CSV series for plotting");
  exp->add_option("result", exp_args.result_file, "Result file")->required();
  exp->add_option("out_dir", exp_args.out_dir, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (solve->parsed()) {
      if (solve_args.problem_file.empty() && solve_args.builtin.empty()) {
        std::cerr << "error: solve needs a problem file or --case\n";
        return kUsage;
      }
      return cmd_solve(solve_args);
    }
    if (validate_cmd->parsed()) return cmd_validate(val_args);
    if (exp->parsed()) return cmd_export(exp_args);
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kInvalidInput;
  } catch (const ValidationError& e) {
    std::cerr << "invalid problem: " << e.what() << "\n";
    return kInvalidInput;
  } catch (const DimensionError& e) {
    std::cerr << "invalid problem: " << e.what() << "\n";
    return kInvalidInput;
  } catch (const SingularityError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kNumerical;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kInternal;
  }
  return kUsage;
}
