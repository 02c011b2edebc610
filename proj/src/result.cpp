#include "csof/result.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "csof/json_io.hpp"

namespace csof {

using json_io::json;

namespace {

const json& at(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) {
    throw ParseError(where + ": missing required key '" + key + "'");
  }
  return j.at(key);
}

double num(const json& j, const std::string& where) {
  if (j.is_null()) return std::numeric_limits<double>::infinity();
  if (!j.is_number()) throw ParseError(where + ": expected a number");
  return j.get<double>();
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json doubles(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(finite_or_null(x));
  return a;
}

std::vector<double> doubles_from(const json& j, const std::string& where) {
  if (!j.is_array()) throw ParseError(where + ": expected an array");
  std::vector<double> out;
  for (const auto& x : j) out.push_back(num(x, where));
  return out;
}

json moments_to_json(const std::vector<AugmentedMoments>& m) {
  json a = json::array();
  for (const auto& s : m) {
    a.push_back({{"mu", json_io::vector_to_json(s.mu)}, {"Paug", json_io::sym_to_json(s.Paug)}});
  }
  return a;
}

std::vector<AugmentedMoments> moments_from_json(const json& j, Phase phase, const std::string& where) {
  std::vector<AugmentedMoments> out;
  if (!j.is_array()) throw ParseError(where + ": expected an array");
  for (std::size_t k = 0; k < j.size(); ++k) {
    const std::string w = where + "[" + std::to_string(k) + "]";
    out.push_back({json_io::vector_from_json(at(j[k], "mu", w), w + ".mu"),
                   json_io::sym_from_json(at(j[k], "Paug", w), w + ".Paug"), phase});
  }
  return out;
}

std::optional<ScpStatus> parse_status(std::string_view s) {
  for (auto st : {ScpStatus::Converged, ScpStatus::NoConvergence, ScpStatus::Infeasible,
                  ScpStatus::NumericalTrouble}) {
    if (to_string(st) == s) return st;
  }
  return std::nullopt;
}

std::optional<SamplingMode> parse_sampling(std::string_view s) {
  for (auto m : {SamplingMode::Case1, SamplingMode::Case2, SamplingMode::Joint}) {
    if (to_string(m) == s) return m;
  }
  return std::nullopt;
}

json mc_to_json(const McReport& r) {
  json stages = json::array();
  for (std::size_t k = 0; k < r.stages.size(); ++k) {
    const auto& s = r.stages[k];
    stages.push_back({{"k", k},
                      {"mean", json_io::vector_to_json(s.mean)},
                      {"mean_xhat", json_io::vector_to_json(s.mean_xhat)},
                      {"cov", json_io::sym_to_json(s.cov)},
                      {"mean_u", json_io::vector_to_json(s.mean_u)},
                      {"mean_error", s.mean_error},
                      {"mean_max_abs", s.mean_max_abs},
                      {"truth_cov_error", s.truth_cov_error},
                      {"aug_cov_error", s.aug_cov_error}});
  }
  return {{"n_trials", r.n_trials},
          {"seed", r.seed},
          {"sampling", std::string(to_string(r.mode))},
          {"mean_tol", r.mean_tol},
          {"cov_tol", r.cov_tol},
          {"terminal_ok", r.terminal_ok},
          {"terminal_min_eig", r.terminal_min_eig},
          {"terminal_mean_error", r.terminal_mean_error},
          {"stages", std::move(stages)}};
}

McReport mc_from_json(const json& j, const std::vector<AugmentedMoments>& predicted) {
  const std::string w = "monte_carlo";
  McReport r;
  r.n_trials = at(j, "n_trials", w).get<int>();
  r.seed = at(j, "seed", w).get<std::uint64_t>();
  const auto mode = parse_sampling(at(j, "sampling", w).get<std::string>());
  if (!mode) throw ParseError(w + ".sampling: unknown procedure");
  r.mode = *mode;
  r.mean_tol = num(at(j, "mean_tol", w), w);
  r.cov_tol = num(at(j, "cov_tol", w), w);
  r.terminal_ok = at(j, "terminal_ok", w).get<bool>();
  r.terminal_min_eig = num(at(j, "terminal_min_eig", w), w);
  r.terminal_mean_error = num(at(j, "terminal_mean_error", w), w);
  for (const auto& s : at(j, "stages", w)) {
    McStage st;
    st.mean = json_io::vector_from_json(at(s, "mean", w), w + ".mean");
    st.mean_xhat = json_io::vector_from_json(at(s, "mean_xhat", w), w + ".mean_xhat");
    st.cov = json_io::sym_from_json(at(s, "cov", w), w + ".cov");
    st.mean_u = json_io::vector_from_json(at(s, "mean_u", w), w + ".mean_u");
    st.mean_error = num(at(s, "mean_error", w), w);
    st.mean_max_abs = num(at(s, "mean_max_abs", w), w);
    st.truth_cov_error = num(at(s, "truth_cov_error", w), w);
    st.aug_cov_error = num(at(s, "aug_cov_error", w), w);
    r.stages.push_back(std::move(st));
  }
  r.predicted = predicted;
  return r;
}

}  // namespace

RunResult make_result(const ProblemSpec& spec, const ScpResult& scp) {
  RunResult r;
  r.problem = spec;
  r.status = scp.status;
  r.message = scp.message;
  r.schedule = scp.schedule;
  r.policy = scp.policy;
  r.predicted = scp.predicted;
  r.trace = scp.trace;
  for (const auto& K : scp.policy.K) r.gain_norms.push_back(spectral_norm(K));
  if (!scp.trace.empty()) r.solve_seconds = scp.trace.back().wall_seconds;
  return r;
}

std::string serialize_result(const RunResult& r) {
  json filter = json::array();
  for (const auto& s : r.schedule.stages) {
    filter.push_back({{"L", json_io::matrix_to_json(s.L)},
                      {"Ptilde_minus", json_io::sym_to_json(s.Ptilde_minus)},
                      {"Ptilde", json_io::sym_to_json(s.Ptilde)},
                      {"Pinno", json_io::sym_to_json(s.Pinno)}});
  }
  json policy = json::array();
  for (std::size_t k = 0; k < r.policy.size(); ++k) {
    policy.push_back({{"ubar", json_io::vector_to_json(r.policy.ubar[k])},
                      {"K", json_io::matrix_to_json(r.policy.K[k])}});
  }
  json trace = json::array();
  for (const auto& t : r.trace) {
    trace.push_back({{"iter", t.iter},
                     {"max_e", t.max_e},
                     {"J", t.J},
                     {"dJ", finite_or_null(t.dJ)},
                     {"weight", t.weight},
                     {"e", doubles(t.e)},
                     {"multipliers", doubles(t.multipliers)},
                     {"gaps", doubles(t.gaps)},
                     {"wall_seconds", t.wall_seconds},
                     {"backend_iterations", t.backend_iterations}});
  }
  json doc{{"format_version", kResultFormatVersion},
           {"problem", json_io::problem_to_json(r.problem)},
           {"status", std::string(to_string(r.status))},
           {"message", r.message},
           {"solve_seconds", r.solve_seconds},
           {"filter", {{"p", r.schedule.p}, {"stages", std::move(filter)}}},
           {"policy", std::move(policy)},
           {"predicted",
            {{"prior", moments_to_json(r.predicted.prior)},
             {"posterior", moments_to_json(r.predicted.posterior)}}},
           {"gain_norms", doubles(r.gain_norms)},
           {"trace", std::move(trace)}};
  if (r.legacy) {
    json legacy = json::array();
    for (const auto& s : *r.legacy) {
      legacy.push_back({{"P", json_io::sym_to_json(s.P)}, {"Phat", json_io::sym_to_json(s.Phat)}});
    }
    doc["legacy"] = std::move(legacy);
  }
  if (r.monte_carlo) doc["monte_carlo"] = mc_to_json(*r.monte_carlo);
  return doc.dump(2);
}

RunResult parse_result(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("result file: ") + e.what());
  }
  try {
    const std::string w = "result";
    const int version = at(doc, "format_version", w).get<int>();
    if (version != kResultFormatVersion) {
      throw ParseError("result: unsupported format_version " + std::to_string(version));
    }
    RunResult r;
    r.problem = json_io::problem_from_json(at(doc, "problem", w));
    const auto status = parse_status(at(doc, "status", w).get<std::string>());
    if (!status) throw ParseError("result.status: unknown value");
    r.status = *status;
    r.message = at(doc, "message", w).get<std::string>();
    r.solve_seconds = num(at(doc, "solve_seconds", w), w);

    const json& filter = at(doc, "filter", w);
    r.schedule.p = num(at(filter, "p", "filter"), "filter.p");
    for (const auto& s : at(filter, "stages", "filter")) {
      r.schedule.stages.push_back({json_io::matrix_from_json(at(s, "L", "filter"), "filter.L"),
                                   json_io::sym_from_json(at(s, "Ptilde_minus", "filter"), "filter"),
                                   json_io::sym_from_json(at(s, "Ptilde", "filter"), "filter"),
                                   json_io::sym_from_json(at(s, "Pinno", "filter"), "filter")});
    }
    for (const auto& s : at(doc, "policy", w)) {
      r.policy.ubar.push_back(json_io::vector_from_json(at(s, "ubar", "policy"), "policy.ubar"));
      r.policy.K.push_back(json_io::matrix_from_json(at(s, "K", "policy"), "policy.K"));
    }
    const json& pred = at(doc, "predicted", w);
    r.predicted.prior = moments_from_json(at(pred, "prior", "predicted"), Phase::APriori, "predicted.prior");
    r.predicted.posterior =
        moments_from_json(at(pred, "posterior", "predicted"), Phase::APosteriori, "predicted.posterior");
    r.gain_norms = doubles_from(at(doc, "gain_norms", w), "gain_norms");
    for (const auto& t : at(doc, "trace", w)) {
      IterationRecord rec;
      rec.iter = at(t, "iter", "trace").get<int>();
      rec.max_e = num(at(t, "max_e", "trace"), "trace.max_e");
      rec.J = num(at(t, "J", "trace"), "trace.J");
      rec.dJ = num(at(t, "dJ", "trace"), "trace.dJ");
      rec.weight = num(at(t, "weight", "trace"), "trace.weight");
      rec.e = doubles_from(at(t, "e", "trace"), "trace.e");
      rec.multipliers = doubles_from(at(t, "multipliers", "trace"), "trace.multipliers");
      rec.gaps = doubles_from(at(t, "gaps", "trace"), "trace.gaps");
      rec.wall_seconds = num(at(t, "wall_seconds", "trace"), "trace.wall_seconds");
      rec.backend_iterations = at(t, "backend_iterations", "trace").get<int>();
      r.trace.push_back(std::move(rec));
    }
    if (doc.contains("legacy")) {
      std::vector<LegacyStage> legacy;
      for (const auto& s : doc.at("legacy")) {
        legacy.push_back({json_io::sym_from_json(at(s, "Phat", "legacy"), "legacy.Phat"),
                          json_io::sym_from_json(at(s, "P", "legacy"), "legacy.P")});
      }
      r.legacy = std::move(legacy);
    }
    if (doc.contains("monte_carlo")) r.monte_carlo = mc_from_json(doc.at("monte_carlo"), r.predicted.posterior);

    const auto N = static_cast<std::size_t>(r.problem.N);
    if (r.status == ScpStatus::Converged &&
        (r.policy.size() != N || r.schedule.size() != N || r.predicted.posterior.size() != N)) {
      throw ParseError("result: policy, filter and prediction must have one entry per stage");
    }
    return r;
  } catch (const json::exception& e) {
    throw ParseError(std::string("result file: ") + e.what());
  }
}

void save_result(const RunResult& r, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << serialize_result(r) << "\n";
  if (!out) throw Error("failed writing " + path.string());
}

RunResult load_result(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open result file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_result(ss.str());
}

}  // namespace csof
