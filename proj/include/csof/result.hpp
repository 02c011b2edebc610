#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "csof/montecarlo.hpp"
#include "csof/scp.hpp"

namespace csof {

inline constexpr int kResultFormatVersion = 1;

/// Everything a solve produces, in the shape written to the result file.
struct RunResult {
  ProblemSpec problem;
  ScpStatus status = ScpStatus::NumericalTrouble;
  std::string message;
  FilterSchedule schedule;
  Policy policy;
  Trajectory predicted;
  std::optional<std::vector<LegacyStage>> legacy;
  ConvergenceTrace trace;
  std::optional<McReport> monte_carlo;
  std::vector<double> gain_norms;  ///< spectral norm of K_k
  double solve_seconds = 0.0;
};

RunResult make_result(const ProblemSpec& spec, const ScpResult& scp);

std::string serialize_result(const RunResult& r);
RunResult parse_result(std::string_view text);

void save_result(const RunResult& r, const std::filesystem::path& path);
/// Throws ParseError for unreadable or malformed files.
RunResult load_result(const std::filesystem::path& path);

}  // namespace csof
