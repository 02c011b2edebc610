#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "csof/linalg.hpp"

namespace csof {

struct Dims {
  int nx = 0;
  int nu = 0;
  int ny = 0;
  int nw = 0;

  friend bool operator==(const Dims&, const Dims&) = default;
};

/// Matrices of one stage: x⁺ = A x + B u + G w, y = H x + v, v ~ N(0, R).
struct StageModel {
  Matrix A;
  Matrix B;
  Matrix G;
  Matrix H;
  SymMatrix R;

  friend bool operator==(const StageModel&, const StageModel&) = default;
};

/// How the initial a priori augmented covariance was specified.
enum class InitMode {
  Case1,     ///< estimate orthogonal to the estimation error
  Case2,     ///< true state orthogonal to the estimation error
  Explicit,  ///< full 2nx block given directly
};

std::string_view to_string(InitMode mode);

/// Initial statistics. `Ptilde0_minus` is the filter's own a priori error
/// covariance, which drives the gain schedule; it is carried in every mode
/// because it need not be a block of `Paug0`.
struct InitialCovariance {
  InitMode mode = InitMode::Case1;
  SymMatrix Ptilde0_minus;
  SymMatrix Phat0_minus;  ///< Case1 only
  SymMatrix P0;           ///< Case2 only
  SymMatrix Paug0;        ///< assembled 2nx × 2nx a priori augmented covariance

  friend bool operator==(const InitialCovariance&, const InitialCovariance&) = default;
};

struct BoundaryConditions {
  Vector mu0;
  Vector muf;
  SymMatrix Pf;
  InitialCovariance init;

  friend bool operator==(const BoundaryConditions&, const BoundaryConditions&) = default;
};

struct ScpParams {
  double w0 = 1.0;
  double beta = 1.2;
  double eps_rank = 1e-5;   ///< stop threshold on max_k e_k
  double eps_obj = 1e-5;    ///< stop threshold on |ΔJ|
  double eps_cross = 1e-3;  ///< objective weight on tr(Z_k)
  int max_iters = 200;
  double w_max = 1e8;

  friend bool operator==(const ScpParams&, const ScpParams&) = default;
};

struct ProblemSpec {
  std::string name;
  int N = 0;
  Dims dims;
  std::vector<StageModel> stages;
  BoundaryConditions boundary;
  double underweight_p = 1.0;
  ScpParams scp;

  friend bool operator==(const ProblemSpec&, const ProblemSpec&) = default;
};

enum class BuiltinCase { Case1, Case2, Case3 };

std::optional<BuiltinCase> parse_builtin_case(std::string_view name);
std::string_view to_string(BuiltinCase c);

/// Checks every invariant of a problem; throws DimensionError for
/// non-conformable matrices and ValidationError for everything else. Messages
/// name the offending field and stage index.
void validate(const ProblemSpec& spec);

/// Double-integrator examples (Δt = 0.2, N = 20), already validated.
ProblemSpec builtin_double_integrator(BuiltinCase which);

/// Reads and validates a problem file. Throws ParseError for unreadable or
/// malformed documents.
ProblemSpec load_problem(const std::filesystem::path& path);

ProblemSpec parse_problem(std::string_view text);

/// Canonical problem document (stages written out per stage).
std::string serialize_problem(const ProblemSpec& spec);

}  // namespace csof
