#include "csof/model.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "csof/augmented.hpp"
#include "csof/filter.hpp"
#include "csof/json_io.hpp"

namespace csof {

namespace {

std::string stage_label(int k, const char* field) {
  std::ostringstream os;
  os << "stage " << k << ": " << field;
  return os.str();
}

void check_shape(const Matrix& m, Index rows, Index cols, const std::string& what) {
  if (m.rows() != rows || m.cols() != cols) {
    std::ostringstream os;
    os << what << " has shape " << m.rows() << "x" << m.cols() << ", expected " << rows << "x"
       << cols;
    throw DimensionError(os.str());
  }
  if (!m.allFinite()) throw ValidationError(what + " contains non-finite entries");
}

void check_psd(const SymMatrix& m, const std::string& what) {
  const double tol = 1e-12 * std::max(1.0, m.norm());
  if (!is_psd(m, tol)) {
    std::ostringstream os;
    os << what << " is not positive semidefinite (min eigenvalue " << min_eigenvalue(m) << ")";
    throw ValidationError(os.str());
  }
}

void check_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw ValidationError(std::string(what) + " must be positive and finite");
  }
}

}  // namespace

std::string_view to_string(InitMode mode) {
  switch (mode) {
    case InitMode::Case1: return "case1";
    case InitMode::Case2: return "case2";
    case InitMode::Explicit: return "explicit";
  }
  return "unknown";
}

std::optional<BuiltinCase> parse_builtin_case(std::string_view name) {
  if (name == "case1") return BuiltinCase::Case1;
  if (name == "case2") return BuiltinCase::Case2;
  if (name == "case3") return BuiltinCase::Case3;
  return std::nullopt;
}

std::string_view to_string(BuiltinCase c) {
  switch (c) {
    case BuiltinCase::Case1: return "case1";
    case BuiltinCase::Case2: return "case2";
    case BuiltinCase::Case3: return "case3";
  }
  return "unknown";
}

void validate(const ProblemSpec& spec) {
  const auto& d = spec.dims;
  if (d.nx < 1 || d.nu < 1 || d.ny < 1 || d.nw < 1) {
    throw ValidationError("dims: nx, nu, ny, nw must all be >= 1");
  }
  if (spec.N < 2) throw ValidationError("horizon: N must be >= 2");
  if (static_cast<int>(spec.stages.size()) != spec.N) {
    std::ostringstream os;
    os << "stages: expected " << spec.N << " stages, got " << spec.stages.size();
    throw ValidationError(os.str());
  }
  for (int k = 0; k < spec.N; ++k) {
    const auto& s = spec.stages[k];
    check_shape(s.A, d.nx, d.nx, stage_label(k, "A"));
    check_shape(s.B, d.nx, d.nu, stage_label(k, "B"));
    check_shape(s.G, d.nx, d.nw, stage_label(k, "G"));
    check_shape(s.H, d.ny, d.nx, stage_label(k, "H"));
    check_shape(s.R.matrix(), d.ny, d.ny, stage_label(k, "R"));
    check_psd(s.R, stage_label(k, "R"));
  }

  const auto& b = spec.boundary;
  check_shape(b.mu0, d.nx, 1, "boundary.mu0");
  check_shape(b.muf, d.nx, 1, "boundary.muf");
  check_shape(b.Pf.matrix(), d.nx, d.nx, "boundary.Pf");
  check_psd(b.Pf, "boundary.Pf");

  const auto& init = b.init;
  check_shape(init.Ptilde0_minus.matrix(), d.nx, d.nx, "boundary.init_cov.Ptilde0");
  check_psd(init.Ptilde0_minus, "boundary.init_cov.Ptilde0");
  check_shape(init.Paug0.matrix(), 2 * d.nx, 2 * d.nx, "boundary.init_cov.Paug0");
  switch (init.mode) {
    case InitMode::Case1:
      check_shape(init.Phat0_minus.matrix(), d.nx, d.nx, "boundary.init_cov.Phat0");
      check_psd(init.Phat0_minus, "boundary.init_cov.Phat0");
      if (!(init.Paug0 == build_case1_init(init.Ptilde0_minus, init.Phat0_minus))) {
        throw ValidationError("boundary.init_cov: Paug0 inconsistent with case1 blocks");
      }
      break;
    case InitMode::Case2:
      check_shape(init.P0.matrix(), d.nx, d.nx, "boundary.init_cov.P0");
      check_psd(init.P0, "boundary.init_cov.P0");
      if (!(init.Paug0 == build_case2_init(init.Ptilde0_minus, init.P0))) {
        throw ValidationError("boundary.init_cov: Paug0 inconsistent with case2 blocks");
      }
      break;
    case InitMode::Explicit: break;
  }
  check_psd(init.Paug0, "boundary.init_cov.Paug0");

  if (!(spec.underweight_p > 0.0 && spec.underweight_p <= 1.0)) {
    throw ValidationError("filter.underweight_p must lie in (0, 1]");
  }
  const auto& scp = spec.scp;
  check_positive(scp.w0, "scp.w0");
  if (!(scp.beta > 1.0) || !std::isfinite(scp.beta)) throw ValidationError("scp.beta must be > 1");
  check_positive(scp.eps_rank, "scp.eps_rank");
  check_positive(scp.eps_obj, "scp.eps_obj");
  if (!(scp.eps_cross >= 0.0) || !std::isfinite(scp.eps_cross)) {
    throw ValidationError("scp.eps_cross must be >= 0");
  }
  if (scp.max_iters < 1) throw ValidationError("scp.max_iters must be >= 1");
  if (!(scp.w_max > scp.w0)) throw ValidationError("scp.w_max must exceed scp.w0");

  // The estimate covariance after the first measurement update must be
  // invertible for the gain to be recoverable.
  const auto& s0 = spec.stages.front();
  const Matrix L0 = kalman_gain(init.Ptilde0_minus, s0.H, s0.R, spec.underweight_p);
  const SymMatrix P0post = cov_filter_update(init.Paug0, s0, L0);
  try {
    require_invertible(P0post.principal_block(d.nx, d.nx), "estimate covariance at k=0");
  } catch (const SingularityError& e) {
    throw ValidationError(std::string("boundary.init_cov: ") + e.what());
  }
}

ProblemSpec builtin_double_integrator(BuiltinCase which) {
  constexpr double dt = 0.2;
  constexpr int nx = 4, nu = 2, ny = 3;

  Matrix A = Matrix::Identity(nx, nx);
  A(0, 2) = dt;
  A(1, 3) = dt;
  Matrix B = Matrix::Zero(nx, nu);
  B(0, 0) = dt;
  B(1, 1) = dt;
  B(2, 0) = 1.0;
  B(3, 1) = 1.0;
  Matrix H = Matrix::Zero(ny, nx);
  H.block(0, 1, ny, ny).setIdentity();
  const SymMatrix R = SymMatrix::Diagonal(Vector::Constant(ny, 1e-2));

  ProblemSpec spec;
  spec.name = std::string("double_integrator_") + std::string(to_string(which));
  spec.N = 20;
  spec.dims = {nx, nu, ny, nx};
  spec.stages.assign(spec.N, StageModel{A, B, Matrix::Zero(nx, nx), H, R});

  auto diag = [](std::initializer_list<double> v) {
    Vector d(static_cast<Index>(v.size()));
    Index i = 0;
    for (double x : v) d(i++) = x;
    return SymMatrix::Diagonal(d);
  };

  auto& b = spec.boundary;
  b.mu0 = (Vector(nx) << 1, 2, 3, 2).finished();
  b.muf = (Vector(nx) << 11, 3, 0, 0).finished();
  b.Pf = diag({0.06, 0.06, 0.006, 0.006});

  auto& init = b.init;
  switch (which) {
    case BuiltinCase::Case1:
      init.mode = InitMode::Case1;
      init.Ptilde0_minus = diag({0.02, 0.01, 0.014, 0.014});
      init.Phat0_minus = diag({0.1, 0.1, 0.02, 0.02});
      init.Paug0 = build_case1_init(init.Ptilde0_minus, init.Phat0_minus);
      break;
    case BuiltinCase::Case2:
      init.mode = InitMode::Case2;
      init.Ptilde0_minus = diag({0.08, 0.09, 0.006, 0.006});
      init.P0 = diag({0.02, 0.01, 0.014, 0.014});
      init.Paug0 = build_case2_init(init.Ptilde0_minus, init.P0);
      break;
    case BuiltinCase::Case3:
      init.mode = InitMode::Case1;
      init.Ptilde0_minus = diag({0.02, 0.01, 0.014, 0.014});
      init.Phat0_minus = diag({0.04, 0.02, 0.028, 0.028});
      init.Paug0 = build_case1_init(init.Ptilde0_minus, init.Phat0_minus);
      spec.underweight_p = 0.25;
      break;
  }

  spec.scp.w0 = 1.0;
  spec.scp.beta = 1.2;
  spec.scp.eps_rank = 1e-5;
  spec.scp.eps_obj = 1e-5;
  spec.scp.eps_cross = 1e-3;

  validate(spec);
  return spec;
}

ProblemSpec parse_problem(std::string_view text) {
  json_io::json j;
  try {
    j = json_io::json::parse(text.begin(), text.end());
  } catch (const json_io::json::parse_error& e) {
    throw ParseError(std::string("problem file: ") + e.what());
  }
  ProblemSpec spec = json_io::problem_from_json(j);
  validate(spec);
  return spec;
}

ProblemSpec load_problem(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open problem file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_problem(buf.str());
}

std::string serialize_problem(const ProblemSpec& spec) {
  return json_io::problem_to_json(spec).dump(2);
}

}  // namespace csof
