#include "csof/sdp.hpp"

#include <sstream>

#include "csof/augmented.hpp"

namespace csof {

using conic::AffineExpr;
using conic::SymAffine;
using conic::VarIndex;

namespace {

// Dense matrix of affine expressions, row-major.
class ExprMatrix {
 public:
  ExprMatrix(Index rows, Index cols)
      : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows * cols)) {}

  static ExprMatrix sym_var(VarIndex offset, Index n) {
    ExprMatrix m(n, n);
    for (Index i = 0; i < n; ++i) {
      for (Index j = 0; j < n; ++j) {
        m(i, j) = AffineExpr::variable(
            offset + SymAffine::packed_index(static_cast<int>(i), static_cast<int>(j)));
      }
    }
    return m;
  }

  static ExprMatrix dense_var(VarIndex offset, Index rows, Index cols) {
    ExprMatrix m(rows, cols);
    for (Index i = 0; i < rows; ++i) {
      for (Index j = 0; j < cols; ++j) {
        m(i, j) = AffineExpr::variable(offset + static_cast<VarIndex>(i * cols + j));
      }
    }
    return m;
  }

  static ExprMatrix constant(const Matrix& c) {
    ExprMatrix m(c.rows(), c.cols());
    for (Index i = 0; i < c.rows(); ++i) {
      for (Index j = 0; j < c.cols(); ++j) m(i, j) = AffineExpr(c(i, j));
    }
    return m;
  }

  Index rows() const { return rows_; }
  Index cols() const { return cols_; }
  AffineExpr& operator()(Index i, Index j) { return data_[static_cast<std::size_t>(i * cols_ + j)]; }
  const AffineExpr& operator()(Index i, Index j) const {
    return data_[static_cast<std::size_t>(i * cols_ + j)];
  }

  ExprMatrix block(Index r0, Index c0, Index rows, Index cols) const {
    ExprMatrix out(rows, cols);
    for (Index i = 0; i < rows; ++i) {
      for (Index j = 0; j < cols; ++j) out(i, j) = (*this)(r0 + i, c0 + j);
    }
    return out;
  }

  void set_block(Index r0, Index c0, const ExprMatrix& b) {
    for (Index i = 0; i < b.rows(); ++i) {
      for (Index j = 0; j < b.cols(); ++j) (*this)(r0 + i, c0 + j) = b(i, j);
    }
  }

  ExprMatrix transpose() const {
    ExprMatrix out(cols_, rows_);
    for (Index i = 0; i < rows_; ++i) {
      for (Index j = 0; j < cols_; ++j) out(j, i) = (*this)(i, j);
    }
    return out;
  }

  ExprMatrix& operator+=(const ExprMatrix& o) {
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i].add(o.data_[i]);
    return *this;
  }

  ExprMatrix& operator-=(const ExprMatrix& o) {
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i].add(o.data_[i], -1.0);
    return *this;
  }

  friend ExprMatrix operator*(const Matrix& t, const ExprMatrix& e) {
    ExprMatrix out(t.rows(), e.cols());
    for (Index i = 0; i < t.rows(); ++i) {
      for (Index j = 0; j < e.cols(); ++j) {
        AffineExpr& acc = out(i, j);
        for (Index a = 0; a < t.cols(); ++a) {
          if (t(i, a) != 0.0) acc.add(e(a, j), t(i, a));
        }
        acc.canonicalize();
      }
    }
    return out;
  }

  friend ExprMatrix operator*(const ExprMatrix& e, const Matrix& t) {
    return (t.transpose() * e.transpose()).transpose();
  }

  SymAffine upper() const {
    SymAffine s(static_cast<int>(rows_));
    for (Index j = 0; j < cols_; ++j) {
      for (Index i = 0; i <= j; ++i) s.at(static_cast<int>(i), static_cast<int>(j)) = (*this)(i, j);
    }
    return s;
  }

 private:
  Index rows_;
  Index cols_;
  std::vector<AffineExpr> data_;
};

std::string label(const char* what, int k) {
  std::ostringstream os;
  os << what << "[" << k << "]";
  return os.str();
}

// Upper-triangle equality lhs == rhs.
void add_sym_equality(conic::ConicProgram& prog, const ExprMatrix& lhs, const ExprMatrix& rhs,
                      const std::string& name) {
  for (Index j = 0; j < lhs.cols(); ++j) {
    for (Index i = 0; i <= j; ++i) {
      AffineExpr e = lhs(i, j);
      e.add(rhs(i, j), -1.0);
      std::ostringstream os;
      os << name << "(" << i << "," << j << ")";
      prog.add_equality(std::move(e), os.str());
    }
  }
}

ExprMatrix stacked_expr(const StageLayout& v, Index nx, Index nu) {
  const ExprMatrix P = ExprMatrix::sym_var(v.Paug, 2 * nx);
  const ExprMatrix U = ExprMatrix::dense_var(v.U, nu, nx);
  const ExprMatrix S = ExprMatrix::dense_var(v.S, nu, nx);
  const ExprMatrix Y = ExprMatrix::sym_var(v.Y, nu);
  const ExprMatrix Z = ExprMatrix::sym_var(v.Z, nx);
  const ExprMatrix phat = P.block(nx, nx, nx, nx);
  const ExprMatrix sigma = P.block(nx, 0, nx, nx);  // Σ = Cov(x̂, x)

  const Index m = 2 * nx + nu;
  ExprMatrix M(m, m);
  M.set_block(0, 0, phat);
  M.set_block(0, nx, U.transpose());
  M.set_block(0, nx + nu, sigma);
  M.set_block(nx, 0, U);
  M.set_block(nx, nx, Y);
  M.set_block(nx, nx + nu, S);
  M.set_block(nx + nu, 0, sigma.transpose());
  M.set_block(nx + nu, nx, S.transpose());
  M.set_block(nx + nu, nx + nu, Z);
  return M;
}

AssembledProblem assemble_base(const ProblemSpec& spec, const FilterSchedule& schedule, bool irm) {
  if (static_cast<int>(schedule.size()) != spec.N) {
    throw PreconditionError("assemble: filter schedule length differs from horizon");
  }
  const int N = spec.N;
  const Index nx = spec.dims.nx;
  const Index nu = spec.dims.nu;
  const int n2 = static_cast<int>(2 * nx);

  AssembledProblem out;
  out.dims = spec.dims;
  out.eps_cross = spec.scp.eps_cross;
  out.irm = irm;
  auto& prog = out.program;

  out.layout.resize(static_cast<std::size_t>(N));
  for (int k = 0; k < N; ++k) {
    auto& v = out.layout[static_cast<std::size_t>(k)];
    v.mu = prog.add_variables(label("mu", k), static_cast<int>(nx));
    v.ubar = prog.add_variables(label("ubar", k), static_cast<int>(nu));
    v.ubar_norm = prog.add_variables(label("ubar_norm", k), 1);
    v.Paug_minus = prog.add_variables(label("Paug_minus", k), SymAffine::packed_size(n2));
    v.Paug = prog.add_variables(label("Paug", k), SymAffine::packed_size(n2));
    v.U = prog.add_variables(label("U", k), static_cast<int>(nu * nx));
    v.S = prog.add_variables(label("S", k), static_cast<int>(nu * nx));
    v.Y = prog.add_variables(label("Y", k), SymAffine::packed_size(static_cast<int>(nu)));
    v.Z = prog.add_variables(label("Z", k), SymAffine::packed_size(static_cast<int>(nx)));
    if (irm) {
      v.e = prog.add_variables(label("e", k), 1);
      v.e_sq = prog.add_variables(label("e_sq", k), 1);
    }
  }

  // Objective Σ ‖ū_k‖ + tr Y_k + ε tr Z_k.
  for (const auto& v : out.layout) {
    prog.add_objective(v.ubar_norm, 1.0);
    for (int i = 0; i < nu; ++i) prog.add_objective(v.Y + SymAffine::packed_index(i, i), 1.0);
    for (int i = 0; i < nx; ++i) {
      prog.add_objective(v.Z + SymAffine::packed_index(i, i), spec.scp.eps_cross);
    }
  }

  const auto& bnd = spec.boundary;
  const auto& first = out.layout.front();
  for (Index i = 0; i < nx; ++i) {
    prog.add_equality(AffineExpr::variable(first.mu + static_cast<VarIndex>(i))
                          .add_constant(-bnd.mu0(i)),
                      label("mu0", static_cast<int>(i)));
  }
  add_sym_equality(prog, ExprMatrix::sym_var(first.Paug_minus, n2),
                   ExprMatrix::constant(bnd.init.Paug0.matrix()), "Paug_minus0");

  for (int k = 0; k < N; ++k) {
    const auto& v = out.layout[static_cast<std::size_t>(k)];
    const auto& stage = spec.stages[static_cast<std::size_t>(k)];
    const auto pm = propagation_matrices(stage, schedule.stages[static_cast<std::size_t>(k)].L,
                                         Matrix::Zero(nu, nx));

    // ‖ū_k‖ ≤ t_k
    std::vector<AffineExpr> cone{AffineExpr::variable(v.ubar_norm)};
    for (Index i = 0; i < nu; ++i) cone.push_back(AffineExpr::variable(v.ubar + static_cast<VarIndex>(i)));
    prog.add_soc(std::move(cone), label("ubar_norm", k));

    // 𝐏_k = Φ 𝐏_k⁻ Φᵀ + 𝐋
    const ExprMatrix Pm = ExprMatrix::sym_var(v.Paug_minus, n2);
    const ExprMatrix P = ExprMatrix::sym_var(v.Paug, n2);
    ExprMatrix filtered = pm.Phi * Pm * pm.Phi.transpose();
    filtered += ExprMatrix::constant(pm.Lblk);
    add_sym_equality(prog, P, filtered, label("filter_update", k));

    if (k + 1 < N) {
      const auto& next = out.layout[static_cast<std::size_t>(k + 1)];
      // μ_{k+1} = A μ_k + B ū_k
      for (Index i = 0; i < nx; ++i) {
        AffineExpr e = AffineExpr::variable(next.mu + static_cast<VarIndex>(i));
        for (Index j = 0; j < nx; ++j) e.add(v.mu + static_cast<VarIndex>(j), -stage.A(i, j));
        for (Index j = 0; j < nu; ++j) e.add(v.ubar + static_cast<VarIndex>(j), -stage.B(i, j));
        prog.add_equality(std::move(e), label("mean", k));
      }

      // 𝐏⁻_{k+1} = 𝐀𝐏𝐀ᵀ + 𝐁[[Y,Y],[Y,Y]]𝐁ᵀ + 𝐁[[S,U],[S,U]]𝐀ᵀ + (·)ᵀ + 𝐐
      const ExprMatrix U = ExprMatrix::dense_var(v.U, nu, nx);
      const ExprMatrix S = ExprMatrix::dense_var(v.S, nu, nx);
      const ExprMatrix Y = ExprMatrix::sym_var(v.Y, nu);
      ExprMatrix YY(2 * nu, 2 * nu);
      ExprMatrix SU(2 * nu, 2 * nx);
      for (Index r = 0; r < 2; ++r) {
        for (Index c = 0; c < 2; ++c) YY.set_block(r * nu, c * nu, Y);
        SU.set_block(r * nu, 0, S);
        SU.set_block(r * nu, nx, U);
      }
      const auto cm = propagation_matrices(stage, Matrix::Zero(nx, stage.H.rows()),
                                           Matrix::Zero(nu, nx));
      ExprMatrix rhs = cm.Ablk * P * cm.Ablk.transpose();
      rhs += cm.Bblk * YY * cm.Bblk.transpose();
      const ExprMatrix cross = cm.Bblk * SU * cm.Ablk.transpose();
      rhs += cross;
      rhs += cross.transpose();
      rhs += ExprMatrix::constant(cm.Qblk);
      add_sym_equality(prog, ExprMatrix::sym_var(next.Paug_minus, n2), rhs,
                       label("control_update", k));
    }

    prog.add_psd(Pm.upper(), label("Paug_minus_psd", k));
    prog.add_psd(P.upper(), label("Paug_psd", k));
    prog.add_psd(ExprMatrix::sym_var(v.Y, nu).upper(), label("Y_psd", k));
    prog.add_psd(ExprMatrix::sym_var(v.Z, nx).upper(), label("Z_psd", k));
    prog.add_psd(stacked_expr(v, nx, nu).upper(), label("schur_lmi", k));
  }

  const auto& last = out.layout.back();
  for (Index i = 0; i < nx; ++i) {
    prog.add_equality(AffineExpr::variable(last.mu + static_cast<VarIndex>(i))
                          .add_constant(-bnd.muf(i)),
                      label("muf", static_cast<int>(i)));
  }
  // P_f − P_{N−1} ⪰ 0
  ExprMatrix terminal = ExprMatrix::constant(bnd.Pf.matrix());
  terminal -= ExprMatrix::sym_var(last.Paug, n2).block(0, 0, nx, nx);
  prog.add_psd(terminal.upper(), "terminal_cov");
  return out;
}

Matrix read_dense(std::span<const double> x, VarIndex off, Index rows, Index cols) {
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) m(i, j) = x[static_cast<std::size_t>(off + i * cols + j)];
  }
  return m;
}

SymMatrix read_sym(std::span<const double> x, VarIndex off, Index n) {
  Matrix m(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      m(i, j) = x[static_cast<std::size_t>(
          off + SymAffine::packed_index(static_cast<int>(i), static_cast<int>(j)))];
    }
  }
  return SymMatrix(m);
}

}  // namespace

Matrix StageVars::u_aug() const {
  const Index n = nx();
  const Index nu = U.rows();
  Matrix out(nu + n, n);
  out.topRows(nu) = U;
  out.bottomRows(n) = sigma().transpose();
  return out;
}

SymMatrix StageVars::s_aug() const {
  const Index n = nx();
  const Index nu = U.rows();
  Matrix out(nu + n, nu + n);
  out << Y.matrix(), S, S.transpose(), Z.matrix();
  return SymMatrix(out);
}

SymMatrix StageVars::stacked() const {
  const Index n = nx();
  const Matrix ua = u_aug();
  const Index m = n + ua.rows();
  Matrix out(m, m);
  out.topLeftCorner(n, n) = phat().matrix();
  out.bottomLeftCorner(ua.rows(), n) = ua;
  out.topRightCorner(n, ua.rows()) = ua.transpose();
  out.bottomRightCorner(ua.rows(), ua.rows()) = s_aug().matrix();
  return SymMatrix(out);
}

AssembledProblem assemble_relaxed(const ProblemSpec& spec, const FilterSchedule& schedule) {
  return assemble_base(spec, schedule, false);
}

AssembledProblem assemble_irm_iterate(const ProblemSpec& spec, const FilterSchedule& schedule,
                                      const IrmTerms& terms) {
  const int N = spec.N;
  const Index nx = spec.dims.nx;
  const Index nu = spec.dims.nu;
  const Index m = 2 * nx + nu;
  if (static_cast<int>(terms.eigvecs.size()) != N || static_cast<int>(terms.multipliers.size()) != N) {
    throw PreconditionError("assemble_irm_iterate: need one eigenvector block and multiplier per stage");
  }
  for (int k = 0; k < N; ++k) {
    const Matrix& V = terms.eigvecs[static_cast<std::size_t>(k)];
    if (V.rows() != m || V.cols() != m - nx) {
      std::ostringstream os;
      os << "assemble_irm_iterate: stage " << k << ": V has shape " << V.rows() << "x" << V.cols()
         << ", expected " << m << "x" << m - nx;
      throw PreconditionError(os.str());
    }
  }
  if (terms.e_upper && static_cast<int>(terms.e_upper->size()) != N) {
    throw PreconditionError("assemble_irm_iterate: e_upper must have one entry per stage");
  }

  AssembledProblem out = assemble_base(spec, schedule, true);
  auto& prog = out.program;
  const int r = static_cast<int>(m - nx);
  for (int k = 0; k < N; ++k) {
    const auto& v = out.layout[static_cast<std::size_t>(k)];
    const Matrix& V = terms.eigvecs[static_cast<std::size_t>(k)];

    // e_k I − Vᵀ M_k V ⪰ 0
    ExprMatrix proj = V.transpose() * stacked_expr(v, nx, nu) * V;
    SymAffine c(r);
    for (int j = 0; j < r; ++j) {
      for (int i = 0; i <= j; ++i) {
        AffineExpr e;
        e.add(proj(i, j), -1.0);
        if (i == j) e.add(v.e, 1.0);
        c.at(i, j) = std::move(e);
      }
    }
    prog.add_psd(std::move(c), label("rank_projection", k));

    // e_sq ≥ e²  ⇔  ‖(2e, e_sq − 1)‖ ≤ e_sq + 1
    prog.add_soc({AffineExpr::variable(v.e_sq).add_constant(1.0), AffineExpr::variable(v.e, 2.0),
                  AffineExpr::variable(v.e_sq).add_constant(-1.0)},
                 label("penalty_epigraph", k));

    prog.add_objective(v.e, terms.multipliers[static_cast<std::size_t>(k)]);
    prog.add_objective(v.e_sq, 0.5 * terms.weight);

    if (terms.e_upper) {
      SymAffine bound(1);
      bound.at(0, 0) = AffineExpr::variable(v.e, -1.0).add_constant((*terms.e_upper)[static_cast<std::size_t>(k)]);
      prog.add_psd(std::move(bound), label("rank_decrease", k));
    }
  }
  return out;
}

double relaxed_objective(const std::vector<StageVars>& stages, double eps_cross) {
  double J = 0.0;
  for (const auto& s : stages) J += s.ubar.norm() + s.Y.trace() + eps_cross * s.Z.trace();
  return J;
}

SubproblemSolution solve(const AssembledProblem& problem, const conic::ConicBackend& backend) {
  const auto res = backend.solve(problem.program);
  SubproblemSolution sol;
  sol.status = res.status;
  sol.backend_iterations = res.iterations;
  sol.solve_seconds = res.solve_seconds;
  sol.detail = res.detail;
  if (res.status != SolveStatus::Optimal) return sol;

  const Index nx = problem.dims.nx;
  const Index nu = problem.dims.nu;
  const std::span<const double> x(res.x);
  sol.stages.reserve(problem.layout.size());
  for (const auto& v : problem.layout) {
    StageVars s;
    s.mu = read_dense(x, v.mu, nx, 1);
    s.ubar = read_dense(x, v.ubar, nu, 1);
    s.Paug_minus = read_sym(x, v.Paug_minus, 2 * nx);
    s.Paug = read_sym(x, v.Paug, 2 * nx);
    s.U = read_dense(x, v.U, nu, nx);
    s.S = read_dense(x, v.S, nu, nx);
    s.Y = read_sym(x, v.Y, nu);
    s.Z = read_sym(x, v.Z, nx);
    if (v.e >= 0) s.e = x[static_cast<std::size_t>(v.e)];
    sol.stages.push_back(std::move(s));
  }
  sol.objective = relaxed_objective(sol.stages, problem.eps_cross);
  return sol;
}

Policy recover_gains(const SubproblemSolution& solution) {
  if (solution.status != SolveStatus::Optimal) {
    throw PreconditionError("recover_gains: solution is not optimal");
  }
  Policy policy;
  for (std::size_t k = 0; k < solution.stages.size(); ++k) {
    const auto& s = solution.stages[k];
    const SymMatrix phat = s.phat();
    std::ostringstream what;
    what << "recover_gains: stage " << k << " estimate covariance";
    require_invertible(phat, what.str());
    // K = U P̂⁻¹ = (P̂⁻¹ Uᵀ)ᵀ
    policy.K.push_back(spd_solve(phat, s.U.transpose(), what.str()).transpose());
    policy.ubar.push_back(s.ubar);
  }
  return policy;
}

std::vector<double> relaxation_gap(const SubproblemSolution& solution) {
  if (solution.status != SolveStatus::Optimal) {
    throw PreconditionError("relaxation_gap: solution is not optimal");
  }
  std::vector<double> gaps;
  gaps.reserve(solution.stages.size());
  for (const auto& s : solution.stages) {
    gaps.push_back(schur_residual(s.phat(), s.u_aug(), s.s_aug()).norm());
  }
  return gaps;
}

}  // namespace csof
