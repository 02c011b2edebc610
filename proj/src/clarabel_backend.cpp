#include <clarabel_c.h>

#include <algorithm>
#include <cmath>
#include <tuple>

#include "csof/conic.hpp"

namespace csof::conic {

namespace {

// Rows of A x + s = b, s ∈ K, accumulated as triplets.
struct RowBuilder {
  std::vector<std::tuple<std::size_t, std::size_t, double>> triplets;  // (col, row, value)
  std::vector<double> b;

  // s_row = expr (scaled): A_row = −scale·coeffs, b_row = scale·constant.
  void cone_row(const AffineExpr& e, double scale) {
    const std::size_t row = b.size();
    for (const auto& t : e.terms()) {
      triplets.emplace_back(static_cast<std::size_t>(t.var), row, -scale * t.coeff);
    }
    b.push_back(scale * e.constant());
  }
};

}  // namespace

BackendResult ClarabelBackend::solve(const ConicProgram& program) const {
  program.check();
  const auto n = static_cast<std::size_t>(program.num_variables());

  RowBuilder rows;
  std::vector<int32_t> cone_kind;
  std::vector<std::size_t> cone_dim;

  // Equalities: s = −expr ∈ {0}.
  if (!program.equalities().empty()) {
    for (const auto& c : program.equalities()) rows.cone_row(c.expr, -1.0);
    cone_kind.push_back(CLARABEL_C_CONE_ZERO);
    cone_dim.push_back(program.equalities().size());
  }
  for (const auto& c : program.soc()) {
    for (const auto& e : c.entries) rows.cone_row(e, 1.0);
    cone_kind.push_back(CLARABEL_C_CONE_SOC);
    cone_dim.push_back(c.entries.size());
  }
  const double sqrt2 = std::sqrt(2.0);
  for (const auto& c : program.psd()) {
    const int d = c.expr.dim();
    for (int j = 0; j < d; ++j) {
      for (int i = 0; i <= j; ++i) rows.cone_row(c.expr.at(i, j), i == j ? 1.0 : sqrt2);
    }
    cone_kind.push_back(CLARABEL_C_CONE_PSD_TRIANGLE);
    cone_dim.push_back(static_cast<std::size_t>(d));
  }

  const std::size_t m = rows.b.size();
  auto& trip = rows.triplets;
  std::sort(trip.begin(), trip.end());
  std::vector<std::size_t> colptr(n + 1, 0);
  std::vector<std::size_t> rowval;
  std::vector<double> nzval;
  rowval.reserve(trip.size());
  nzval.reserve(trip.size());
  for (std::size_t i = 0; i < trip.size(); ++i) {
    const auto [col, row, val] = trip[i];
    if (!rowval.empty() && i > 0 && std::get<0>(trip[i - 1]) == col && rowval.back() == row) {
      nzval.back() += val;
      continue;
    }
    rowval.push_back(row);
    nzval.push_back(val);
    colptr[col + 1] += 1;
  }
  for (std::size_t c = 0; c < n; ++c) colptr[c + 1] += colptr[c];

  ClarabelCSettings cs{};
  cs.max_iter = static_cast<uint32_t>(settings_.max_iter);
  cs.verbose = settings_.verbose ? 1 : 0;
  cs.tol_gap_abs = settings_.tol_gap_abs;
  cs.tol_gap_rel = settings_.tol_gap_rel;
  cs.tol_feas = settings_.tol_feas;
  cs.time_limit = settings_.time_limit;

  std::vector<double> x(n, 0.0);
  ClarabelCInfo info{};
  clarabel_c_solve(n, m, program.objective().data(), colptr.data(), rowval.data(), nzval.data(),
                   rows.b.data(), cone_kind.size(), cone_kind.data(), cone_dim.data(), &cs,
                   x.data(), &info);

  BackendResult result;
  result.iterations = static_cast<int>(info.iterations);
  result.solve_seconds = info.solve_time;
  result.objective = info.obj_val;
  switch (info.status) {
    case CLARABEL_C_SOLVED:
      result.status = SolveStatus::Optimal;
      result.detail = "solved";
      break;
    case CLARABEL_C_ALMOST_SOLVED:
      result.status = settings_.accept_reduced_accuracy ? SolveStatus::Optimal
                                                        : SolveStatus::NumericalTrouble;
      result.detail = "almost_solved";
      break;
    case CLARABEL_C_PRIMAL_INFEASIBLE:
      result.status = SolveStatus::Infeasible;
      result.detail = "primal_infeasible";
      break;
    case CLARABEL_C_DUAL_INFEASIBLE:
      result.status = SolveStatus::NumericalTrouble;
      result.detail = "dual_infeasible";
      break;
    case CLARABEL_C_MAX_ITER:
      result.status = SolveStatus::NumericalTrouble;
      result.detail = "max_iterations";
      break;
    case CLARABEL_C_BAD_INPUT:
      result.status = SolveStatus::NumericalTrouble;
      result.detail = "bad_input";
      break;
    default:
      result.status = SolveStatus::NumericalTrouble;
      result.detail = "numerical_error";
      break;
  }
  if (result.status == SolveStatus::Optimal) result.x = std::move(x);
  return result;
}

}  // namespace csof::conic
