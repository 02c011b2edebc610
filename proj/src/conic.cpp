#include "csof/conic.hpp"

#include <algorithm>
#include <ostream>

#include "csof/errors.hpp"

namespace csof::conic {

AffineExpr AffineExpr::variable(VarIndex v, double coeff) {
  AffineExpr e;
  e.add(v, coeff);
  return e;
}

AffineExpr& AffineExpr::add(VarIndex v, double coeff) {
  if (coeff != 0.0) terms_.push_back({v, coeff});
  return *this;
}

AffineExpr& AffineExpr::add(const AffineExpr& other, double scale) {
  if (scale == 0.0) return *this;
  for (const auto& t : other.terms_) add(t.var, scale * t.coeff);
  constant_ += scale * other.constant_;
  return *this;
}

AffineExpr& AffineExpr::add_constant(double c) {
  constant_ += c;
  return *this;
}

void AffineExpr::canonicalize() {
  std::stable_sort(terms_.begin(), terms_.end(),
                   [](const Term& a, const Term& b) { return a.var < b.var; });
  std::vector<Term> merged;
  merged.reserve(terms_.size());
  for (const auto& t : terms_) {
    if (!merged.empty() && merged.back().var == t.var) {
      merged.back().coeff += t.coeff;
    } else {
      merged.push_back(t);
    }
  }
  std::erase_if(merged, [](const Term& t) { return t.coeff == 0.0; });
  terms_ = std::move(merged);
}

double AffineExpr::evaluate(std::span<const double> x) const {
  double v = constant_;
  for (const auto& t : terms_) v += t.coeff * x[static_cast<std::size_t>(t.var)];
  return v;
}

SymAffine::SymAffine(int dim) : dim_(dim), entries_(static_cast<std::size_t>(packed_size(dim))) {}

int SymAffine::packed_index(int i, int j) {
  if (i > j) std::swap(i, j);
  return j * (j + 1) / 2 + i;
}

VarIndex ConicProgram::add_variables(std::string name, int size) {
  const VarIndex offset = num_vars_;
  blocks_.push_back({std::move(name), offset, size});
  num_vars_ += size;
  objective_.resize(static_cast<std::size_t>(num_vars_), 0.0);
  return offset;
}

void ConicProgram::add_objective(VarIndex v, double coeff) {
  if (v < 0 || v >= num_vars_) throw PreconditionError("objective references an undeclared variable");
  objective_[static_cast<std::size_t>(v)] += coeff;
}

void ConicProgram::add_equality(AffineExpr expr, std::string label) {
  expr.canonicalize();
  equalities_.push_back({std::move(expr), std::move(label)});
}

void ConicProgram::add_psd(SymAffine expr, std::string label) {
  for (auto& e : expr.packed()) e.canonicalize();
  psd_.push_back({std::move(expr), std::move(label)});
}

void ConicProgram::add_soc(std::vector<AffineExpr> entries, std::string label) {
  if (entries.empty()) throw PreconditionError("second-order cone needs at least one entry");
  for (auto& e : entries) e.canonicalize();
  soc_.push_back({std::move(entries), std::move(label)});
}

void ConicProgram::check() const {
  auto check_expr = [&](const AffineExpr& e, const std::string& label) {
    for (const auto& t : e.terms()) {
      if (t.var < 0 || t.var >= num_vars_) {
        throw PreconditionError("constraint '" + label + "' references undeclared variable " +
                                std::to_string(t.var));
      }
    }
  };
  for (const auto& c : equalities_) check_expr(c.expr, c.label);
  for (const auto& c : psd_) {
    for (const auto& e : c.expr.packed()) check_expr(e, c.label);
  }
  for (const auto& c : soc_) {
    for (const auto& e : c.entries) check_expr(e, c.label);
  }
}

namespace {

void dump_expr(std::ostream& os, const AffineExpr& e) {
  os << e.constant();
  for (const auto& t : e.terms()) {
    os << (t.coeff < 0 ? " - " : " + ") << std::abs(t.coeff) << "*x" << t.var;
  }
}

}  // namespace

void ConicProgram::dump(std::ostream& os) const {
  const auto old_precision = os.precision(17);
  os << "variables " << num_vars_ << "\n";
  for (const auto& b : blocks_) {
    os << "block " << b.name << " offset=" << b.offset << " size=" << b.size << "\n";
  }
  os << "objective";
  for (std::size_t i = 0; i < objective_.size(); ++i) {
    if (objective_[i] != 0.0) os << " " << objective_[i] << "*x" << i;
  }
  os << "\n";
  for (const auto& c : equalities_) {
    os << "eq " << c.label << ": ";
    dump_expr(os, c.expr);
    os << " == 0\n";
  }
  for (const auto& c : soc_) {
    os << "soc " << c.label << " dim=" << c.entries.size() << "\n";
    for (std::size_t i = 0; i < c.entries.size(); ++i) {
      os << "  [" << i << "] ";
      dump_expr(os, c.entries[i]);
      os << "\n";
    }
  }
  for (const auto& c : psd_) {
    os << "psd " << c.label << " dim=" << c.expr.dim() << "\n";
    for (int j = 0; j < c.expr.dim(); ++j) {
      for (int i = 0; i <= j; ++i) {
        os << "  (" << i << "," << j << ") ";
        dump_expr(os, c.expr.at(i, j));
        os << "\n";
      }
    }
  }
  os.precision(old_precision);
}

std::string_view to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::NumericalTrouble: return "numerical_trouble";
  }
  return "unknown";
}

std::shared_ptr<const ConicBackend> default_backend() {
  static const auto backend = std::make_shared<const ClarabelBackend>();
  return backend;
}

}  // namespace csof::conic
