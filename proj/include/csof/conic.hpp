#pragma once

#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace csof::conic {

using VarIndex = int;

struct Term {
  VarIndex var;
  double coeff;
};

/// constant + Σ coeff · x[var]
class AffineExpr {
 public:
  AffineExpr() = default;
  explicit AffineExpr(double constant) : constant_(constant) {}

  static AffineExpr variable(VarIndex v, double coeff = 1.0);

  AffineExpr& add(VarIndex v, double coeff);
  AffineExpr& add(const AffineExpr& other, double scale = 1.0);
  AffineExpr& add_constant(double c);

  const std::vector<Term>& terms() const { return terms_; }
  double constant() const { return constant_; }

  /// Sorts terms by variable, merges duplicates, drops exact zeros.
  void canonicalize();

  double evaluate(std::span<const double> x) const;

 private:
  std::vector<Term> terms_;
  double constant_ = 0.0;
};

/// Symmetric matrix of affine expressions. Only the upper triangle is stored,
/// column-major: (0,0), (0,1), (1,1), (0,2), ...
class SymAffine {
 public:
  explicit SymAffine(int dim);

  int dim() const { return dim_; }
  static int packed_size(int dim) { return dim * (dim + 1) / 2; }
  /// Packed position of (i, j); order of i and j does not matter.
  static int packed_index(int i, int j);

  AffineExpr& at(int i, int j) { return entries_[static_cast<std::size_t>(packed_index(i, j))]; }
  const AffineExpr& at(int i, int j) const {
    return entries_[static_cast<std::size_t>(packed_index(i, j))];
  }
  const std::vector<AffineExpr>& packed() const { return entries_; }
  std::vector<AffineExpr>& packed() { return entries_; }

 private:
  int dim_;
  std::vector<AffineExpr> entries_;
};

struct VariableBlock {
  std::string name;
  VarIndex offset;
  int size;
};

struct Equality {
  AffineExpr expr;  ///< expr == 0
  std::string label;
};

struct PsdConstraint {
  SymAffine expr;  ///< expr ⪰ 0
  std::string label;
};

struct SocConstraint {
  std::vector<AffineExpr> entries;  ///< entries[0] ≥ ‖entries[1..]‖₂
  std::string label;
};

/// Backend-neutral conic program: minimize a linear objective subject to
/// linear equalities, PSD-cone membership of affine symmetric matrices and
/// second-order cones. Every constraint may only reference declared variables.
class ConicProgram {
 public:
  VarIndex add_variables(std::string name, int size);
  int num_variables() const { return num_vars_; }
  const std::vector<VariableBlock>& blocks() const { return blocks_; }

  void add_objective(VarIndex v, double coeff);
  const std::vector<double>& objective() const { return objective_; }

  void add_equality(AffineExpr expr, std::string label);
  void add_psd(SymAffine expr, std::string label);
  void add_soc(std::vector<AffineExpr> entries, std::string label);

  const std::vector<Equality>& equalities() const { return equalities_; }
  const std::vector<PsdConstraint>& psd() const { return psd_; }
  const std::vector<SocConstraint>& soc() const { return soc_; }

  /// Throws PreconditionError if any constraint references an undeclared variable.
  void check() const;

  /// Text form: variable blocks, objective, then every constraint with its
  /// affine coefficients.
  void dump(std::ostream& os) const;

 private:
  int num_vars_ = 0;
  std::vector<VariableBlock> blocks_;
  std::vector<double> objective_;
  std::vector<Equality> equalities_;
  std::vector<PsdConstraint> psd_;
  std::vector<SocConstraint> soc_;
};

enum class SolveStatus { Optimal, Infeasible, NumericalTrouble };

std::string_view to_string(SolveStatus s);

struct BackendResult {
  SolveStatus status = SolveStatus::NumericalTrouble;
  std::vector<double> x;  ///< primal values; empty unless status == Optimal
  double objective = 0.0;
  int iterations = 0;
  double solve_seconds = 0.0;
  std::string detail;  ///< backend-specific status text
};

class ConicBackend {
 public:
  virtual ~ConicBackend() = default;
  virtual std::string name() const = 0;
  virtual BackendResult solve(const ConicProgram& program) const = 0;
};

/// Interior-point backend (Clarabel).
class ClarabelBackend final : public ConicBackend {
 public:
  struct Settings {
    int max_iter = 400;
    double tol_gap_abs = 1e-9;
    double tol_gap_rel = 1e-9;
    double tol_feas = 1e-9;
    double time_limit = 600.0;
    bool verbose = false;
    /// Treat the backend's reduced-accuracy "almost solved" status as optimal.
    bool accept_reduced_accuracy = true;
  };

  ClarabelBackend() = default;
  explicit ClarabelBackend(Settings s) : settings_(s) {}

  std::string name() const override { return "clarabel"; }
  BackendResult solve(const ConicProgram& program) const override;

  const Settings& settings() const { return settings_; }

 private:
  Settings settings_;
};

std::shared_ptr<const ConicBackend> default_backend();

}  // namespace csof::conic
