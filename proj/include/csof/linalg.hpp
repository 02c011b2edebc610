#pragma once

#include <Eigen/Dense>

#include "csof/errors.hpp"

namespace csof {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Dense symmetric matrix. Construction symmetrizes the input as (M + Mᵀ)/2,
/// so entries(i, j) == entries(j, i) holds exactly for every instance.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(const Matrix& m);

  static SymMatrix Zero(Index n);
  static SymMatrix Identity(Index n);
  static SymMatrix Diagonal(const Vector& d);

  Index dim() const { return data_.rows(); }
  bool empty() const { return data_.size() == 0; }
  const Matrix& matrix() const { return data_; }
  double operator()(Index i, Index j) const { return data_(i, j); }

  /// Principal sub-block [start, start + n) × [start, start + n).
  SymMatrix principal_block(Index start, Index n) const;

  double trace() const { return data_.trace(); }
  double norm() const { return data_.norm(); }

  friend bool operator==(const SymMatrix& a, const SymMatrix& b) {
    return a.data_.rows() == b.data_.rows() && a.data_ == b.data_;
  }

 private:
  Matrix data_;
};

SymMatrix operator+(const SymMatrix& a, const SymMatrix& b);
SymMatrix operator-(const SymMatrix& a, const SymMatrix& b);
SymMatrix operator*(double s, const SymMatrix& a);

/// Eigendecomposition of a symmetric matrix, values ascending, column i of
/// `vectors` paired with values[i].
struct EigenDecomp {
  Vector values;
  Matrix vectors;
};

SymMatrix symmetrize(const Matrix& m);

/// Congruence T M Tᵀ, symmetrized.
SymMatrix congruence(const Matrix& t, const SymMatrix& m);

EigenDecomp eig_sym(const SymMatrix& m);

double min_eigenvalue(const SymMatrix& m);

bool is_psd(const SymMatrix& m, double tol);

/// Invertibility threshold for covariance blocks: 1e-10 · max(1, ‖M‖₂).
double singularity_threshold(const SymMatrix& m);

/// Throws SingularityError (with `what` in the message) unless the minimum
/// eigenvalue of `m` exceeds singularity_threshold(m).
void require_invertible(const SymMatrix& m, const std::string& what);

/// Solves A X = B for symmetric positive-definite A by Cholesky.
Matrix spd_solve(const SymMatrix& a, const Matrix& rhs, const std::string& what);

/// S_aug − U_aug P̂⁻¹ U_augᵀ. The residual of the rank condition on the
/// stacked relaxation matrix; zero exactly when the relaxation is tight.
SymMatrix schur_residual(const SymMatrix& phat, const Matrix& u_aug, const SymMatrix& s_aug);

/// ‖a − b‖_F / max(‖b‖_F, tiny).
double rel_frobenius(const Matrix& a, const Matrix& b);

double spectral_norm(const Matrix& m);

}  // namespace csof
