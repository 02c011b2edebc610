#include "csof/linalg.hpp"

#include <algorithm>
#include <limits>
#include <sstream>

namespace csof {

namespace {

std::string echo(const Matrix& m) {
  std::ostringstream os;
  os.precision(17);
  os << m;
  return os.str();
}

}  // namespace

SymMatrix::SymMatrix(const Matrix& m) {
  if (m.rows() != m.cols()) {
    std::ostringstream os;
    os << "symmetric matrix requires a square input, got " << m.rows() << "x" << m.cols();
    throw DimensionError(os.str());
  }
  data_ = 0.5 * (m + m.transpose());
}

SymMatrix SymMatrix::Zero(Index n) { return SymMatrix(Matrix::Zero(n, n)); }

SymMatrix SymMatrix::Identity(Index n) { return SymMatrix(Matrix::Identity(n, n)); }

SymMatrix SymMatrix::Diagonal(const Vector& d) { return SymMatrix(Matrix(d.asDiagonal())); }

SymMatrix SymMatrix::principal_block(Index start, Index n) const {
  if (start < 0 || n < 0 || start + n > dim()) {
    throw DimensionError("principal block out of range");
  }
  return SymMatrix(data_.block(start, start, n, n));
}

SymMatrix operator+(const SymMatrix& a, const SymMatrix& b) {
  if (a.dim() != b.dim()) throw DimensionError("symmetric sum: dimension mismatch");
  return SymMatrix(a.matrix() + b.matrix());
}

SymMatrix operator-(const SymMatrix& a, const SymMatrix& b) {
  if (a.dim() != b.dim()) throw DimensionError("symmetric difference: dimension mismatch");
  return SymMatrix(a.matrix() - b.matrix());
}

SymMatrix operator*(double s, const SymMatrix& a) { return SymMatrix(s * a.matrix()); }

SymMatrix symmetrize(const Matrix& m) { return SymMatrix(m); }

SymMatrix congruence(const Matrix& t, const SymMatrix& m) {
  if (t.cols() != m.dim()) throw DimensionError("congruence: dimension mismatch");
  return SymMatrix(t * m.matrix() * t.transpose());
}

EigenDecomp eig_sym(const SymMatrix& m) {
  if (m.empty()) throw DimensionError("eigendecomposition of an empty matrix");
  Eigen::SelfAdjointEigenSolver<Matrix> solver(m.matrix());
  if (solver.info() != Eigen::Success) {
    throw NumericError("symmetric eigen-iteration failed to converge for matrix:\n" +
                       echo(m.matrix()));
  }
  // Eigen returns values in ascending order already.
  return {solver.eigenvalues(), solver.eigenvectors()};
}

double min_eigenvalue(const SymMatrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(m.matrix(), Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw NumericError("symmetric eigen-iteration failed to converge for matrix:\n" +
                       echo(m.matrix()));
  }
  return solver.eigenvalues()(0);
}

bool is_psd(const SymMatrix& m, double tol) { return min_eigenvalue(m) >= -tol; }

double singularity_threshold(const SymMatrix& m) {
  return 1e-10 * std::max(1.0, spectral_norm(m.matrix()));
}

void require_invertible(const SymMatrix& m, const std::string& what) {
  const double lo = min_eigenvalue(m);
  const double thr = singularity_threshold(m);
  if (!(lo > thr)) {
    std::ostringstream os;
    os << what << ": matrix is singular (min eigenvalue " << lo << " <= threshold " << thr
       << ")";
    throw SingularityError(os.str());
  }
}

Matrix spd_solve(const SymMatrix& a, const Matrix& rhs, const std::string& what) {
  if (a.dim() != rhs.rows()) throw DimensionError(what + ": dimension mismatch in solve");
  Eigen::LLT<Matrix> llt(a.matrix());
  if (llt.info() != Eigen::Success) {
    throw SingularityError(what + ": matrix is not positive definite");
  }
  return llt.solve(rhs);
}

SymMatrix schur_residual(const SymMatrix& phat, const Matrix& u_aug, const SymMatrix& s_aug) {
  if (u_aug.cols() != phat.dim() || u_aug.rows() != s_aug.dim()) {
    throw DimensionError("schur_residual: dimensions are not conformable");
  }
  require_invertible(phat, "schur_residual");
  const Matrix x = spd_solve(phat, u_aug.transpose(), "schur_residual");
  return SymMatrix(s_aug.matrix() - u_aug * x);
}

double rel_frobenius(const Matrix& a, const Matrix& b) {
  return (a - b).norm() / std::max(b.norm(), std::numeric_limits<double>::min());
}

double spectral_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

}  // namespace csof
