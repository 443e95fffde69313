// Dense symmetric-matrix utilities: eigendecompositions, epsilon-rank,
// Schur-complement tests. Everything here is a pure function on value types.
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace procrustes {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Dense real symmetric matrix. The upper triangle is authoritative: the
/// constructor mirrors it, so entries(i,j) == entries(j,i) always holds.
class SymMatrix {
 public:
  explicit SymMatrix(const Matrix& full, double asym_tol = 1e-9) {
    if (full.rows() != full.cols() || full.rows() < 1)
      throw std::invalid_argument("SymMatrix: square matrix of order >= 1 required, got " +
                                  std::to_string(full.rows()) + "x" + std::to_string(full.cols()));
    const double asym = (full - full.transpose()).norm();
    if (asym > asym_tol * std::max(1.0, full.norm()))
      throw std::invalid_argument("SymMatrix: input is not symmetric, ||M - M^T|| = " +
                                  std::to_string(asym));
    m_ = full.selfadjointView<Eigen::Upper>();
  }

  static SymMatrix identity(Eigen::Index order) { return SymMatrix(Matrix::Identity(order, order)); }
  static SymMatrix diagonal(const Vector& d) { return SymMatrix(Matrix(d.asDiagonal())); }
  static SymMatrix zero(Eigen::Index order) { return SymMatrix(Matrix::Zero(order, order)); }

  Eigen::Index order() const { return m_.rows(); }
  const Matrix& matrix() const { return m_; }
  double operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }

 private:
  Matrix m_;
};

/// Spectral decomposition M = Q diag(lambda) Q^T with eigenvalues sorted in
/// descending order and orthonormal eigenvector columns. Computed by
/// symmetric tridiagonalization followed by implicit QL/QR iteration, which
/// is deterministic for identical inputs.
struct EigenDecomposition {
  Vector eigenvalues;   // lambda_1 >= ... >= lambda_n
  Matrix eigenvectors;  // columns match eigenvalue order

  Matrix reconstruct() const {
    return eigenvectors * eigenvalues.asDiagonal() * eigenvectors.transpose();
  }
};

inline EigenDecomposition eig_sym(const SymMatrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m.matrix());
  if (es.info() != Eigen::Success)
    throw std::runtime_error("eig_sym: eigendecomposition did not converge on order " +
                             std::to_string(m.order()));
  EigenDecomposition d;
  d.eigenvalues = es.eigenvalues().reverse();
  d.eigenvectors = es.eigenvectors().rowwise().reverse();
  return d;
}

/// Count of eigenvalues strictly greater than eps. Ties at eps are not
/// counted. Intended for positive semi-definite arguments; an indefinite
/// input is counted on signed eigenvalues, not magnitudes.
inline int eps_rank(const SymMatrix& m, double eps) {
  if (eps < 0) throw std::invalid_argument("eps_rank: eps must be nonnegative");
  const Vector lam = eig_sym(m).eigenvalues;
  return static_cast<int>((lam.array() > eps).count());
}

/// The (k+1)-th eigenvalue in descending order: the empirical threshold
/// below which a solution of target rank k would be declared rank-k.
inline double empirical_eps(const SymMatrix& m, int k) {
  if (k < 1 || k >= m.order())
    throw std::invalid_argument("empirical_eps: need 1 <= k < order, got k=" + std::to_string(k) +
                                " order=" + std::to_string(m.order()));
  return eig_sym(m).eigenvalues(k);
}

inline double min_eigenvalue(const SymMatrix& m) { return eig_sym(m).eigenvalues.tail(1)(0); }

/// PSD test with the toolkit-wide tolerance: lambda_min >= -1e-9 * max(1, ||M||_F).
inline bool is_psd(const SymMatrix& m, double tol_scale = 1e-9) {
  return min_eigenvalue(m) >= -tol_scale * std::max(1.0, m.matrix().norm());
}

/// PSD-ness of the block matrix [[A, B], [B^T, C]] decided through the Schur
/// complement C - B^T A^{-1} B. Requires A positive definite.
inline bool schur_psd_check(const SymMatrix& a, const Matrix& b, const SymMatrix& c) {
  if (b.rows() != a.order() || b.cols() != c.order())
    throw std::invalid_argument("schur_psd_check: B must be order(A) x order(C)");
  const double amin = min_eigenvalue(a);
  if (amin <= 1e-12 * std::max(1.0, a.matrix().norm()))
    throw std::invalid_argument("schur_psd_check: A is not positive definite (lambda_min = " +
                                std::to_string(amin) + ")");
  Eigen::LLT<Matrix> llt(a.matrix());
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("schur_psd_check: Cholesky of A failed");
  const Matrix complement = c.matrix() - b.transpose() * llt.solve(b);
  return is_psd(SymMatrix((complement + complement.transpose()) / 2.0));
}

/// Sum of the `count` smallest eigenvalues. For a PSD matrix this vanishes
/// exactly when rank(M) <= order - count.
inline double sum_smallest_eigenvalues(const SymMatrix& m, int count) {
  if (count < 0 || count > m.order())
    throw std::invalid_argument("sum_smallest_eigenvalues: need 0 <= count <= order");
  if (count == 0) return 0.0;
  return eig_sym(m).eigenvalues.tail(count).sum();
}

}  // namespace procrustes
