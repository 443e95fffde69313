#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <random>

#include "procrustes/matcore.hpp"

using namespace procrustes;

namespace {

std::mt19937_64 rng(12345);

Matrix random_matrix(int rows, int cols) {
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix m(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) m(i, j) = g(rng);
  return m;
}

Matrix random_orthonormal(int n) {
  Eigen::HouseholderQR<Matrix> qr(random_matrix(n, n));
  return qr.householderQ();
}

// PSD matrix with a prescribed spectrum (used to keep spectra well separated
// from the eps threshold).
SymMatrix psd_with_spectrum(const Vector& lam) {
  const Matrix q = random_orthonormal(static_cast<int>(lam.size()));
  Matrix m = q * lam.asDiagonal() * q.transpose();
  return SymMatrix((m + m.transpose()) / 2.0);
}

}  // namespace

TEST(SymMatrix, EnforcesSymmetryOnConstruction) {
  Matrix bad(2, 2);
  bad << 1.0, 2.0, 0.5, 1.0;
  EXPECT_THROW(SymMatrix{bad}, std::invalid_argument);
  EXPECT_THROW(SymMatrix{Matrix::Zero(2, 3)}, std::invalid_argument);
  EXPECT_THROW(SymMatrix{Matrix::Zero(0, 0)}, std::invalid_argument);

  Matrix nearly(2, 2);
  nearly << 1.0, 2.0, 2.0 + 1e-13, 1.0;
  SymMatrix s(nearly);
  EXPECT_DOUBLE_EQ(s(0, 1), s(1, 0));
}

TEST(EigSym, ReconstructionAndOrthonormality) {
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 8);
    Matrix m = random_matrix(n, n);
    SymMatrix sym((m + m.transpose()) / 2.0);
    const EigenDecomposition d = eig_sym(sym);
    for (int i = 0; i + 1 < n; ++i) EXPECT_GE(d.eigenvalues(i), d.eigenvalues(i + 1));
    const double scale = std::max(1.0, sym.matrix().norm());
    EXPECT_LE((d.reconstruct() - sym.matrix()).norm(), 1e-10 * scale);
    EXPECT_LE((d.eigenvectors.transpose() * d.eigenvectors - Matrix::Identity(n, n)).norm(),
              1e-10 * n);
  }
}

TEST(EpsRank, ThresholdDefinition) {
  EXPECT_EQ(eps_rank(SymMatrix::identity(4), 1e-6), 4);
  EXPECT_EQ(eps_rank(SymMatrix::zero(3), 1e-6), 0);
  Vector d(3);
  d << 1.0, 1e-7, 0.0;
  EXPECT_EQ(eps_rank(SymMatrix::diagonal(d), 1e-6), 1);
  // Ties at eps resolve to "not counted".
  Vector t(2);
  t << 1.0, 1e-6;
  EXPECT_EQ(eps_rank(SymMatrix::diagonal(t), 1e-6), 1);
  EXPECT_THROW(eps_rank(SymMatrix::identity(2), -1.0), std::invalid_argument);
}

TEST(EpsRank, MatchesSvdRankOnSeparatedSpectra) {
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 7);
    Vector lam(n);
    int true_rank = 0;
    for (int i = 0; i < n; ++i) {
      const bool zero = (rng() % 2) == 0;
      lam(i) = zero ? 0.0 : 0.5 + static_cast<double>(rng() % 1000) / 500.0;
      if (!zero) ++true_rank;
    }
    const SymMatrix m = psd_with_spectrum(lam);
    Eigen::JacobiSVD<Matrix> svd(m.matrix());
    const int svd_rank =
        static_cast<int>((svd.singularValues().array() > 1e-8).count());
    EXPECT_EQ(eps_rank(m, 1e-8), svd_rank);
    EXPECT_EQ(eps_rank(m, 1e-8), true_rank);
  }
}

TEST(EmpiricalEps, SortedEigenvalueLookup) {
  Vector d(3);
  d << 3.0, 2.0, 1.0;
  const SymMatrix m = SymMatrix::diagonal(d);
  EXPECT_DOUBLE_EQ(empirical_eps(m, 1), 2.0);
  EXPECT_DOUBLE_EQ(empirical_eps(m, 2), 1.0);
  EXPECT_DOUBLE_EQ(empirical_eps(SymMatrix::identity(5), 4), 1.0);
  EXPECT_THROW(empirical_eps(m, 3), std::invalid_argument);
  EXPECT_THROW(empirical_eps(m, 0), std::invalid_argument);
}

TEST(SchurPsdCheck, SpecExamples) {
  EXPECT_TRUE(schur_psd_check(SymMatrix::identity(2), Matrix::Zero(2, 2), SymMatrix::identity(2)));
  Matrix b1(1, 1);
  b1 << 2.0;
  EXPECT_FALSE(schur_psd_check(SymMatrix::identity(1), b1, SymMatrix::identity(1)));
  b1 << 1.0;  // complement exactly 0: boundary PSD
  EXPECT_TRUE(schur_psd_check(SymMatrix::identity(1), b1, SymMatrix::identity(1)));
  EXPECT_THROW(schur_psd_check(SymMatrix::zero(2), Matrix::Zero(2, 2), SymMatrix::identity(2)),
               std::invalid_argument);
  EXPECT_THROW(schur_psd_check(SymMatrix::identity(2), Matrix::Zero(3, 2), SymMatrix::identity(2)),
               std::invalid_argument);
}

TEST(SchurPsdCheck, AgreesWithDirectEigenvalueTest) {
  // Construct C = B^T A^{-1} B + E with the perturbation spectrum bounded
  // away from zero, so both routes decide the same side of the boundary.
  for (int trial = 0; trial < 100; ++trial) {
    const int p = 1 + static_cast<int>(rng() % 4);
    const int q = 1 + static_cast<int>(rng() % 4);
    Matrix root = random_matrix(p, p);
    SymMatrix a(Matrix(root * root.transpose() + 0.3 * Matrix::Identity(p, p)));
    const Matrix b = random_matrix(p, q);
    Vector elam(q);
    for (int i = 0; i < q; ++i) {
      double v = -1.0 + 2.0 * static_cast<double>(rng() % 10000) / 9999.0;
      if (std::abs(v) < 1e-3) v = v < 0 ? -1e-3 : 1e-3;
      elam(i) = v;
    }
    const Matrix qmat = random_orthonormal(q);
    const Matrix e = qmat * elam.asDiagonal() * qmat.transpose();
    Matrix c = b.transpose() * a.matrix().llt().solve(b) + e;
    SymMatrix csym((c + c.transpose()) / 2.0);

    Matrix block(p + q, p + q);
    block << a.matrix(), b, b.transpose(), csym.matrix();
    const bool direct = is_psd(SymMatrix((block + block.transpose()) / 2.0));
    EXPECT_EQ(schur_psd_check(a, b, csym), direct);
  }
}

TEST(SchurPsdCheck, CorollaryThreeWayEquivalence) {
  // For s above ||B||_2 all three characterizations hold; below, all fail.
  for (int trial = 0; trial < 100; ++trial) {
    const int p = 1 + static_cast<int>(rng() % 5);
    const int q = 1 + static_cast<int>(rng() % 5);
    const Matrix b = random_matrix(p, q);
    const double snorm = Eigen::JacobiSVD<Matrix>(b).singularValues()(0);
    for (const double s : {1.05 * snorm, 0.95 * snorm}) {
      const bool expect = s > snorm;
      const bool via_schur =
          schur_psd_check(SymMatrix(Matrix(s * Matrix::Identity(p, p))), b,
                          SymMatrix(Matrix(s * Matrix::Identity(q, q))));
      Matrix block(p + q, p + q);
      block << s * Matrix::Identity(p, p), b, b.transpose(), s * Matrix::Identity(q, q);
      const bool via_block = is_psd(SymMatrix((block + block.transpose()) / 2.0));
      const bool via_bbt =
          is_psd(SymMatrix(Matrix(s * s * Matrix::Identity(p, p) - b * b.transpose())));
      const bool via_btb =
          is_psd(SymMatrix(Matrix(s * s * Matrix::Identity(q, q) - b.transpose() * b)));
      EXPECT_EQ(via_schur, expect);
      EXPECT_EQ(via_block, expect);
      EXPECT_EQ(via_bbt, expect);
      EXPECT_EQ(via_btb, expect);
    }
  }
}

TEST(TraceOrder, PsdDominanceImpliesTraceOrder) {
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 6);
    Matrix ry = random_matrix(n, n);
    Matrix rd = random_matrix(n, n);
    Matrix y = ry * ry.transpose();
    Matrix x = y + rd * rd.transpose();  // X - Y is PSD by construction
    EXPECT_GE(x.trace(), y.trace() - 1e-12);
  }
}

TEST(SumSmallestEigenvalues, ValuesAndRankLink) {
  Vector d1(3);
  d1 << 5.0, 0.0, 0.0;
  EXPECT_NEAR(sum_smallest_eigenvalues(SymMatrix::diagonal(d1), 2), 0.0, 1e-12);
  EXPECT_NEAR(sum_smallest_eigenvalues(SymMatrix::identity(3), 2), 2.0, 1e-12);
  Vector d2(4);
  d2 << 4.0, 3.0, 2.0, 1.0;
  EXPECT_NEAR(sum_smallest_eigenvalues(SymMatrix::diagonal(d2), 2), 3.0, 1e-12);
  EXPECT_NEAR(sum_smallest_eigenvalues(SymMatrix::identity(3), 0), 0.0, 1e-12);
  EXPECT_THROW(sum_smallest_eigenvalues(SymMatrix::identity(3), 4), std::invalid_argument);
}

TEST(BlockLemma, GramBlockHasRankM) {
  // [[I_m, X], [X^T, X^T X]] always has rank exactly m.
  for (int trial = 0; trial < 50; ++trial) {
    const int m = 1 + static_cast<int>(rng() % 5);
    const int n = 1 + static_cast<int>(rng() % 5);
    const Matrix x = random_matrix(m, n);
    Matrix v(m + n, m + n);
    v << Matrix::Identity(m, m), x, x.transpose(), x.transpose() * x;
    SymMatrix vs((v + v.transpose()) / 2.0);
    EXPECT_EQ(eps_rank(vs, 1e-8 * vs.matrix().norm()), m);
  }
}
