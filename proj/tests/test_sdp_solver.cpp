#include <gtest/gtest.h>

#include <random>

#include "procrustes/sdp_problem.hpp"
#include "procrustes/sdp_solver.hpp"

using namespace procrustes;

namespace {

std::mt19937_64 rng(99);

double urand(double lo, double hi) {
  std::uniform_real_distribution<double> d(lo, hi);
  return d(rng);
}

Matrix random_matrix(int rows, int cols) {
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix m(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) m(i, j) = g(rng);
  return m;
}

// Feasible-and-bounded random instance: b is taken from a strictly interior
// primal point and c from a strictly interior dual point.
struct RandomInstance {
  SdpProblem p;
  double planted_gap_upper;  // c'x0 - b'y0 = s0'x0 >= optimal gap
};

RandomInstance random_instance() {
  SdpProblem p;
  std::vector<Vector> x0, s0;
  const int npsd = 1 + static_cast<int>(rng() % 2);
  for (int k = 0; k < npsd; ++k) {
    const int order = 2 + static_cast<int>(rng() % 3);
    p.add_psd_block(order);
    Matrix root = random_matrix(order, order);
    x0.push_back(svec(Matrix(root * root.transpose() + 0.4 * Matrix::Identity(order, order))));
    root = random_matrix(order, order);
    s0.push_back(svec(Matrix(root * root.transpose() + 0.4 * Matrix::Identity(order, order))));
  }
  if (rng() % 2) {
    const int len = 2 + static_cast<int>(rng() % 4);
    p.add_nonneg_block(len);
    Vector vx(len), vs(len);
    for (int i = 0; i < len; ++i) {
      vx(i) = urand(0.5, 2.0);
      vs(i) = urand(0.5, 2.0);
    }
    x0.push_back(vx);
    s0.push_back(vs);
  }
  if (rng() % 2) {
    const int len = 1 + static_cast<int>(rng() % 3);
    p.add_free_block(len);
    Vector vx(len);
    for (int i = 0; i < len; ++i) vx(i) = urand(-1.0, 1.0);
    x0.push_back(vx);
    s0.push_back(Vector::Zero(len));
  }

  const int m = 3 + static_cast<int>(rng() % 8);
  Vector y0(m);
  for (int r = 0; r < m; ++r) y0(r) = urand(-1.0, 1.0);
  std::vector<std::vector<Vector>> acoef(m);
  for (int r = 0; r < m; ++r) {
    LinearRow row;
    double rhs = 0.0;
    acoef[r].resize(p.num_blocks());
    for (int b = 0; b < p.num_blocks(); ++b) {
      acoef[r][b] = Vector(p.blocks()[b].dim());
      for (int i = 0; i < p.blocks()[b].dim(); ++i) {
        acoef[r][b](i) = urand(-1.0, 1.0);
        row.coefs.push_back({b, i, acoef[r][b](i)});
      }
      rhs += acoef[r][b].dot(x0[b]);
    }
    row.rhs = rhs;
    p.add_row(row);
  }
  double gap = 0.0;
  for (int b = 0; b < p.num_blocks(); ++b) {
    Vector c = s0[b];
    for (int r = 0; r < m; ++r) c += y0(r) * acoef[r][b];
    for (int i = 0; i < p.blocks()[b].dim(); ++i) p.add_objective(b, i, c(i));
    gap += s0[b].dot(x0[b]);
  }
  return {std::move(p), gap};
}

}  // namespace

TEST(SdpSolver, ScalarPsdWithLowerBound) {
  SdpProblem p;
  const int x = p.add_psd_block(1);
  const int s = p.add_nonneg_block(1);
  p.add_objective(x, 0, 1.0);
  p.add_row({{{x, 0, 1.0}, {s, 0, -1.0}}, 1.0});
  const SdpSolution sol = solve(p);
  ASSERT_EQ(sol.status, SolveStatus::Optimal);
  EXPECT_NEAR(sol.objective, 1.0, 1e-7);
  EXPECT_NEAR(sol.x[x](0), 1.0, 1e-6);
}

TEST(SdpSolver, SchurBoundBinds) {
  // minimize Z over [[1, 2], [2, Z]] >= 0: Z - 4 >= 0 binds.
  SdpProblem p;
  const int blk = p.add_psd_block(2);
  p.pin_psd_entry(blk, 0, 0, 1.0);
  p.pin_psd_entry(blk, 1, 0, 2.0);
  p.add_objective(blk, svec_index(2, 1, 1), 1.0);
  const SdpSolution sol = solve(p);
  ASSERT_EQ(sol.status, SolveStatus::Optimal);
  EXPECT_NEAR(sol.objective, 4.0, 1e-6);
  EXPECT_NEAR(sol.psd_matrix(p, blk)(1, 1), 4.0, 1e-5);
}

TEST(SdpSolver, ConflictingBoundsArePrimalInfeasible) {
  // x >= 1 and x <= 0 on a nonnegative scalar
  SdpProblem p;
  const int x = p.add_nonneg_block(1);
  const int s1 = p.add_nonneg_block(1);
  const int s2 = p.add_nonneg_block(1);
  p.add_row({{{x, 0, 1.0}, {s1, 0, -1.0}}, 1.0});
  p.add_row({{{x, 0, 1.0}, {s2, 0, 1.0}}, 0.0});
  const SdpSolution sol = solve(p);
  ASSERT_EQ(sol.status, SolveStatus::PrimalInfeasible);
  EXPECT_GT(sol.certificate_violation, 0.0);
  // certificate: b'y = 1 with A'y + s = 0 on every block
  EXPECT_NEAR(sol.y(0) * 1.0 + sol.y(1) * 0.0, 1.0, 1e-6);
}

TEST(SdpSolver, DualOfInfeasiblePrimalIsDualInfeasible) {
  // dual of the instance above (zero objective), expressed in standard form:
  // min -b'y s.t. A'y + z = 0, z >= 0.
  SdpProblem d;
  const int y = d.add_free_block(2);
  const int z = d.add_nonneg_block(3);
  d.add_objective(y, 0, -1.0);  // -b'y with b = (1, 0)
  // columns of the primal A: x: (1, 1), s1: (-1, 0), s2: (0, 1)
  d.add_row({{{y, 0, 1.0}, {y, 1, 1.0}, {z, 0, 1.0}}, 0.0});
  d.add_row({{{y, 0, -1.0}, {z, 1, 1.0}}, 0.0});
  d.add_row({{{y, 1, 1.0}, {z, 2, 1.0}}, 0.0});
  const SdpSolution sol = solve(d);
  ASSERT_EQ(sol.status, SolveStatus::DualInfeasible);
  EXPECT_GT(sol.certificate_violation, 0.0);
}

TEST(SdpSolver, RandomFeasibilityBattery) {
  for (int trial = 0; trial < 50; ++trial) {
    const RandomInstance inst = random_instance();
    ASSERT_LE(inst.p.total_dim(), 40 + 15);  // desk scale
    const SdpSolution sol = solve(inst.p);
    ASSERT_EQ(sol.status, SolveStatus::Optimal) << "trial " << trial << ": " << sol.message;
    EXPECT_LE(sol.primal_residual, 1e-7);
    EXPECT_LE(sol.dual_residual, 1e-7);
    EXPECT_LE(sol.gap_residual, 1e-7);
    // weak duality
    EXPECT_GE(sol.objective, sol.dual_objective - 1e-6 * (1.0 + std::abs(sol.objective)));
  }
}

TEST(SdpSolver, DeterministicGivenIdenticalInputs) {
  const RandomInstance inst = random_instance();
  const SdpSolution a = solve(inst.p);
  const SdpSolution b = solve(inst.p);
  ASSERT_EQ(a.status, b.status);
  EXPECT_EQ(a.objective, b.objective);
  EXPECT_EQ(a.iterations, b.iterations);
  for (int blk = 0; blk < inst.p.num_blocks(); ++blk) EXPECT_EQ(a.x[blk], b.x[blk]);
}

TEST(SdpSolver, RejectsOutOfRangeTolerance) {
  SdpProblem p;
  p.add_nonneg_block(1);
  SolverSettings st;
  st.tol = 0.0;
  EXPECT_THROW(solve(p, st), std::invalid_argument);
  st.tol = 0.5;
  EXPECT_THROW(solve(p, st), std::invalid_argument);
}

TEST(Presolve, DuplicateRowsRetainOne) {
  SdpProblem p;
  const int f = p.add_free_block(2);
  p.add_row({{{f, 0, 1.0}, {f, 1, 1.0}}, 1.0});
  p.add_row({{{f, 0, 1.0}, {f, 1, 1.0}}, 1.0});
  p.add_row({{{f, 0, 2.0}, {f, 1, 2.0}}, 2.0});  // scaled duplicate
  const PresolveOutcome out = presolve(p);
  ASSERT_FALSE(out.infeasible);
  EXPECT_EQ(out.problem.num_rows(), 1);
  int dup = 0;
  for (const auto& a : out.actions)
    if (a.kind == PresolveActionKind::DropDuplicateRow) ++dup;
  EXPECT_EQ(dup, 2);
}

TEST(Presolve, ZeroRowDroppedContradictionSignalled) {
  SdpProblem p;
  const int f = p.add_free_block(1);
  p.add_row({{{f, 0, 0.0}}, 0.0});
  const PresolveOutcome ok = presolve(p);
  ASSERT_FALSE(ok.infeasible);
  EXPECT_EQ(ok.problem.num_rows(), 0);
  ASSERT_EQ(ok.actions.size(), 1u);
  EXPECT_EQ(ok.actions[0].kind, PresolveActionKind::DropZeroRow);

  SdpProblem q;
  const int g = q.add_free_block(1);
  q.add_row({{{g, 0, 0.0}}, 1.0});
  const PresolveOutcome bad = presolve(q);
  EXPECT_TRUE(bad.infeasible);
  EXPECT_EQ(solve(q).status, SolveStatus::PrimalInfeasible);
}

TEST(Presolve, SingletonRowsFixVariablesWithBackMapping) {
  SdpProblem p;
  const int f = p.add_free_block(2);
  p.add_objective(f, 0, 1.0);
  p.add_objective(f, 1, 1.0);
  p.add_row({{{f, 0, 1.0}}, 3.0});
  p.add_row({{{f, 0, 1.0}, {f, 1, 1.0}}, 5.0});
  const PresolveOutcome out = presolve(p);
  ASSERT_FALSE(out.infeasible);
  EXPECT_EQ(out.problem.num_rows(), 0);  // both rows consumed by the fixing cascade
  const SdpSolution sol = solve(p);
  ASSERT_EQ(sol.status, SolveStatus::Optimal);
  EXPECT_NEAR(sol.objective, 5.0, 1e-9);
  EXPECT_NEAR(sol.x[f](0), 3.0, 1e-9);
  EXPECT_NEAR(sol.x[f](1), 2.0, 1e-9);
}

TEST(Presolve, NonnegativeVariableForcedNegativeIsInfeasible) {
  SdpProblem p;
  const int n = p.add_nonneg_block(1);
  p.add_row({{{n, 0, 2.0}}, -1.0});
  EXPECT_TRUE(presolve(p).infeasible);
}

TEST(Presolve, DependentRowsEliminated) {
  SdpProblem p;
  const int f = p.add_free_block(3);
  p.add_row({{{f, 0, 1.0}, {f, 1, 1.0}}, 1.0});
  p.add_row({{{f, 1, 1.0}, {f, 2, 1.0}}, 2.0});
  p.add_row({{{f, 0, 1.0}, {f, 1, 2.0}, {f, 2, 1.0}}, 3.0});  // sum of the first two
  const PresolveOutcome out = presolve(p, true);
  ASSERT_FALSE(out.infeasible);
  EXPECT_EQ(out.problem.num_rows(), 2);

  SdpProblem q;
  const int g = q.add_free_block(3);
  q.add_row({{{g, 0, 1.0}, {g, 1, 1.0}}, 1.0});
  q.add_row({{{g, 1, 1.0}, {g, 2, 1.0}}, 2.0});
  q.add_row({{{g, 0, 1.0}, {g, 1, 2.0}, {g, 2, 1.0}}, 4.0});  // inconsistent combination
  EXPECT_TRUE(presolve(q, true).infeasible);
}

TEST(SdpSolver, SolutionSatisfiesRowsAndCone) {
  const RandomInstance inst = random_instance();
  const SdpSolution sol = solve(inst.p);
  ASSERT_EQ(sol.status, SolveStatus::Optimal);
  for (int r = 0; r < inst.p.num_rows(); ++r)
    EXPECT_NEAR(inst.p.row_value(r, sol.x), inst.p.rows()[r].rhs, 1e-5);
  for (int b = 0; b < inst.p.num_blocks(); ++b) {
    if (inst.p.blocks()[b].kind == BlockKind::Psd)
      EXPECT_GE(min_eigenvalue(SymMatrix(sol.psd_matrix(inst.p, b), 1e-7)), -1e-7);
    if (inst.p.blocks()[b].kind == BlockKind::Nonneg) EXPECT_GE(sol.x[b].minCoeff(), -1e-9);
  }
}
