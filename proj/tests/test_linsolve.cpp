#include <gtest/gtest.h>

#include <random>

#include <Eigen/Eigenvalues>

#include "dualsav/assembly.hpp"
#include "dualsav/linsolve.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace dualsav;
using namespace dualsav::testing;

namespace {

Matrix random_spd(Eigen::Index n, unsigned seed) {
  std::mt19937 gen(seed);
  std::normal_distribution<double> g;
  Matrix b(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) b(i, j) = g(gen);
  return b * b.transpose() + static_cast<double>(n) * Matrix::Identity(n, n);
}

Vector random_vector(Eigen::Index n, unsigned seed) {
  std::mt19937 gen(seed);
  std::normal_distribution<double> g;
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = g(gen);
  return v;
}

}  // namespace

TEST(Linsolve, DenseSpdRecovery) {
  const Matrix a = random_spd(10, 1);
  const Vector x = random_vector(10, 2);
  const SpdFactorization f(a);
  EXPECT_FALSE(f.is_sparse());
  EXPECT_LE((f.solve(Vector(a * x)) - x).norm(), 1e-12 * x.norm());
  EXPECT_LE((solve_spd(a, a * x) - x).norm(), 1e-12 * x.norm());
}

TEST(Linsolve, BandedSpdUsesSparsePathWithSameSolution) {
  const auto pts = jittered_polygon(64, 3);
  const FrozenFrame fr = build_frame(pts);
  const Matrix a = Matrix(fr.masses.asDiagonal()) + 0.1 * stiffness_matrix(fr);
  const Vector x = random_vector(64, 4);
  const SpdFactorization f(a);
  EXPECT_TRUE(f.is_sparse());
  EXPECT_LE((f.solve(Vector(a * x)) - x).norm(), 1e-12 * x.norm());
  const Matrix xs = Matrix::Random(64, 3);
  EXPECT_LE((f.solve(Matrix(a * xs)) - xs).norm(), 1e-11 * xs.norm());
}

TEST(Linsolve, IndefiniteMatrixIsRejected) {
  Matrix a = Matrix::Identity(4, 4);
  a(2, 2) = -1.0;
  try {
    SpdFactorization f(a);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NotPositiveDefinite);
  }
}

TEST(Linsolve, DualProjectionAnnihilatesConstants) {
  const auto pts = jittered_polygon(12, 5);
  const ZeroMeanContext ctx(oracle_masses(pts));
  const Vector f = random_vector(12, 6);
  const Vector p = dual_zero_mean_project(f, ctx);
  EXPECT_NEAR(p.sum(), 0.0, 1e-13);
  EXPECT_LE((dual_zero_mean_project(p, ctx) - p).norm(), 1e-14);
  EXPECT_LE(dual_zero_mean_project(ctx.mass, ctx).norm(), 1e-14);
}

TEST(Linsolve, HminusOneMetricMatchesPseudoInverseOnZeroMeanSpace) {
  const auto pts = jittered_polygon(8, 7, 0.2);
  const Matrix k = oracle_stiffness(pts);
  const Vector m = oracle_masses(pts);
  const Matrix oracle = m.asDiagonal() * oracle_pseudo_inverse(k) * m.asDiagonal();
  // zero-mean basis: columns u with m^T u = 0
  Matrix basis = Matrix::Random(8, 5);
  for (Eigen::Index c = 0; c < basis.cols(); ++c) basis.col(c) -= (m.dot(basis.col(c)) / m.squaredNorm()) * m;
  for (double c : {0.1, 1.0, 10.0}) {
    const Matrix a = hminus1_metric(k, ZeroMeanContext(m, c));
    const Matrix lhs = basis.transpose() * a * basis;
    const Matrix rhs = basis.transpose() * oracle * basis;
    EXPECT_LE((lhs - rhs).norm(), 1e-8 * rhs.norm()) << "c = " << c;
    EXPECT_GT(Eigen::SelfAdjointEigenSolver<Matrix>(a).eigenvalues().minCoeff(), 0.0);
  }
}

TEST(Linsolve, ZeroMeanResponseMatchesBorderedOracle) {
  const auto pts = jittered_polygon(8, 9, 0.2);
  const FrozenFrame fr = build_frame(pts);
  const Matrix k = stiffness_matrix(fr);
  const Vector m = fr.masses;
  const Matrix d = 10.0 * k + 10.0 * biharmonic_matrix(fr);
  const double dt = 1e-3;
  const Vector f = random_vector(8, 10);
  const Vector oracle = bordered_response_oracle(k, m, d, dt, f);
  for (double c : {0.1, 1.0, 10.0}) {
    const Vector v = solve_zero_mean_response(k, d, dt, f, ZeroMeanContext(m, c));
    EXPECT_LE((v - oracle).norm(), 1e-8 * oracle.norm()) << "c = " << c;
    EXPECT_NEAR(m.dot(v), 0.0, 1e-13 * v.norm());
  }
}

TEST(Linsolve, ZeroMeanResponseIgnoresConstantLoads) {
  const auto pts = jittered_polygon(10, 12);
  const FrozenFrame fr = build_frame(pts);
  const Matrix k = stiffness_matrix(fr);
  const ZeroMeanContext ctx(fr.masses);
  const ZeroMeanResponseSolver solver(hminus1_metric(k, ctx) + 1e-3 * k, ctx);
  const Vector f = random_vector(10, 13);
  EXPECT_LE((solver.solve(f) - solver.solve(Vector(f + 3.0 * fr.masses))).norm(), 1e-10 * solver.solve(f).norm());
  EXPECT_LE(solver.solve(fr.masses).norm(), 1e-10);
}

TEST(Linsolve, IndefiniteStabilizedMetricIsSingularBorderedSystem) {
  Matrix bad = -Matrix::Identity(5, 5);
  try {
    ZeroMeanResponseSolver s(bad, ZeroMeanContext(Vector::Ones(5)));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::SingularBorderedSystem);
  }
}
