#include "dualray/model.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "../support/test_util.hpp"
#include "dualray/errors.hpp"

namespace dualray {
namespace {

using testing::random_spd;
using testing::random_vec;

Vec vec(std::initializer_list<double> xs) {
  Vec v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

TEST(BoxSet, RejectsNonPositiveRadius) {
  EXPECT_THROW(BoxSet(0.0, 2), DomainError);
  EXPECT_THROW(BoxSet(-1.0, 2), DomainError);
  EXPECT_THROW(BoxSet(1.0, 0), DomainError);
}

TEST(BoxSet, MembershipIsExact) {
  BoxSet box(1.0, 2);
  EXPECT_TRUE(box.contains(vec({1.0, -1.0})));
  EXPECT_FALSE(box.contains(vec({std::nextafter(1.0, 2.0), 0.0})));
  EXPECT_TRUE(box.on_boundary(vec({1.0, 0.3})));
  EXPECT_FALSE(box.on_boundary(vec({0.5, 0.3})));
  EXPECT_TRUE(box.is_vertex(vec({1.0, -1.0})));
  EXPECT_FALSE(box.is_vertex(vec({1.0, 0.0})));
}

TEST(BoxSet, ProjectionIsIdempotent) {
  std::mt19937_64 rng(7);
  BoxSet box(0.7, 5);
  for (int t = 0; t < 100; ++t) {
    Vec z = random_vec(rng, 5, -3.0, 3.0);
    Vec p = box.project(z);
    EXPECT_TRUE(box.contains(p));
    EXPECT_EQ(box.project(p), p);
  }
}

TEST(QuadraticObjective, TagMustMatchEigenvalues) {
  Mat P = Mat::Identity(2, 2);
  Vec q = Vec::Zero(2);
  EXPECT_NO_THROW(QuadraticObjective(P, q, 1.0, Convexity::kStrictlyConvex));
  EXPECT_THROW(QuadraticObjective(P, q, 1.0, Convexity::kConcave), DomainError);
  EXPECT_NO_THROW(QuadraticObjective(-P, q, 1.0, Convexity::kConcave));
  Mat S = P;
  S(1, 1) = -1.0;
  EXPECT_THROW(QuadraticObjective(S, q, 1.0, Convexity::kStrictlyConvex), DomainError);
  EXPECT_NO_THROW(QuadraticObjective(S, q, 1.0, Convexity::kIndefinite));
}

TEST(QuadraticObjective, RejectsBadShapes) {
  EXPECT_THROW(QuadraticObjective(Mat::Identity(2, 2), Vec::Zero(3), 1.0, Convexity::kStrictlyConvex),
               ShapeError);
}

TEST(QuadraticObjective, ValueAndGradient) {
  Mat P(2, 2);
  P << 2.0, 0.5, 0.5, 1.0;
  QuadraticObjective f(P, vec({1.0, -1.0}), 0.25, Convexity::kStrictlyConvex, 3.0);
  Vec y = vec({0.3, -0.7});
  EXPECT_DOUBLE_EQ(f.value(y), 0.25 * (y.dot(P * y) + 0.3 + 0.7) + 3.0);
  Vec g = f.gradient(y);
  for (int i = 0; i < 2; ++i) {
    Vec e = Vec::Zero(2);
    e[i] = 1e-6;
    EXPECT_NEAR(g[i], (f.value(y + e) - f.value(y - e)) / 2e-6, 1e-8);
  }
}

TEST(QuadraticObjective, GradientVanishesAtUnconstrainedMinimizer) {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 20; ++t) {
    const int n = 1 + t % 6;
    QuadraticObjective f(random_spd(rng, n), random_vec(rng, n, -5, 5), 0.2, Convexity::kStrictlyConvex);
    EXPECT_LE(f.gradient(f.unconstrained_minimizer()).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(QuadraticObjective, DiagonalDetection) {
  Mat D = Vec(vec({1.0, 2.0})).asDiagonal();
  EXPECT_TRUE(QuadraticObjective(D, Vec::Zero(2), 1.0, Convexity::kStrictlyConvex).is_diagonal());
  D(0, 1) = D(1, 0) = 0.1;
  EXPECT_FALSE(QuadraticObjective(D, Vec::Zero(2), 1.0, Convexity::kStrictlyConvex).is_diagonal());
}

TEST(LeastSquaresObjective, NonNegativeAndGradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(3);
  Mat X(30, 4);
  for (int j = 0; j < 30; ++j) X.row(j) = random_vec(rng, 4).transpose();
  X.col(0).setOnes();
  LeastSquaresObjective f(X, random_vec(rng, 30));
  for (int t = 0; t < 10; ++t) {
    Vec y = random_vec(rng, 4, -2, 2);
    EXPECT_GE(f.value(y), 0.0);
    Vec g = f.gradient(y);
    EXPECT_TRUE(g.isApprox((2.0 / 30) * X.transpose() * (X * y - f.targets()), 1e-12));
    for (int i = 0; i < 4; ++i) {
      Vec e = Vec::Zero(4);
      e[i] = 1e-5;
      const double fd = (f.value(y + e) - f.value(y - e)) / 2e-5;
      EXPECT_LE(std::abs(fd - g[i]), 1e-6 * std::max(1.0, std::abs(g[i])));
    }
    // Gram form agrees with the direct sum.
    const double via_gram = y.dot(f.gram() * y) - 2 * f.moment().dot(y) + f.target_energy();
    EXPECT_NEAR(via_gram, f.value(y), 1e-12);
  }
}

TEST(ChainCoupling, ApplyExamples) {
  EXPECT_EQ(ChainCoupling(2, 1).apply(vec({1, -1})), vec({2}));
  EXPECT_EQ(ChainCoupling(3, 1).apply(vec({1, -1, 1})), vec({2, -2}));
}

TEST(ChainCoupling, AdjointExamples) {
  EXPECT_EQ(ChainCoupling(2, 1).adjoint(vec({2})), vec({2, -2}));
  EXPECT_EQ(ChainCoupling(3, 1).adjoint(vec({2, -2})), vec({2, -4, 2}));
}

TEST(ChainCoupling, ShapeErrors) {
  ChainCoupling A(3, 2);
  EXPECT_THROW(A.apply(Vec::Zero(5)), ShapeError);
  EXPECT_THROW(A.adjoint(Vec::Zero(6)), ShapeError);
  EXPECT_THROW(A.gram_solve(Vec::Zero(3)), ShapeError);
  EXPECT_THROW(ChainCoupling(1, 2), DomainError);
}

TEST(ChainCoupling, MatchesDenseMatrix) {
  std::mt19937_64 rng(5);
  for (int m = 2; m <= 6; ++m) {
    for (int n = 1; n <= 4; ++n) {
      ChainCoupling A(m, n);
      Mat D = A.dense();
      for (int t = 0; t < 5; ++t) {
        Vec y = random_vec(rng, m * n);
        Vec l = random_vec(rng, (m - 1) * n);
        EXPECT_LE((A.apply(y) - D * y).cwiseAbs().maxCoeff(), 1e-12);
        EXPECT_LE((A.adjoint(l) - D.transpose() * l).cwiseAbs().maxCoeff(), 1e-12);
      }
    }
  }
}

TEST(ChainCoupling, DenseStructure) {
  Mat D = ChainCoupling(3, 2).dense();
  Mat expected(4, 6);
  expected << 1, 0, -1, 0, 0, 0,
              0, 1, 0, -1, 0, 0,
              0, 0, 1, 0, -1, 0,
              0, 0, 0, 1, 0, -1;
  EXPECT_EQ(D, expected);
}

TEST(ChainCoupling, AdjointIdentity) {
  std::mt19937_64 rng(9);
  for (int t = 0; t < 200; ++t) {
    const int m = 2 + t % 9;
    const int n = 1 + t % 5;
    ChainCoupling A(m, n);
    Vec y = random_vec(rng, m * n, -3, 3);
    Vec l = random_vec(rng, (m - 1) * n, -3, 3);
    EXPECT_NEAR(A.apply(y).dot(l), y.dot(A.adjoint(l)), 1e-12);
  }
}

TEST(ChainCoupling, KernelIsConsensus) {
  std::mt19937_64 rng(10);
  ChainCoupling A(5, 3);
  Vec z = random_vec(rng, 3);
  Vec y(15);
  for (int i = 0; i < 5; ++i) y.segment(3 * i, 3) = z;
  EXPECT_TRUE(A.apply(y).isZero(0.0));
  y[7] += 1e-9;
  EXPECT_FALSE(A.apply(y).isZero(0.0));
}

TEST(ChainCoupling, GramSolveExamples) {
  EXPECT_EQ(ChainCoupling(2, 1).gram_solve(vec({4})), vec({2}));
  EXPECT_TRUE(ChainCoupling(3, 1).gram_solve(vec({1, 1})).isApprox(vec({1, 1}), 1e-15));
}

TEST(ChainCoupling, GramSolveResidual) {
  std::mt19937_64 rng(12);
  for (int m = 2; m <= 8; ++m) {
    ChainCoupling A(m, 2);
    Mat D = A.dense();
    Vec v = random_vec(rng, (m - 1) * 2);
    Vec w = A.gram_solve(v);
    EXPECT_LE((D * D.transpose() * w - v).norm(), 1e-10);
    EXPECT_LE((A.apply(A.adjoint(w)) - v).norm(), 1e-10);
  }
}

TEST(ChainCoupling, SpectralNorm) {
  EXPECT_NEAR(ChainCoupling(2, 1).spectral_norm_sq(), 2.0, 1e-8 * 2.0);
  EXPECT_NEAR(ChainCoupling(3, 1).spectral_norm_sq(), 3.0, 1e-8 * 3.0);
  EXPECT_NEAR(ChainCoupling(10, 1).spectral_norm_sq(), 2.0 + 2.0 * std::cos(std::numbers::pi / 10), 1e-6);
  for (int m = 2; m <= 12; ++m) {
    const double exact = 2.0 + 2.0 * std::cos(std::numbers::pi / m);
    EXPECT_NEAR(ChainCoupling(m, 3).spectral_norm_sq(), exact, 1e-6) << "m=" << m;
  }
}

TEST(ConsensusProblem, ValidatesAgents) {
  BoxSet box(1.0, 2);
  QuadraticObjective f(Mat::Identity(2, 2), Vec::Zero(2), 1.0, Convexity::kStrictlyConvex);
  QuadraticObjective g(Mat::Identity(3, 3), Vec::Zero(3), 1.0, Convexity::kStrictlyConvex);
  EXPECT_THROW(ConsensusProblem({f}, box), DomainError);
  EXPECT_THROW(ConsensusProblem({f, g}, box), ShapeError);
}

TEST(ConsensusProblem, ObjectiveCarriesTheAgentWeight) {
  BoxSet box(1.0, 1);
  QuadraticObjective f(Mat::Identity(1, 1), vec({1.0}), 1.0, Convexity::kStrictlyConvex);
  QuadraticObjective g(Mat::Identity(1, 1), vec({-2.0}), 1.0, Convexity::kStrictlyConvex);
  ConsensusProblem p({f, g}, box);
  Vec y = vec({0.5, -0.5});
  EXPECT_DOUBLE_EQ(p.objective(y), 0.5 * ((0.25 + 0.5) + (0.25 + 1.0)));
  EXPECT_DOUBLE_EQ(p.consensus_objective(vec({0.5})), p.objective(p.replicate(vec({0.5}))));
}

}  // namespace
}  // namespace dualray
