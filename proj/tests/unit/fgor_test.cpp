#include "dualray/fgor.hpp"

#include <gtest/gtest.h>

#include "dualray/errors.hpp"

namespace dualray {
namespace {

Vec vec(std::initializer_list<double> xs) {
  Vec v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

TEST(ConsensusBoundaryPoint, AlternatingVertex) {
  EXPECT_EQ(consensus_boundary_point(2, 1, 1.0), vec({1, -1}));
  EXPECT_EQ(consensus_boundary_point(3, 2, 2.0), vec({2, 2, -2, -2, 2, 2}));
  EXPECT_THROW(consensus_boundary_point(1, 2, 1.0), DomainError);
}

TEST(SolveRelaxedFeasibility, TwoAgents) {
  auto dir = solve_relaxed_feasibility(ChainCoupling(2, 1), BoxSet(1.0, 1), vec({1, -1}), 1.0);
  ASSERT_TRUE(dir.has_value());
  EXPECT_EQ(dir->mu_tilde, vec({2}));
  EXPECT_EQ(dir->eta_tilde, vec({2, -2}));
}

TEST(SolveRelaxedFeasibility, ThreeAgents) {
  auto dir = solve_relaxed_feasibility(ChainCoupling(3, 1), BoxSet(1.0, 1), vec({1, -1, 1}), 1.0);
  ASSERT_TRUE(dir.has_value());
  EXPECT_EQ(dir->mu_tilde, vec({2, -2}));
  EXPECT_EQ(dir->eta_tilde, vec({2, -4, 2}));
}

TEST(SolveRelaxedFeasibility, NonAlternatingVertex) {
  const Vec y = vec({1, 1, 1, -1});
  auto dir = solve_relaxed_feasibility(ChainCoupling(2, 2), BoxSet(1.0, 2), y, 1.0);
  ASSERT_TRUE(dir.has_value());
  EXPECT_EQ(dir->mu_tilde, vec({0, 2}));
  EXPECT_EQ(dir->eta_tilde, vec({0, 2, 0, -2}));
  // Brute-force sign check, coordinate by coordinate.
  for (int j = 0; j < 4; ++j) EXPECT_GE(dir->eta_tilde[j] * y[j], 0.0);
}

TEST(SolveRelaxedFeasibility, RejectsWrongSigns) {
  // Both blocks at +1 in coordinate 0 and opposite in coordinate 1, but the
  // first agent sits at -1 where eta is positive.
  auto dir = solve_relaxed_feasibility(ChainCoupling(3, 1), BoxSet(1.0, 1), vec({1, 1, -1}), 1.0);
  // mu = [0, 2], eta = [0, 2, -2]: agent 2 at +1 with eta 2 is fine, agent 3 at -1 with -2 is fine.
  ASSERT_TRUE(dir.has_value());
  auto bad = solve_relaxed_feasibility(ChainCoupling(3, 1), BoxSet(1.0, 1), vec({-1, 1, 1}), 1.0);
  // mu = [-2, 0], eta = [-2, 2, 0]: agent 3 at +1 with eta 0 passes; all signs match.
  ASSERT_TRUE(bad.has_value());
  auto face = solve_relaxed_feasibility(ChainCoupling(2, 2), BoxSet(1.0, 2), vec({1, 0.5, -1, 0.0}), 1.0);
  // eta = [2, 0.5, -2, -0.5] is nonzero at interior coordinates.
  EXPECT_FALSE(face.has_value());
}

TEST(SolveRelaxedFeasibility, RequiresBoundaryPoint) {
  EXPECT_THROW(solve_relaxed_feasibility(ChainCoupling(2, 1), BoxSet(1.0, 1), vec({0.5, -0.5}), 1.0),
               DomainError);
  EXPECT_THROW(solve_relaxed_feasibility(ChainCoupling(2, 1), BoxSet(1.0, 1), vec({1.5, -1}), 1.0),
               DomainError);
}

TEST(SolveRelaxedFeasibility, LemmaSweep) {
  for (int m = 2; m <= 10; ++m)
    for (int n = 1; n <= 8; ++n)
      for (double a : {0.5, 1.0, 3.0})
        for (double beta : {0.5, 1.0, 2.0}) {
          ChainCoupling A(m, n);
          BoxSet box(a, n);
          Vec y = consensus_boundary_point(m, n, a);
          auto dir = solve_relaxed_feasibility(A, box, y, beta);
          ASSERT_TRUE(dir.has_value()) << m << " " << n << " " << a << " " << beta;
          EXPECT_TRUE(normal_cone_contains(box, y, dir->eta_tilde));
          EXPECT_EQ(dir->eta_tilde, A.adjoint(dir->mu_tilde));
          EXPECT_EQ(dir->mu_tilde, A.apply(y) / beta);
        }
}

TEST(NormalConeContains, Examples) {
  BoxSet box(1.0, 2);
  EXPECT_TRUE(normal_cone_contains(box, vec({1, -1}), vec({2, -2})));
  EXPECT_FALSE(normal_cone_contains(box, vec({1, -1}), vec({-0.1, -2})));
  EXPECT_TRUE(normal_cone_contains(box, vec({1, 1}), vec({0, 0})));
  EXPECT_THROW(normal_cone_contains(box, vec({1, 0.5}), vec({0, 0})), DomainError);
}

TEST(WarmStart, Scaling) {
  FgorRay ray;
  ray.mu_tilde = vec({2, -2});
  EXPECT_EQ(warm_start(ray, 10.0), vec({20, -20}));
  EXPECT_EQ(ray.c, 10.0);
  ray.mu_tilde = vec({2});
  EXPECT_EQ(warm_start(ray, 1.0), vec({2}));
  ray.mu_tilde = vec({0.16});
  EXPECT_DOUBLE_EQ(warm_start(ray, 500.0)[0], 80.0);
  EXPECT_THROW(warm_start(ray, 0.0), DomainError);
}

TEST(RfgorMember, Examples) {
  Vec yb = consensus_boundary_point(3, 2, 1.0);
  EXPECT_TRUE(rfgor_member(yb, yb, 0.0));
  EXPECT_TRUE(rfgor_member(yb + Vec::Constant(6, 1e-9), yb, 1e-8));
  Vec flipped = yb;
  flipped.segment(2, 2) *= -1.0;
  EXPECT_FALSE(rfgor_member(flipped, yb, 1e-8));
}

TEST(DefaultWarmStartScale, Formula) {
  EXPECT_EQ(default_warm_start_scale(vec({2, -2})), 500.0);
  EXPECT_EQ(default_warm_start_scale(vec({0.25})), 2000.0);
}

TEST(ConsensusRay, BuildsFromProblem) {
  QuadraticObjective f(Mat::Identity(2, 2), Vec::Zero(2), 1.0, Convexity::kStrictlyConvex);
  ConsensusProblem p({f, f, f, f}, BoxSet(0.5, 2));
  FgorRay ray = consensus_ray(p, 2.0);
  EXPECT_EQ(ray.y_bar, consensus_boundary_point(4, 2, 0.5));
  EXPECT_EQ(ray.mu_tilde, p.coupling().apply(ray.y_bar) / 2.0);
  EXPECT_EQ(ray.c, 1000.0);
  EXPECT_EQ(ray.lambda0(), ray.c * ray.mu_tilde);
}

}  // namespace
}  // namespace dualray
