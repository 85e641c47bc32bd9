#include "dualray/stepsize.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "../support/test_util.hpp"
#include "dualray/errors.hpp"

namespace dualray {
namespace {

using testing::random_vec;

StepsizeConfig cfg(StepKind kind, double g0) {
  StepsizeConfig c;
  c.kind = kind;
  c.gamma0 = g0;
  return c;
}

TEST(Stepsize, Constant) {
  StepsizeRule r(cfg(StepKind::kConstant, 0.1));
  Vec z = Vec::Zero(1);
  for (int k = 1; k < 50; ++k) EXPECT_EQ(r.next(k, z, z, 0.0), 0.1);
}

TEST(Stepsize, PolyK) {
  StepsizeRule r(cfg(StepKind::kPolyK, 20.0));
  Vec z = Vec::Zero(1);
  EXPECT_EQ(r.next(4, z, z, 0.0), 5.0);
}

TEST(Stepsize, Polyak) {
  StepsizeConfig c = cfg(StepKind::kPolyak, 1.0);
  c.g_star = 0.0;
  StepsizeRule r(c);
  Vec s(1);
  s << 1.0;
  EXPECT_EQ(r.next(1, s, s, -2.0), 2.0);
  EXPECT_EQ(r.next(2, s, s, 1.0), 1e-12);
  EXPECT_FALSE(r.converged());
  EXPECT_EQ(r.next(3, s, Vec::Zero(1), -1.0), 0.0);
  EXPECT_TRUE(r.converged());
}

TEST(Stepsize, PolyakNeedsTarget) {
  EXPECT_THROW(StepsizeRule(cfg(StepKind::kPolyak, 1.0)), ConfigError);
}

TEST(Stepsize, ConfigValidation) {
  EXPECT_THROW(StepsizeRule(cfg(StepKind::kConstant, 0.0)), ConfigError);
  StepsizeConfig g = cfg(StepKind::kGeometric, 1.0);
  g.q = 1.0;
  EXPECT_THROW((StepsizeRule(g)), ConfigError);
  StepsizeConfig sd = cfg(StepKind::kStepDecay, 1.0);
  sd.stage_length = 0;
  EXPECT_THROW((StepsizeRule(sd)), ConfigError);
  EXPECT_THROW(step_kind_from_string("armijo"), ConfigError);
  EXPECT_EQ(step_kind_from_string("poly_sqrt_k"), StepKind::kPolySqrtK);
}

TEST(Stepsize, MonotoneSchedules) {
  Vec z = Vec::Zero(1);
  for (StepKind kind : {StepKind::kPolyK, StepKind::kPolySqrtK, StepKind::kGeometric}) {
    StepsizeConfig c = cfg(kind, 3.0);
    c.q = 0.9;
    StepsizeRule r(c);
    double prev = r.next(1, z, z, 0.0);
    for (int k = 2; k < 200; ++k) {
      const double g = r.next(k, z, z, 0.0);
      EXPECT_LT(g, prev);
      EXPECT_GT(g, 0.0);
      prev = g;
    }
  }
}

TEST(Stepsize, StepDecayStages) {
  StepsizeConfig c = cfg(StepKind::kStepDecay, 8.0);
  c.q = 0.5;
  c.stage_length = 5;
  StepsizeRule r(c);
  Vec z = Vec::Zero(1);
  for (int k = 1; k < 60; ++k) {
    EXPECT_EQ(r.next(k, z, z, 0.0), 8.0 * std::pow(0.5, k / 5));
  }
  double prev = r.next(1, z, z, 0.0);
  for (int k = 2; k < 60; ++k) {
    const double g = r.next(k, z, z, 0.0);
    EXPECT_LE(g, prev);
    if (k % 5 != 0) EXPECT_EQ(g, prev);
    prev = g;
  }
}

TEST(Stepsize, AdaptiveFirstCallAndGrowthCap) {
  std::mt19937_64 rng(1);
  StepsizeRule r(cfg(StepKind::kAdaptiveLocal, 0.7));
  Mat H = testing::random_spd(rng, 4, 0.3);
  Vec lam = random_vec(rng, 4);
  Vec s = H * lam;
  EXPECT_EQ(r.next(1, lam, s, 0.0), 0.7);
  double gamma_prev = 0.7;
  double theta_prev = r.theta();
  EXPECT_EQ(theta_prev, 0.0);
  for (int k = 2; k < 100; ++k) {
    lam -= gamma_prev * s;
    s = H * lam;
    const double g = r.next(k, lam, s, 0.0);
    EXPECT_LE(g, std::sqrt(1.0 + theta_prev) * gamma_prev * (1 + 1e-15));
    EXPECT_GT(g, 0.0);
    EXPECT_DOUBLE_EQ(r.theta(), g / gamma_prev);
    theta_prev = r.theta();
    gamma_prev = g;
  }
}

TEST(Stepsize, AdaptiveLocalEstimate) {
  // On a quadratic with curvature L the second term is 1/(2L).
  StepsizeRule r(cfg(StepKind::kAdaptiveLocal, 100.0));
  Vec lam0(1), lam1(1);
  lam0 << 1.0;
  lam1 << 0.5;
  r.next(1, lam0, 4.0 * lam0, 0.0);
  EXPECT_DOUBLE_EQ(r.next(2, lam1, 4.0 * lam1, 0.0), 1.0 / 8.0);
}

TEST(Stepsize, ReplayIsDeterministic) {
  std::mt19937_64 rng(2);
  std::vector<Vec> lams, ss;
  for (int k = 0; k < 30; ++k) {
    lams.push_back(random_vec(rng, 3));
    ss.push_back(random_vec(rng, 3));
  }
  StepsizeRule a(cfg(StepKind::kAdaptiveLocal, 1.0));
  StepsizeRule b(cfg(StepKind::kAdaptiveLocal, 1.0));
  for (int k = 0; k < 30; ++k) {
    EXPECT_EQ(a.next(k + 1, lams[k], ss[k], 0.0), b.next(k + 1, lams[k], ss[k], 0.0));
  }
  a.reset();
  EXPECT_EQ(a.next(1, lams[0], ss[0], 0.0), 1.0);
}

}  // namespace
}  // namespace dualray
