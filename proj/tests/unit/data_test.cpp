#include "dualray/data.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "../support/test_util.hpp"
#include "dualray/errors.hpp"
#include "dualray/logging.hpp"
#include "dualray/subsolvers.hpp"

namespace dualray {
namespace {

using testing::vec;

TEST(Csv, SingleRowWithBias) {
  Dataset d = parse_csv("1.0,2.0\n", 1, true);
  ASSERT_EQ(d.rows(), 1);
  EXPECT_EQ(Vec(d.features.row(0).transpose()), vec({1.0, 1.0}));
  EXPECT_EQ(d.targets[0], 2.0);
}

TEST(Csv, TargetColumnAnywhere) {
  Dataset d = parse_csv("x,y,t\n1,2,3\n4,5,6\n", 0, false, true);
  ASSERT_EQ(d.rows(), 2);
  EXPECT_EQ(Vec(d.features.row(1).transpose()), vec({5, 6}));
  EXPECT_EQ(d.targets, vec({1, 4}));
}

TEST(Csv, NamesTheBadCell) {
  try {
    parse_csv("1,2\n3,abc\n", 1, true);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.row(), 2);
    EXPECT_EQ(e.column(), 2);
    EXPECT_NE(std::string(e.what()).find("abc"), std::string::npos);
  }
}

TEST(Csv, RaggedAndEmpty) {
  EXPECT_THROW(parse_csv("1,2\n3\n", 1, true), ParseError);
  EXPECT_THROW(parse_csv("\n\n", 0, true), DomainError);
  EXPECT_THROW(parse_csv("1,2\n", 5, true), DomainError);
}

TEST(Csv, LoadsFromDisk) {
  const std::string path = ::testing::TempDir() + "/dualray_rows.csv";
  {
    std::ofstream out(path);
    out << "1.5,2,3\n-1,0.25,7\n";
  }
  Dataset d = load_csv(path, 2, true);
  EXPECT_EQ(d.rows(), 2);
  EXPECT_EQ(d.dim(), 3);
  EXPECT_EQ(d.targets, vec({3, 7}));
  std::remove(path.c_str());
  EXPECT_THROW(load_csv(path, 0, true), DomainError);
}

TEST(Standardize, SymmetricTriple) {
  Dataset d = parse_csv("1,10\n2,20\n3,30\n", 1, true);
  Dataset s = standardize(d);
  EXPECT_EQ(Vec(s.features.col(1)), vec({-1, 0, 1}));
  EXPECT_EQ(s.targets, vec({-1, 0, 1}));
  EXPECT_EQ(Vec(s.features.col(0)), vec({1, 1, 1}));
  EXPECT_TRUE(s.standardized);
}

TEST(Standardize, ConstantColumnFails) {
  EXPECT_THROW(standardize(parse_csv("5,1\n5,2\n5,3\n", 1, true)), DomainError);
  EXPECT_THROW(standardize(parse_csv("1,2\n", 1, true)), DomainError);
}

TEST(Standardize, MomentsAfterwards) {
  Dataset d = standardize(synthetic_valuation_dataset(276, 4));
  const double N = d.rows();
  for (int j = 1; j < d.dim(); ++j) {
    const double mean = d.features.col(j).mean();
    const double sd = std::sqrt((d.features.col(j).array() - mean).square().sum() / (N - 1));
    EXPECT_LE(std::abs(mean), 1e-10);
    EXPECT_LE(std::abs(sd - 1.0), 1e-10);
  }
  EXPECT_LE(std::abs(d.targets.mean()), 1e-10);
}

TEST(Standardize, TestSplitUsesTrainingStatistics) {
  Dataset all = synthetic_valuation_dataset(414, 4);
  Dataset train = slice_rows(all, 0, 276);
  Dataset test = slice_rows(all, 276, 414);
  StandardizationStats st;
  standardize(train, &st);
  Dataset t = apply_standardization(test, st);
  EXPECT_NEAR(t.features(0, 2), (test.features(0, 2) - st.feature_mean[2]) / st.feature_std[2], 1e-14);
}

TEST(SyntheticValuation, Shape) {
  Dataset d = synthetic_valuation_dataset(276, 1);
  EXPECT_EQ(d.rows(), 276);
  EXPECT_EQ(d.dim(), 7);
  EXPECT_TRUE((d.features.col(0).array() == 1.0).all());
}

TEST(Partition, EvenShards) {
  Dataset d = synthetic_valuation_dataset(276, 2);
  auto shards = partition_agents(d, 6);
  ASSERT_EQ(shards.size(), 6u);
  Mat stacked(276, 7);
  for (int i = 0; i < 6; ++i) {
    EXPECT_EQ(shards[i].samples(), 46);
    stacked.middleRows(46 * i, 46) = shards[i].features();
  }
  EXPECT_EQ(stacked, d.features);
}

TEST(Partition, DropsRemainderWithWarning) {
  std::string captured;
  LogSink old = set_log_sink([&](LogLevel level, const std::string& msg) {
    if (level == LogLevel::kWarning) captured = msg;
  });
  Dataset d = synthetic_valuation_dataset(10, 3);
  auto shards = partition_agents(d, 3);
  set_log_sink(old);
  ASSERT_EQ(shards.size(), 3u);
  for (const auto& s : shards) EXPECT_EQ(s.samples(), 3);
  EXPECT_NE(captured.find("drops"), std::string::npos);
  EXPECT_THROW(partition_agents(d, 11), DomainError);
}

double oracle_peak(const ConsensusProblem& p) {
  Mat P = Mat::Zero(p.n(), p.n());
  Vec c = Vec::Zero(p.n());
  for (const auto& f : p.agents()) {
    const auto& q = std::get<QuadraticObjective>(f);
    P += q.scale() * q.P();
    c += q.scale() * q.q();
  }
  return testing::face_enumeration_oracle(P, c, p.box().radius()).cwiseAbs().maxCoeff();
}

TEST(SynthQuadratic, InteriorOptimum) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    ConsensusProblem p = synth_quadratic(2, 2, 1.0, seed, OptimumRegime::kInterior);
    EXPECT_LT(oracle_peak(p), 0.8 + 1e-12);
  }
}

TEST(SynthQuadratic, BoundaryOptimum) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    ConsensusProblem p = synth_quadratic(3, 3, 2.0, seed, OptimumRegime::kBoundary);
    EXPECT_NEAR(oracle_peak(p), 2.0, 1e-8);
  }
}

TEST(SynthQuadratic, SpectrumAndScale) {
  QuadraticSynthOptions opt;
  opt.eig_min = 0.5;
  opt.condition = 100.0;
  ConsensusProblem p = synth_quadratic(4, 10, 1.0, 7, OptimumRegime::kInterior, opt);
  for (const auto& f : p.agents()) {
    const auto& q = std::get<QuadraticObjective>(f);
    Eigen::SelfAdjointEigenSolver<Mat> eig(q.P());
    EXPECT_NEAR(eig.eigenvalues().minCoeff(), 0.5, 1e-9);
    EXPECT_NEAR(eig.eigenvalues().maxCoeff(), 50.0, 1e-8);
    EXPECT_EQ(q.scale(), 0.25);
  }
}

TEST(SynthQuadratic, Deterministic) {
  ConsensusProblem a = synth_quadratic(4, 5, 1.0, 99, OptimumRegime::kInterior);
  ConsensusProblem b = synth_quadratic(4, 5, 1.0, 99, OptimumRegime::kInterior);
  for (int i = 0; i < 4; ++i) {
    const auto& qa = std::get<QuadraticObjective>(a.agent(i));
    const auto& qb = std::get<QuadraticObjective>(b.agent(i));
    EXPECT_EQ(qa.P(), qb.P());
    EXPECT_EQ(qa.q(), qb.q());
  }
}

TEST(SynthMixed, ConvexityPattern) {
  ConsensusProblem p = synth_mixed_nonconvex(10, 5, 2, 1.0, 3);
  for (int i = 0; i < 10; ++i) {
    const auto& q = std::get<QuadraticObjective>(p.agent(i));
    EXPECT_EQ(q.convexity(), i < 5 ? Convexity::kStrictlyConvex : Convexity::kConcave);
  }
  ConsensusProblem all = synth_mixed_nonconvex(3, 3, 2, 1.0, 3);
  for (const auto& f : all.agents()) {
    EXPECT_EQ(std::get<QuadraticObjective>(f).convexity(), Convexity::kStrictlyConvex);
  }
  EXPECT_THROW(synth_mixed_nonconvex(3, 0, 2, 1.0, 3), DomainError);
}

TEST(StrongDualityPreset, Objectives) {
  ConsensusProblem p = strong_duality_preset();
  Vec y = vec({0.5, -0.25});
  EXPECT_DOUBLE_EQ(evaluate(p.agent(0), y), (0.25 + 0.0625) / 16 + 0.25 + 5);
  EXPECT_DOUBLE_EQ(evaluate(p.agent(1), y), -(0.25 + 0.0625) + 0.5 + 2);
  // f0 at z = (-1, -1): ((2/16 - 2 + 5) + (-2 - 4 + 2)) / 2.
  EXPECT_DOUBLE_EQ(p.consensus_objective(vec({-1, -1})), -0.4375);
}

TEST(ConstrainRegularized, RadiusIsRootOfDbar) {
  Dataset d = synthetic_valuation_dataset(12, 5);
  auto shards = partition_agents(d, 3);
  EXPECT_EQ(constrain_regularized(shards, 4.0).box().radius(), 2.0);
  EXPECT_EQ(constrain_regularized(shards, 1.0).box().radius(), 1.0);
  const double a = constrain_regularized(shards, 2.5).box().radius();
  EXPECT_NEAR(a * a, 2.5, 1e-15);
  EXPECT_THROW(constrain_regularized(shards, 0.0), DomainError);
}

}  // namespace
}  // namespace dualray
