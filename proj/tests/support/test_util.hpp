#pragma once

#include <limits>
#include <random>
#include <vector>

#include "dualray/model.hpp"

namespace dualray::testing {

inline Vec random_vec(std::mt19937_64& rng, int n, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Vec v(n);
  for (int i = 0; i < n; ++i) v[i] = u(rng);
  return v;
}

inline Mat random_spd(std::mt19937_64& rng, int n, double shift = 0.5) {
  Mat B(n, n);
  std::normal_distribution<double> g;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) B(i, j) = g(rng);
  return B * B.transpose() / n + shift * Mat::Identity(n, n);
}

// Enumerates every face pattern (free, lower, upper) per coordinate, solves
// the reduced stationarity system and keeps the best feasible point.
inline Vec face_enumeration_oracle(const Mat& P, const Vec& c, double a) {
  const int n = static_cast<int>(c.size());
  int patterns = 1;
  for (int j = 0; j < n; ++j) patterns *= 3;
  Vec best;
  double best_val = std::numeric_limits<double>::infinity();
  for (int code = 0; code < patterns; ++code) {
    Vec y = Vec::Zero(n);
    std::vector<int> free;
    int rest = code;
    for (int j = 0; j < n; ++j) {
      const int s = rest % 3;
      rest /= 3;
      if (s == 0) free.push_back(j);
      else y[j] = s == 1 ? -a : a;
    }
    if (!free.empty()) {
      const int nf = static_cast<int>(free.size());
      Mat H(nf, nf);
      Vec r(nf);
      for (int i = 0; i < nf; ++i) {
        r[i] = -c[free[i]];
        for (int k = 0; k < nf; ++k) H(i, k) = 2 * P(free[i], free[k]);
        for (int j = 0; j < n; ++j) r[i] -= 2 * P(free[i], j) * y[j];
      }
      Vec yf = H.colPivHouseholderQr().solve(r);
      for (int i = 0; i < nf; ++i) y[free[i]] = yf[i];
    }
    if (y.cwiseAbs().maxCoeff() > a + 1e-12) continue;
    const double val = y.dot(P * y) + c.dot(y);
    if (val < best_val) {
      best_val = val;
      best = y;
    }
  }
  return best;
}

inline ConsensusProblem random_quadratic_problem(std::mt19937_64& rng, int m, int n, double a,
                                                double q_range = 1.0, double shift = 0.5) {
  std::vector<LocalObjective> agents;
  for (int i = 0; i < m; ++i) {
    agents.emplace_back(QuadraticObjective(random_spd(rng, n, shift), random_vec(rng, n, -q_range, q_range), 1.0,
                                           Convexity::kStrictlyConvex));
  }
  return ConsensusProblem(std::move(agents), BoxSet(a, n));
}

/// Block-diagonal quadratic model of f0(y) - lambda'Ay over the stacked box.
inline void joint_lagrangian(const ConsensusProblem& p, const Vec& lambda, Mat& P, Vec& c) {
  const int m = p.m(), n = p.n();
  P = Mat::Zero(m * n, m * n);
  c = -p.coupling().adjoint(lambda);
  for (int i = 0; i < m; ++i) {
    const auto& q = std::get<QuadraticObjective>(p.agent(i));
    P.block(i * n, i * n, n, n) = p.weight() * q.scale() * q.P();
    c.segment(i * n, n) += p.weight() * q.scale() * q.q();
  }
}

inline Vec vec(std::initializer_list<double> xs) {
  Vec v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

}  // namespace dualray::testing
