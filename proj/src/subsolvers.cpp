#include "dualray/subsolvers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "dualray/errors.hpp"

namespace dualray {

namespace {

constexpr long kIterationCap = 1000000;

double qp_value(const Mat& P, const Vec& c, const Vec& y) { return y.dot(P * y) + c.dot(y); }

void check_qp_shapes(const Mat& P, const Vec& c, const BoxSet& box) {
  if (P.rows() != P.cols() || P.rows() != c.size() || c.size() != box.dim()) {
    throw ShapeError("box QP: P, c and box dimensions differ");
  }
}

bool is_diagonal(const Mat& P) {
  for (Eigen::Index j = 0; j < P.cols(); ++j)
    for (Eigen::Index i = 0; i < P.rows(); ++i)
      if (i != j && P(i, j) != 0.0) return false;
  return true;
}

Vec diagonal_clip(const Mat& P, const Vec& c, const BoxSet& box) {
  const double a = box.radius();
  Vec y(c.size());
  for (Eigen::Index j = 0; j < c.size(); ++j) {
    const double p = P(j, j);
    if (p > 0.0) {
      y[j] = std::clamp(-c[j] / (2.0 * p), -a, a);
    } else if (c[j] > 0.0) {
      y[j] = -a;
    } else if (c[j] < 0.0) {
      y[j] = a;
    } else {
      y[j] = 0.0;
    }
  }
  return y;
}

// Newton step on the coordinates not held at a bound by the gradient.
bool free_set_newton(const Mat& P, const Vec& c, const BoxSet& box, Vec& y) {
  const double a = box.radius();
  const Vec g = 2.0 * (P * y) + c;
  std::vector<Eigen::Index> free;
  for (Eigen::Index j = 0; j < y.size(); ++j) {
    const bool held = (y[j] >= a && g[j] <= 0.0) || (y[j] <= -a && g[j] >= 0.0);
    if (!held) free.push_back(j);
  }
  if (free.empty()) return false;
  const auto nf = static_cast<Eigen::Index>(free.size());
  Mat Pff(nf, nf);
  Vec rhs(nf);
  for (Eigen::Index r = 0; r < nf; ++r) {
    for (Eigen::Index s = 0; s < nf; ++s) Pff(r, s) = P(free[r], free[s]);
    // g_F = 2 P_FF y_F + (2 P_FA y_A + c_F); set to zero.
    double fixed = c[free[r]];
    for (Eigen::Index j = 0; j < y.size(); ++j) {
      if (std::find(free.begin(), free.end(), j) == free.end()) fixed += 2.0 * P(free[r], j) * y[j];
    }
    rhs[r] = -fixed / 2.0;
  }
  Eigen::LDLT<Mat> ldlt(Pff);
  if (ldlt.info() != Eigen::Success) return false;
  Vec yf = ldlt.solve(rhs);
  if (!yf.allFinite()) return false;
  Vec candidate = y;
  for (Eigen::Index r = 0; r < nf; ++r) candidate[free[r]] = std::clamp(yf[r], -a, a);
  if (qp_value(P, c, candidate) <= qp_value(P, c, y)) {
    y = candidate;
    return true;
  }
  return false;
}

}  // namespace

double box_qp_residual(const Mat& P, const Vec& c, const BoxSet& box, const Vec& y) {
  const Vec g = 2.0 * (P * y) + c;
  return (y - box.project(y - g)).cwiseAbs().maxCoeff();
}

Vec minimize_box_qp(const Mat& P, const Vec& c, const BoxSet& box, double tol, const Vec* warm_start,
                    long max_iter) {
  check_qp_shapes(P, c, box);
  if (!(tol > 0.0)) throw DomainError("box QP: tolerance must be positive");
  if (is_diagonal(P)) {
    if ((P.diagonal().array() < 0.0).any()) throw DomainError("box QP: P is not positive semidefinite");
    return diagonal_clip(P, c, box);
  }

  Eigen::SelfAdjointEigenSolver<Mat> eig(P, Eigen::EigenvaluesOnly);
  const double lmax = eig.eigenvalues().maxCoeff();
  const double lmin = eig.eigenvalues().minCoeff();
  if (lmin < -1e-10 * std::max(1.0, lmax)) throw DomainError("box QP: P is not positive semidefinite");
  if (max_iter <= 0) {
    const double cond = lmin > 0.0 ? lmax / lmin : static_cast<double>(kIterationCap);
    const double budget = 100.0 * static_cast<double>(P.rows()) * cond;
    max_iter = static_cast<long>(std::min(budget, static_cast<double>(kIterationCap)));
    max_iter = std::max(max_iter, 1000L);
  }

  Vec y = warm_start != nullptr && warm_start->size() == c.size() ? box.project(*warm_start)
                                                                  : Vec(Vec::Zero(c.size()));
  const double step = 1.0 / (2.0 * lmax);
  double residual = box_qp_residual(P, c, box, y);
  long iter = 0;
  while (residual > tol) {
    if (iter >= max_iter) {
      throw SolverError("box QP did not converge in " + std::to_string(max_iter) + " iterations", residual);
    }
    free_set_newton(P, c, box, y);
    residual = box_qp_residual(P, c, box, y);
    if (residual <= tol) break;
    for (int inner = 0; inner < 10 && iter < max_iter; ++inner, ++iter) {
      y = box.project(y - step * (2.0 * (P * y) + c));
    }
    residual = box_qp_residual(P, c, box, y);
  }
  return y;
}

Vec minimize_concave_box(const Mat& P, const Vec& c, const BoxSet& box) {
  check_qp_shapes(P, c, box);
  const double a = box.radius();
  const auto n = static_cast<int>(c.size());
  if (is_diagonal(P)) {
    // v_j^2 = a^2 is fixed, so only the sign of c_j matters; c_j = 0 ties to -a.
    Vec v(n);
    for (int j = 0; j < n; ++j) v[j] = c[j] < 0.0 ? a : -a;
    return v;
  }
  if (n > 20) throw CapacityError("concave box minimization: n = " + std::to_string(n) + " exceeds 20");

  // Gray-code walk over all 2^n vertices with O(n) updates per flip.
  // Code bit (n-1-j) is set when v_j = +a, so smaller codes are lexicographically smaller.
  Vec v = Vec::Constant(n, -a);
  Vec Pv = P * v;
  double value = v.dot(Pv) + c.dot(v);
  const double scale = std::max(1.0, P.cwiseAbs().sum() * a * a + c.cwiseAbs().sum() * a);
  const double tie_tol = 1e-12 * scale;
  std::uint32_t code = 0;
  std::uint32_t best_code = 0;
  double best_value = value;
  const std::uint32_t total = 1u << n;
  for (std::uint32_t k = 1; k < total; ++k) {
    const int bit = __builtin_ctz(k);
    const int j = n - 1 - bit;
    const double vj = v[j];
    value += -4.0 * vj * Pv[j] + 4.0 * vj * vj * P(j, j) - 2.0 * vj * c[j];
    Pv -= 2.0 * vj * P.col(j);
    v[j] = -vj;
    code ^= 1u << bit;
    if (value < best_value - tie_tol || (value <= best_value + tie_tol && code < best_code)) {
      best_value = std::min(value, best_value);
      best_code = code;
    }
  }
  Vec best(n);
  for (int j = 0; j < n; ++j) best[j] = (best_code >> (n - 1 - j)) & 1u ? a : -a;
  return best;
}

void tilted_quadratic(const TiltedSubproblem& sub, Mat& P, Vec& c) {
  if (sub.tilt.size() != sub.box.dim() || objective_dim(sub.objective) != sub.box.dim()) {
    throw ShapeError("tilted subproblem: tilt, objective and box dimensions differ");
  }
  if (const auto* q = std::get_if<QuadraticObjective>(&sub.objective)) {
    const double w = sub.weight * q->scale();
    P = w * q->P();
    c = w * q->q() + sub.tilt;
  } else {
    const auto& ls = std::get<LeastSquaresObjective>(sub.objective);
    P = sub.weight * ls.gram();
    c = -2.0 * sub.weight * ls.moment() + sub.tilt;
  }
}

Vec agent_minimize(const TiltedSubproblem& sub, double tol, const Vec* warm_start) {
  Mat P;
  Vec c;
  tilted_quadratic(sub, P, c);
  if (const auto* q = std::get_if<QuadraticObjective>(&sub.objective)) {
    switch (q->convexity()) {
      case Convexity::kStrictlyConvex: return minimize_box_qp(P, c, sub.box, tol, warm_start);
      case Convexity::kConcave: return minimize_concave_box(P, c, sub.box);
      case Convexity::kIndefinite: throw DomainError("indefinite quadratic agents are not supported");
    }
  }
  return minimize_box_qp(P, c, sub.box, tol, warm_start);
}

LeastSquaresObjective minibatch_view(const LeastSquaresObjective& obj, const std::vector<int>& indices) {
  if (indices.empty()) throw DomainError("minibatch: no indices");
  Mat X(static_cast<Eigen::Index>(indices.size()), obj.dim());
  Vec t(static_cast<Eigen::Index>(indices.size()));
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const int j = indices[r];
    if (j < 0 || j >= obj.samples()) {
      throw DomainError("minibatch: index " + std::to_string(j) + " outside [0, " +
                        std::to_string(obj.samples()) + ")");
    }
    X.row(static_cast<Eigen::Index>(r)) = obj.features().row(j);
    t[static_cast<Eigen::Index>(r)] = obj.targets()[j];
  }
  return LeastSquaresObjective(std::move(X), std::move(t));
}

std::vector<int> sample_minibatch(int N, int n0, std::mt19937_64& rng, Sampling mode) {
  if (n0 < 1 || N < 1) throw DomainError("minibatch: sizes must be positive");
  std::vector<int> out;
  if (mode == Sampling::kWithReplacement) {
    std::uniform_int_distribution<int> pick(0, N - 1);
    for (int r = 0; r < n0; ++r) out.push_back(pick(rng));
  } else {
    if (n0 > N) throw DomainError("minibatch: batch larger than the shard");
    std::vector<int> pool(static_cast<std::size_t>(N));
    std::iota(pool.begin(), pool.end(), 0);
    for (int r = 0; r < n0; ++r) {
      std::uniform_int_distribution<int> pick(r, N - 1);
      std::swap(pool[static_cast<std::size_t>(r)], pool[static_cast<std::size_t>(pick(rng))]);
    }
    out.assign(pool.begin(), pool.begin() + n0);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace dualray
