#include "dualray/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dualray/errors.hpp"
#include "dualray/subsolvers.hpp"

namespace dualray {

const char* to_string(OracleMethod method) {
  switch (method) {
    case OracleMethod::kDenseQp: return "dense-QP";
    case OracleMethod::kGrid: return "grid";
    case OracleMethod::kVertexEnum: return "vertex-enum";
  }
  return "unknown";
}

ConsensusQuadratic consensus_quadratic(const ConsensusProblem& problem) {
  const int n = problem.n();
  const double w = problem.weight();
  ConsensusQuadratic out{Mat::Zero(n, n), Vec::Zero(n), 0.0};
  for (const auto& f : problem.agents()) {
    if (const auto* q = std::get_if<QuadraticObjective>(&f)) {
      out.H += w * q->scale() * q->P();
      out.c += w * q->scale() * q->q();
      out.r += w * q->offset();
    } else {
      const auto& ls = std::get<LeastSquaresObjective>(f);
      out.H += w * ls.gram();
      out.c -= 2.0 * w * ls.moment();
      out.r += w * ls.target_energy();
    }
  }
  return out;
}

namespace {

OracleResult finish(const ConsensusProblem& problem, Vec z, OracleMethod method, double resolution,
                    double error_bound) {
  OracleResult out;
  out.f_star = problem.consensus_objective(z);
  out.y_star = problem.replicate(z);
  out.z_star = std::move(z);
  out.method = method;
  out.resolution = resolution;
  out.error_bound = error_bound;
  return out;
}

OracleResult grid_search(const ConsensusProblem& problem, const ConsensusQuadratic& Q, const OracleOptions& opt) {
  const int n = problem.n();
  const double a = problem.box().radius();
  if (n > 3) throw CapacityError("grid oracle supports n <= 3, got " + std::to_string(n));
  const double res = opt.resolution > 0.0 ? opt.resolution : 1e-3 * a;
  const auto per_axis = static_cast<std::int64_t>(std::floor(2.0 * a / res + 1e-9)) + 1;
  std::int64_t total = 1;
  for (int j = 0; j < n; ++j) {
    if (total > opt.max_points / per_axis) {
      throw CapacityError("grid oracle: more than " + std::to_string(opt.max_points) + " points");
    }
    total *= per_axis;
  }
  auto coord = [&](std::int64_t i) { return i == per_axis - 1 ? a : -a + res * static_cast<double>(i); };
  Vec z(n);
  Vec best(n);
  double best_val = std::numeric_limits<double>::infinity();
  double max_grad = 0.0;
  for (std::int64_t idx = 0; idx < total; ++idx) {
    std::int64_t rest = idx;
    for (int j = 0; j < n; ++j) {
      z[j] = coord(rest % per_axis);
      rest /= per_axis;
    }
    const Vec Hz = Q.H * z;
    const double val = z.dot(Hz) + Q.c.dot(z);
    max_grad = std::max(max_grad, (2.0 * Hz + Q.c).norm());
    if (val < best_val) {
      best_val = val;
      best = z;
    }
  }
  const double bound = 1.5 * max_grad * res * std::sqrt(static_cast<double>(n));
  return finish(problem, std::move(best), OracleMethod::kGrid, res, bound);
}

}  // namespace

OracleResult brute_force_primal(const ConsensusProblem& problem, const OracleOptions& options) {
  const ConsensusQuadratic Q = consensus_quadratic(problem);
  OracleMethod method;
  if (options.method) {
    method = *options.method;
  } else {
    const Convexity kind = classify_hessian(Q.H);
    method = kind == Convexity::kStrictlyConvex ? OracleMethod::kDenseQp
             : kind == Convexity::kConcave      ? OracleMethod::kVertexEnum
                                                : OracleMethod::kGrid;
  }
  switch (method) {
    case OracleMethod::kDenseQp: {
      constexpr double kTol = 1e-12;
      if (classify_hessian(Q.H) != Convexity::kStrictlyConvex) {
        throw DomainError("dense-QP oracle needs a positive definite consensus Hessian");
      }
      return finish(problem, minimize_box_qp(Q.H, Q.c, problem.box(), kTol), method, kTol, 0.0);
    }
    case OracleMethod::kVertexEnum: {
      if (classify_hessian(Q.H) != Convexity::kConcave) {
        throw DomainError("vertex oracle needs a negative semidefinite consensus Hessian");
      }
      return finish(problem, minimize_concave_box(Q.H, Q.c, problem.box()), method, 0.0, 0.0);
    }
    case OracleMethod::kGrid: return grid_search(problem, Q, options);
  }
  throw DomainError("unknown oracle method");
}

double lipschitz_conjugate_bound(const BoxSet& box, int copies) {
  if (copies < 1) throw DomainError("copies must be positive");
  const double ambient = static_cast<double>(box.dim()) * copies;
  // sqrt(ambient) * (a * sqrt(ambient)), written without the roots so it is exact.
  return box.radius() * ambient;
}

double lipschitz_dual_bound(const ChainCoupling& coupling, double L) { return coupling.spectral_norm_sq() * L; }

LipschitzSample empirical_dual_lipschitz(const ConsensusProblem& problem, int pairs, double radius,
                                         std::mt19937_64& rng, double tol) {
  const ChainCoupling A = problem.coupling();
  std::uniform_real_distribution<double> u(-radius, radius);
  auto draw = [&] {
    Vec v(A.rows());
    for (Eigen::Index j = 0; j < v.size(); ++j) v[j] = u(rng);
    return v;
  };
  LipschitzSample out;
  for (int p = 0; p < pairs; ++p) {
    const Vec l1 = draw();
    const Vec l2 = draw();
    const double dl = (l1 - l2).norm();
    if (dl == 0.0) continue;
    const Vec s1 = dual_value_and_subgradient(problem, l1, tol).s;
    const Vec s2 = dual_value_and_subgradient(problem, l2, tol).s;
    out.max_ratio = std::max(out.max_ratio, (s1 - s2).norm() / dl);
    ++out.pairs;
  }
  return out;
}

double finite_diff_check(const ConsensusProblem& problem, const Vec& lambda, double h, double tol) {
  if (!(h > 0.0)) throw DomainError("finite difference step must be positive");
  const DualEvaluation base = dual_value_and_subgradient(problem, lambda, tol);
  double worst = 0.0;
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    Vec lp = lambda;
    Vec lm = lambda;
    lp[i] += h;
    lm[i] -= h;
    const double fd = (dual_value_and_subgradient(problem, lp, tol).g - dual_value_and_subgradient(problem, lm, tol).g) /
                      (2.0 * h);
    worst = std::max(worst, std::abs(fd + base.s[i]));
  }
  return worst;
}

double duality_gap(const RunTrace& trace, const OracleResult& oracle) {
  if (trace.records.empty()) throw DomainError("duality gap of an empty trace");
  return oracle.f_star - trace.records.back().g_val;
}

double best_dual_value(const RunTrace& trace) {
  if (trace.records.empty()) throw DomainError("best dual value of an empty trace");
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& r : trace.records) best = std::max(best, r.g_val);
  return best;
}

std::vector<RayGradientCheck> ray_gradient_constancy(const ConsensusProblem& problem, const FgorRay& ray,
                                                     const std::vector<double>& scales, double member_tol,
                                                     double tol) {
  std::vector<RayGradientCheck> out;
  for (double c : scales) {
    const DualEvaluation ev = dual_value_and_subgradient(problem, c * ray.mu_tilde, tol);
    RayGradientCheck chk;
    chk.c = c;
    chk.in_region = rfgor_member(ev.y, ray.y_bar, member_tol);
    chk.error = (ev.s - ray.beta * ray.mu_tilde).cwiseAbs().maxCoeff();
    out.push_back(chk);
  }
  return out;
}

}  // namespace dualray
