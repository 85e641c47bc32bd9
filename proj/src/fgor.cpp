#include "dualray/fgor.hpp"

#include <algorithm>
#include <cmath>

#include "dualray/errors.hpp"

namespace dualray {

Vec consensus_boundary_point(int m, int n, double a) {
  if (m < 2) throw DomainError("boundary point needs at least two agents");
  if (n < 1) throw DomainError("boundary point needs a positive block size");
  if (!(a > 0.0)) throw DomainError("boundary point needs a positive radius");
  Vec y(static_cast<Eigen::Index>(m) * n);
  for (int i = 0; i < m; ++i) block_of(y, i, n).setConstant(i % 2 == 0 ? a : -a);
  return y;
}

bool normal_cone_contains(const BoxSet& box, const Vec& vertex, const Vec& p) {
  if (vertex.size() != p.size() || vertex.size() % box.dim() != 0) {
    throw ShapeError("normal cone test: shapes differ");
  }
  const double a = box.radius();
  for (Eigen::Index j = 0; j < vertex.size(); ++j) {
    if (std::abs(vertex[j]) != a) throw DomainError("normal cone test: point is not a box vertex");
  }
  for (Eigen::Index j = 0; j < vertex.size(); ++j) {
    if (vertex[j] > 0.0 ? p[j] < 0.0 : p[j] > 0.0) return false;
  }
  return true;
}

bool normal_cone_contains_boundary(const BoxSet& box, const Vec& y, const Vec& p) {
  if (y.size() != p.size() || y.size() % box.dim() != 0) {
    throw ShapeError("normal cone test: shapes differ");
  }
  const double a = box.radius();
  for (Eigen::Index j = 0; j < y.size(); ++j) {
    if (y[j] == a) {
      if (p[j] < 0.0) return false;
    } else if (y[j] == -a) {
      if (p[j] > 0.0) return false;
    } else if (p[j] != 0.0) {
      return false;
    }
  }
  return true;
}

std::optional<RayDirection> solve_relaxed_feasibility(const ChainCoupling& coupling, const BoxSet& box,
                                                      const Vec& y_bar, double beta) {
  if (!(beta > 0.0)) throw DomainError("relaxed feasibility: beta must be positive");
  if (y_bar.size() != coupling.cols() || coupling.block() != box.dim()) {
    throw ShapeError("relaxed feasibility: y_bar does not match the coupling");
  }
  const double a = box.radius();
  const double peak = y_bar.cwiseAbs().maxCoeff();
  if (peak != a) throw DomainError("relaxed feasibility: y_bar is not on the boundary");
  RayDirection dir;
  dir.mu_tilde = (coupling.apply(y_bar) - coupling.rhs()) / beta;
  dir.eta_tilde = coupling.adjoint(dir.mu_tilde);
  if (!normal_cone_contains_boundary(box, y_bar, dir.eta_tilde)) return std::nullopt;
  return dir;
}

Vec warm_start(FgorRay& ray, double c) {
  if (!(c > 0.0)) throw DomainError("warm start scale must be positive");
  ray.c = c;
  return ray.lambda0();
}

bool rfgor_member(const Vec& y, const Vec& y_bar, double tol) {
  if (y.size() != y_bar.size()) throw ShapeError("membership test: shapes differ");
  return (y - y_bar).cwiseAbs().maxCoeff() <= tol;
}

double default_warm_start_scale(const Vec& mu_tilde) {
  const double peak = mu_tilde.cwiseAbs().maxCoeff();
  if (!(peak > 0.0)) throw DomainError("warm start: zero ray direction");
  return 500.0 * std::max(1.0, 1.0 / peak);
}

FgorRay consensus_ray(const ConsensusProblem& problem, double beta) {
  const ChainCoupling coupling = problem.coupling();
  FgorRay ray;
  ray.beta = beta;
  ray.y_bar = consensus_boundary_point(problem.m(), problem.n(), problem.box().radius());
  auto dir = solve_relaxed_feasibility(coupling, problem.box(), ray.y_bar, beta);
  if (!dir) throw DomainError("alternating vertex failed the normal-cone test");
  ray.mu_tilde = std::move(dir->mu_tilde);
  ray.eta_tilde = std::move(dir->eta_tilde);
  ray.c = default_warm_start_scale(ray.mu_tilde);
  return ray;
}

}  // namespace dualray
