#pragma once

#include <optional>

#include "dualray/model.hpp"

namespace dualray {

/// A warm-start ray: boundary point y_bar, directions (mu_tilde, eta_tilde),
/// gain beta and scale c. The warm start is lambda0 = c * mu_tilde.
struct FgorRay {
  Vec y_bar;
  Vec mu_tilde;
  Vec eta_tilde;
  double beta = 1.0;
  double c = 0.0;

  Vec lambda0() const { return c * mu_tilde; }
};

/// Alternating vertex: block i is +a*1 for odd i and -a*1 for even i (1-based).
Vec consensus_boundary_point(int m, int n, double a);

struct RayDirection {
  Vec mu_tilde;
  Vec eta_tilde;
};

/// mu = (A y_bar - b) / beta and eta = A' mu. Returns the pair when eta lies
/// in the normal cone of the m-fold box at y_bar, and nothing otherwise.
/// Throws DomainError when y_bar is not on the boundary of the product box.
std::optional<RayDirection> solve_relaxed_feasibility(const ChainCoupling& coupling, const BoxSet& box,
                                                      const Vec& y_bar, double beta);

/// Sign test at a box vertex: p_j * sign(x_j) >= 0 for every j, zeros allowed.
/// Accepts stacked vectors whose length is a multiple of the box dimension.
bool normal_cone_contains(const BoxSet& box, const Vec& vertex, const Vec& p);

/// Normal-cone test at any boundary point of the stacked box: coordinates at
/// +-a need a matching sign, interior coordinates need p_j = 0.
bool normal_cone_contains_boundary(const BoxSet& box, const Vec& y, const Vec& p);

/// c * mu_tilde; stores c in the ray.
Vec warm_start(FgorRay& ray, double c);

/// ||y - y_bar||_inf <= tol.
bool rfgor_member(const Vec& y, const Vec& y_bar, double tol);

/// 500 * max(1, 1 / ||mu_tilde||_inf).
double default_warm_start_scale(const Vec& mu_tilde);

/// Ray at the alternating vertex for a consensus problem, with the default c.
FgorRay consensus_ray(const ConsensusProblem& problem, double beta = 1.0);

}  // namespace dualray
