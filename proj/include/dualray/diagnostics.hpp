#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "dualray/engine.hpp"
#include "dualray/fgor.hpp"
#include "dualray/model.hpp"

namespace dualray {

enum class OracleMethod { kDenseQp, kGrid, kVertexEnum };

const char* to_string(OracleMethod method);

struct OracleResult {
  /// Replicated consensus minimizer (length nm) and its block z.
  Vec y_star;
  Vec z_star;
  double f_star = 0.0;
  OracleMethod method = OracleMethod::kDenseQp;
  /// Grid spacing (grid) or solver tolerance (dense QP); 0 for vertex enumeration.
  double resolution = 0.0;
  /// Bound on f_star - p*; 0 for the exact methods.
  double error_bound = 0.0;
};

/// f0 restricted to consensus points as a quadratic in z: z'Hz + c'z + r.
struct ConsensusQuadratic {
  Mat H;
  Vec c;
  double r = 0.0;
};

ConsensusQuadratic consensus_quadratic(const ConsensusProblem& problem);

struct OracleOptions {
  /// Forces a method; otherwise dense QP when H is positive definite, vertex
  /// enumeration when H is negative semidefinite, and the grid otherwise.
  std::optional<OracleMethod> method;
  /// Grid spacing; defaults to 1e-3 * a.
  double resolution = 0.0;
  /// Largest number of grid points.
  std::int64_t max_points = 20'000'000;
};

/// Minimizes f0 over the consensus set {y_1 = ... = y_m in Z}. The grid
/// reports L_f * resolution * sqrt(n) as its error bound, with L_f 1.5 times
/// the largest gradient norm seen on the grid. Grids need n <= 3 and
/// vertex enumeration n <= 20; larger inputs raise CapacityError.
OracleResult brute_force_primal(const ConsensusProblem& problem, const OracleOptions& options = {});

/// sqrt(nm) * max ||y||_2 over the m-fold box, which equals a * n * m.
double lipschitz_conjugate_bound(const BoxSet& box, int copies);

/// ||A||_2^2 * L.
double lipschitz_dual_bound(const ChainCoupling& coupling, double L);

struct LipschitzSample {
  double max_ratio = 0.0;
  int pairs = 0;
};

/// Largest ||s(l) - s(l')|| / ||l - l'|| over random pairs drawn uniformly
/// from [-radius, radius]^{n(m-1)}.
LipschitzSample empirical_dual_lipschitz(const ConsensusProblem& problem, int pairs, double radius,
                                         std::mt19937_64& rng, double tol = 1e-12);

/// max_i |central difference of g along e_i - (-s)_i|.
double finite_diff_check(const ConsensusProblem& problem, const Vec& lambda, double h, double tol = 1e-12);

/// f_star - g at the last record.
double duality_gap(const RunTrace& trace, const OracleResult& oracle);

/// Largest g over the records.
double best_dual_value(const RunTrace& trace);

struct RayGradientCheck {
  double c = 0.0;
  bool in_region = false;
  /// ||s(c mu) - beta mu||_inf
  double error = 0.0;
};

/// Evaluates the dual at c * mu for each c; in_region is the one-bit test.
std::vector<RayGradientCheck> ray_gradient_constancy(const ConsensusProblem& problem, const FgorRay& ray,
                                                     const std::vector<double>& scales, double member_tol,
                                                     double tol = 1e-12);

}  // namespace dualray
