#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "dualray/model.hpp"

namespace dualray {

/// Stationarity measure ||y - Proj(y - grad h(y))||_inf for h(y) = y'Py + c'y.
double box_qp_residual(const Mat& P, const Vec& c, const BoxSet& box, const Vec& y);

/// Minimizes y'Py + c'y over the box for positive semidefinite P.
///
/// Projected gradient with step 1/lambda_max(2P), interleaved with a Newton
/// step on the current free set that is kept only when it does not increase
/// the objective. Diagonal P is solved in closed form. Throws SolverError
/// when the residual is still above tol after max_iter gradient steps
/// (0 selects 100 * n * cond(P), capped at one million).
Vec minimize_box_qp(const Mat& P, const Vec& c, const BoxSet& box, double tol = 1e-10,
                    const Vec* warm_start = nullptr, long max_iter = 0);

/// Minimizes v'Pv + c'v over the vertices of the box for negative semidefinite P.
/// Ties go to the lexicographically smallest vertex (with -a ordered before +a).
/// Non-diagonal P is enumerated exhaustively and is limited to n <= 20.
Vec minimize_concave_box(const Mat& P, const Vec& c, const BoxSet& box);

/// One agent's share of the Lagrangian: weight * f(y) + tilt'y over the box.
struct TiltedSubproblem {
  const LocalObjective& objective;
  double weight;
  const Vec& tilt;
  const BoxSet& box;
};

/// Quadratic model (P, c) with weight * f(y) + tilt'y = y'Py + c'y + const.
void tilted_quadratic(const TiltedSubproblem& sub, Mat& P, Vec& c);

/// Minimizer of the tilted subproblem. Strictly convex quadratics and least
/// squares go to minimize_box_qp, concave quadratics to minimize_concave_box.
/// Indefinite quadratics are rejected with a DomainError.
Vec agent_minimize(const TiltedSubproblem& sub, double tol = 1e-10, const Vec* warm_start = nullptr);

/// The least-squares objective restricted to the given rows (0-based; repeats allowed).
LeastSquaresObjective minibatch_view(const LeastSquaresObjective& obj, const std::vector<int>& indices);

enum class Sampling { kWithoutReplacement, kWithReplacement };

/// Draws n0 row indices from [0, N) and returns them sorted.
std::vector<int> sample_minibatch(int N, int n0, std::mt19937_64& rng,
                                  Sampling mode = Sampling::kWithoutReplacement);

}  // namespace dualray
