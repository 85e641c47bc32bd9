#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <random>

#include "dualray/data.hpp"
#include "dualray/diagnostics.hpp"
#include "dualray/experiment.hpp"
#include "dualray/fgor.hpp"

namespace dualray {

namespace {

Vec gaussian(std::mt19937_64& rng, int size) {
  std::normal_distribution<double> g;
  Vec v(size);
  for (int i = 0; i < size; ++i) v[i] = g(rng);
  return v;
}

CheckResult at_most(std::string name, double observed, double threshold) {
  return {std::move(name), observed <= threshold, observed, threshold};
}

CheckResult adjoint_identity(bool fault) {
  std::mt19937_64 rng(7);
  double worst = 0.0;
  for (int m = 2; m <= 8; ++m) {
    for (int n = 1; n <= 5; ++n) {
      const ChainCoupling A(m, n);
      const Vec y = gaussian(rng, A.cols());
      const Vec lambda = gaussian(rng, A.rows());
      const Vec At = fault ? Vec(-A.adjoint(lambda)) : A.adjoint(lambda);
      const double lhs = A.apply(y).dot(lambda), rhs = y.dot(At);
      worst = std::max(worst, std::abs(lhs - rhs) / (1.0 + std::abs(lhs)));
    }
  }
  return at_most("adjoint identity <Ay, l> = <y, A'l>", worst, 1e-12);
}

CheckResult gram_solve_residual() {
  std::mt19937_64 rng(8);
  double worst = 0.0;
  for (int m = 2; m <= 9; ++m) {
    for (int n = 1; n <= 4; ++n) {
      const ChainCoupling A(m, n);
      const Vec v = gaussian(rng, A.rows());
      const Mat D = A.dense();
      worst = std::max(worst, (D * D.transpose() * A.gram_solve(v) - v).norm() / v.norm());
    }
  }
  return at_most("gram solve residual", worst, 1e-10);
}

CheckResult spectral_norm() {
  double worst = 0.0;
  for (int m = 2; m <= 10; ++m) {
    const double exact = 2.0 + 2.0 * std::cos(std::numbers::pi / m);
    worst = std::max(worst, std::abs(ChainCoupling(m, 3).spectral_norm_sq() - exact));
  }
  return at_most("||A||^2 = 2 + 2cos(pi/m)", worst, 1e-6);
}

CheckResult feasibility_sweep() {
  int failures = 0;
  for (int m = 2; m <= 10; ++m) {
    for (int n = 1; n <= 8; ++n) {
      for (double a : {0.5, 1.0, 3.0}) {
        const BoxSet box(a, n);
        const ChainCoupling A(m, n);
        const Vec y_bar = consensus_boundary_point(m, n, a);
        for (double beta : {0.5, 1.0, 2.0}) {
          const auto dir = solve_relaxed_feasibility(A, box, y_bar, beta);
          if (!dir || !normal_cone_contains(box, y_bar, dir->eta_tilde)) ++failures;
        }
      }
    }
  }
  return at_most("relaxed feasibility at the alternating vertex", failures, 0);
}

CheckResult ray_constancy() {
  double worst = 0.0;
  int in_region = 0;
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const ConsensusProblem p = synth_quadratic(2 + seed % 4, 1 + seed % 5, 1.0, seed, OptimumRegime::kInterior);
    const FgorRay ray = consensus_ray(p);
    std::vector<double> scales;
    for (int i = 0; i < 10; ++i) scales.push_back(ray.c * std::pow(10.0, -0.5 * i));
    for (const auto& r : ray_gradient_constancy(p, ray, scales, 1e-8 * p.box().radius())) {
      if (!r.in_region) continue;
      ++in_region;
      worst = std::max(worst, r.error);
    }
  }
  if (in_region == 0) worst = INFINITY;
  return at_most("ray gradient constancy ||s - beta mu||_inf", worst, 1e-6);
}

CheckResult lipschitz_ratio() {
  std::mt19937_64 rng(9);
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const ConsensusProblem p = synth_quadratic(2 + seed, 2, 1.0, seed, OptimumRegime::kInterior);
    const double G = lipschitz_dual_bound(p.coupling(), lipschitz_conjugate_bound(p.box(), p.m()));
    worst = std::max(worst, empirical_dual_lipschitz(p, 200, 2.0, rng).max_ratio / G);
  }
  return at_most("dual gradient ratio / G", worst, 1.0);
}

CheckResult oracle_cross_check() {
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 2; ++seed) {
    const ConsensusProblem p = synth_quadratic(2, 2, 1.0, seed, OptimumRegime::kBoundary);
    const OracleResult qp = brute_force_primal(p);
    OracleOptions grid;
    grid.method = OracleMethod::kGrid;
    const OracleResult g = brute_force_primal(p, grid);
    worst = std::max(worst, std::max(0.0, std::abs(qp.f_star - g.f_star) - g.error_bound));
    StepsizeRule rule({StepKind::kPolySqrtK, 1.0, 0.5, 10, std::nullopt});
    EngineOptions opts;
    opts.max_iter = 5000;
    const RunTrace t = run_standard(p, rule, Vec::Zero(p.coupling().rows()), opts);
    worst = std::max(worst, std::abs(duality_gap(t, qp)));
  }
  return at_most("oracle agreement (QP, grid, dual run)", worst, 1e-3);
}

CheckResult finite_differences() {
  std::mt19937_64 rng(10);
  double worst = 0.0;
  const ConsensusProblem p = synth_quadratic(3, 2, 1.0, 3, OptimumRegime::kInterior);
  for (int t = 0; t < 10; ++t) {
    worst = std::max(worst, finite_diff_check(p, 0.05 * gaussian(rng, p.coupling().rows()), 1e-4));
  }
  return at_most("finite-difference gradient", worst, 1e-5);
}

CheckResult bit_ledger() {
  const ConsensusProblem p = synth_quadratic(3, 2, 1.0, 5, OptimumRegime::kInterior);
  const FgorRay ray = consensus_ray(p);
  StepsizeRule rule({StepKind::kAdaptiveLocal, 1.0, 0.5, 10, std::nullopt});
  EngineOptions opts;
  opts.max_iter = 300;
  const RunTrace t = run_fgor(p, ray, 100.0, rule, opts);
  int mismatches = 0;
  for (const auto& r : t.records)
    if (r.bits_cum != closed_form_bits(r.k, t.k0, t.m, t.n, t.bits_per_real)) ++mismatches;
  if (closed_form_bits(115, 21, 4, 10, 1) != 105 + 6580 || closed_form_bits(115, 21, 4, 10, 64) != 105 + 6580 * 64)
    ++mismatches;
  return at_most("bit ledger closed form", mismatches, 0);
}

}  // namespace

std::vector<CheckResult> run_checks(const CheckOptions& options, std::ostream& out) {
  std::vector<CheckResult> results = {adjoint_identity(options.inject_adjoint_fault),
                                      gram_solve_residual(),
                                      spectral_norm(),
                                      feasibility_sweep(),
                                      ray_constancy(),
                                      lipschitz_ratio(),
                                      oracle_cross_check(),
                                      finite_differences(),
                                      bit_ledger()};
  for (const auto& r : results) {
    out << (r.pass ? "PASS " : "FAIL ") << r.name;
    if (options.verbose || !r.pass) out << std::setprecision(4) << "  [observed " << r.observed << ", limit " << r.threshold << "]";
    out << '\n';
  }
  return results;
}

}  // namespace dualray
