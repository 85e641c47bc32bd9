#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dualray/model.hpp"

namespace dualray {

/// Feature rows (with a leading 1 when has_bias) and targets.
struct Dataset {
  std::string name;
  Mat features;
  Vec targets;
  bool has_bias = false;
  bool standardized = false;

  int rows() const noexcept { return static_cast<int>(features.rows()); }
  int dim() const noexcept { return static_cast<int>(features.cols()); }
};

/// Parses a comma-separated numeric file. target_column is 0-based; every
/// other column becomes a feature in file order. A leading 1 is prepended to
/// each feature row when bias is set. Throws ParseError with 1-based
/// row/column on a malformed cell and DomainError on an empty file.
Dataset load_csv(const std::string& path, int target_column, bool bias, bool header = false);

/// Same as load_csv but from an in-memory string.
Dataset parse_csv(const std::string& text, int target_column, bool bias, bool header = false,
                  const std::string& name = "inline");

/// Training-split statistics (sample standard deviation, denominator N-1).
struct StandardizationStats {
  Vec feature_mean;
  Vec feature_std;
  double target_mean = 0.0;
  double target_std = 1.0;
  /// First column that is standardized (1 when the dataset has a bias column).
  int first_column = 0;
};

StandardizationStats fit_standardization(const Dataset& d);
/// z-scores non-bias features and the target with the given statistics.
Dataset apply_standardization(const Dataset& d, const StandardizationStats& stats);
/// fit_standardization followed by apply_standardization.
Dataset standardize(const Dataset& d, StandardizationStats* stats = nullptr);

/// Rows [lo, hi).
Dataset slice_rows(const Dataset& d, int lo, int hi);

/// Contiguous shards of floor(N/m) rows; leftover rows are dropped with a warning.
std::vector<LeastSquaresObjective> partition_agents(const Dataset& d, int m);

/// A seeded stand-in shaped like the real estate valuation data: six
/// features plus a bias column and a scalar target.
Dataset synthetic_valuation_dataset(int rows, std::uint64_t seed);

enum class OptimumRegime { kInterior, kBoundary };

struct QuadraticSynthOptions {
  /// Smallest Hessian eigenvalue of each agent.
  double eig_min = 1.0;
  /// Largest over smallest eigenvalue, at most 100.
  double condition = 10.0;
  /// Target ||z*||_inf / a for the unconstrained consensus optimum. Interior
  /// mode draws from [0.2, 0.8] and boundary mode from [1.5, 3] when unset.
  double target_ratio = 0.0;
};

/// Strictly convex agents f_i(y) = (1/m)(y'P_i y + q_i'y) with seeded P_i = Q D Q'.
/// The q_i are rescaled together so that the consensus optimum is interior
/// (||z*||_inf <= 0.8a) or pushed onto the boundary. Checked by the dense oracle.
ConsensusProblem synth_quadratic(int m, int n, double a, std::uint64_t seed, OptimumRegime regime,
                                 const QuadraticSynthOptions& options = {});

/// The first m_convex agents are strictly convex, the rest concave (negated SPD Hessians).
ConsensusProblem synth_mixed_nonconvex(int m, int m_convex, int n, double a, std::uint64_t seed);

/// f_1(y) = (1/16)y'y + 1'y + 5 and f_2(y) = -y'y + 2(1'y) + 2 over [-a, a]^n.
ConsensusProblem strong_duality_preset(int n = 2, double a = 1.0);

/// Box-constrained consensus problem with a = sqrt(d_bar).
ConsensusProblem constrain_regularized(const std::vector<LeastSquaresObjective>& agents, double d_bar);

/// Unconstrained consensus minimizer of all-strictly-convex quadratic agents.
Vec unconstrained_consensus_optimum(const ConsensusProblem& problem);

}  // namespace dualray
