#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dualray/fgor.hpp"
#include "dualray/model.hpp"
#include "dualray/stepsize.hpp"
#include "dualray/subsolvers.hpp"

namespace dualray {

struct EngineOptions {
  /// Maximum number of epochs K.
  int max_iter = 1000;
  /// Stop once ||s||_inf <= eps; 0 disables the test.
  double eps = 0.0;
  /// Bits per transmitted real.
  int bits_per_real = 64;
  double subproblem_tol = 1e-10;
  /// One-bit membership tolerance; defaults to 1e-8 * a.
  std::optional<double> member_tol;
};

/// g(lambda), the subgradient s = A y - b (so grad g = -s) and the agent minimizers.
struct DualEvaluation {
  double g = 0.0;
  Vec s;
  Vec y;
};

/// Every agent minimizes (1/m) f_i(y_i) - (A'lambda)_i' y_i over the box.
/// warm holds one start per agent and is updated with the new minimizers.
DualEvaluation dual_value_and_subgradient(const ConsensusProblem& problem, const Vec& lambda,
                                          double tol = 1e-10, std::vector<Vec>* warm = nullptr);

/// Coordinate-wise mean of the m blocks of y.
Vec average_primal(const Vec& y, int m, int n);

/// Bits per full exchange: m*n*b up plus n*(m-1)*b down.
std::int64_t full_exchange_bits(int m, int n, int b);

struct IterationRecord {
  int k = 0;
  /// g at the iterate evaluated in epoch k.
  double g_val = 0.0;
  /// f0 at the replicated average of the agent minimizers.
  double primal_val = 0.0;
  /// ||s||_2
  double subgrad_norm = 0.0;
  /// Stepsize applied after the evaluation (0 when the run stopped there).
  double gamma = 0.0;
  bool in_rfgor = false;
  std::int64_t bits_epoch = 0;
  std::int64_t bits_cum = 0;
  /// ||A(y_batch - y_full)||_2^2 for stochastic runs with a reference evaluation.
  std::optional<double> grad_error;
};

struct RunTrace {
  std::vector<IterationRecord> records;
  /// Iterate of the last record, and its minimizers.
  Vec lambda_final;
  Vec y_final;
  int k0 = 0;
  int m = 0;
  int n = 0;
  int bits_per_real = 64;
  std::string variant;
  std::string stop_reason;
  /// The warm start was already outside the region (c too small).
  bool warm_start_outside = false;
  /// The first out-of-region epoch found the last ray step past the optimum
  /// along the ray and replaced it by a half step.
  bool overshoot_corrected = false;
  /// max ||s - beta*mu||_inf over in-region epochs.
  double max_ray_gradient_error = 0.0;
};

/// Thrown when a subsolver fails mid-run; carries the records produced so far.
class RunAborted : public std::runtime_error {
 public:
  RunAborted(const std::string& what, RunTrace partial)
      : std::runtime_error(what), partial_(std::move(partial)) {}
  const RunTrace& partial() const noexcept { return partial_; }

 private:
  RunTrace partial_;
};

/// Dual subgradient method with lambda <- lambda - gamma_k s.
RunTrace run_standard(const ConsensusProblem& problem, StepsizeRule& rule, const Vec& lambda0,
                      const EngineOptions& options);

/// Warm start at ray.lambda0(), constant steps along -beta*mu while every agent
/// reports its ray vertex, then the fallback rule restarted at k = 1.
RunTrace run_fgor(const ConsensusProblem& problem, const FgorRay& ray, double gamma_const,
                  StepsizeRule& fallback, const EngineOptions& options);

struct StochasticOptions {
  int batch_size = 1;
  std::uint64_t seed = 0;
  Sampling sampling = Sampling::kWithoutReplacement;
  /// Also evaluate the full-batch dual each epoch; g_val then holds the exact
  /// dual value and grad_error is recorded.
  bool reference = true;
};

enum class StochasticMode { kStandard, kFgor };

/// Same control flow as run_standard / run_fgor, but every agent minimizes a
/// freshly sampled minibatch Lagrangian each epoch. Agents must be least squares.
/// For the standard mode, ray may be null; gamma_const is ignored.
RunTrace run_stochastic(const ConsensusProblem& problem, StochasticMode mode, const StochasticOptions& stochastic,
                        StepsizeRule& rule, const Vec& lambda0, const FgorRay* ray, double gamma_const,
                        const EngineOptions& options);

/// Minibatch dual evaluation at a fixed lambda, one sample per agent from rng.
DualEvaluation stochastic_dual_value_and_subgradient(const ConsensusProblem& problem, const Vec& lambda,
                                                     int batch_size, std::vector<std::mt19937_64>& rngs,
                                                     Sampling sampling, double tol = 1e-10,
                                                     std::vector<Vec>* warm = nullptr);

struct TraceSummary {
  /// First k with |g - g_star| <= accuracy.
  std::optional<int> k_star;
  int k0 = 0;
  /// bits_cum at k_star.
  std::optional<std::int64_t> bits_at_k_star;
  /// g_star - g at the last record.
  double final_gap = 0.0;
};

TraceSummary summarize(const RunTrace& trace, double g_star, double accuracy = 1e-5);

/// k0 (m+1) + (k - k0) n (2m-1) b for the first k epochs of a run with k0
/// in-region epochs; standard runs have k0 = 0.
std::int64_t closed_form_bits(int k, int k0, int m, int n, int b);

}  // namespace dualray
