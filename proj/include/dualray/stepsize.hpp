#pragma once

#include <optional>
#include <string>

#include "dualray/model.hpp"

namespace dualray {

enum class StepKind { kConstant, kPolyK, kPolySqrtK, kGeometric, kStepDecay, kPolyak, kAdaptiveLocal };

const char* to_string(StepKind kind);
StepKind step_kind_from_string(const std::string& s);

struct StepsizeConfig {
  StepKind kind = StepKind::kConstant;
  double gamma0 = 1.0;
  /// Decay factor for geometric and step decay, in (0, 1).
  double q = 0.5;
  /// Iterations per stage for step decay.
  int stage_length = 10;
  /// Target dual value for Polyak steps.
  std::optional<double> g_star;
};

/// Stateful stepsize schedule. k counts iterations since the rule was
/// activated and starts at 1.
class StepsizeRule {
 public:
  explicit StepsizeRule(StepsizeConfig config);

  /// Stepsize for the dual update at (lambda, s) with dual value g_val.
  double next(int k, const Vec& lambda, const Vec& s, double g_val);
  /// Set once a Polyak step sees a zero subgradient.
  bool converged() const noexcept { return converged_; }
  void reset();

  const StepsizeConfig& config() const noexcept { return config_; }
  /// Adaptive rule state.
  double theta() const noexcept { return theta_; }

 private:
  StepsizeConfig config_;
  bool converged_ = false;
  bool started_ = false;
  double theta_ = 0.0;
  double gamma_prev_ = 0.0;
  Vec lambda_prev_;
  Vec s_prev_;
};

}  // namespace dualray
