#include "dualray/stepsize.hpp"

#include <algorithm>
#include <cmath>

#include "dualray/errors.hpp"

namespace dualray {

namespace {

constexpr double kPolyakFloor = 1e-12;

}  // namespace

const char* to_string(StepKind kind) {
  switch (kind) {
    case StepKind::kConstant: return "constant";
    case StepKind::kPolyK: return "poly_k";
    case StepKind::kPolySqrtK: return "poly_sqrt_k";
    case StepKind::kGeometric: return "geometric";
    case StepKind::kStepDecay: return "step_decay";
    case StepKind::kPolyak: return "polyak";
    case StepKind::kAdaptiveLocal: return "adaptive_local";
  }
  return "unknown";
}

StepKind step_kind_from_string(const std::string& s) {
  for (StepKind k : {StepKind::kConstant, StepKind::kPolyK, StepKind::kPolySqrtK, StepKind::kGeometric,
                     StepKind::kStepDecay, StepKind::kPolyak, StepKind::kAdaptiveLocal}) {
    if (s == to_string(k)) return k;
  }
  throw ConfigError("unknown stepsize rule '" + s + "'");
}

StepsizeRule::StepsizeRule(StepsizeConfig config) : config_(std::move(config)) {
  if (!(config_.gamma0 > 0.0) && config_.kind != StepKind::kPolyak) {
    throw ConfigError("stepsize gamma0 must be positive");
  }
  if ((config_.kind == StepKind::kGeometric || config_.kind == StepKind::kStepDecay) &&
      !(config_.q > 0.0 && config_.q < 1.0)) {
    throw ConfigError("stepsize decay factor q must lie in (0, 1)");
  }
  if (config_.kind == StepKind::kStepDecay && config_.stage_length < 1) {
    throw ConfigError("step decay stage length must be positive");
  }
  if (config_.kind == StepKind::kPolyak && !config_.g_star) {
    throw ConfigError("polyak stepsize requires g_star");
  }
}

void StepsizeRule::reset() {
  converged_ = false;
  started_ = false;
  theta_ = 0.0;
  gamma_prev_ = 0.0;
  lambda_prev_.resize(0);
  s_prev_.resize(0);
}

double StepsizeRule::next(int k, const Vec& lambda, const Vec& s, double g_val) {
  if (k < 1) throw DomainError("stepsize index k must be at least 1");
  const double g0 = config_.gamma0;
  const double kd = static_cast<double>(k);
  switch (config_.kind) {
    case StepKind::kConstant: return g0;
    case StepKind::kPolyK: return g0 / kd;
    case StepKind::kPolySqrtK: return g0 / std::sqrt(kd);
    case StepKind::kGeometric: return g0 * std::pow(config_.q, kd);
    case StepKind::kStepDecay: return g0 * std::pow(config_.q, static_cast<double>(k / config_.stage_length));
    case StepKind::kPolyak: {
      const double s2 = s.squaredNorm();
      if (s2 == 0.0) {
        converged_ = true;
        return 0.0;
      }
      return std::max((*config_.g_star - g_val) / s2, kPolyakFloor);
    }
    case StepKind::kAdaptiveLocal: {
      double gamma = g0;
      if (started_) {
        const double growth = std::sqrt(1.0 + theta_) * gamma_prev_;
        const double ds = (s - s_prev_).norm();
        const double local = ds > 0.0 ? (lambda - lambda_prev_).norm() / (2.0 * ds) : growth;
        gamma = local > 0.0 && std::isfinite(local) ? std::min(growth, local) : growth;
        theta_ = gamma / gamma_prev_;
      }
      started_ = true;
      gamma_prev_ = gamma;
      lambda_prev_ = lambda;
      s_prev_ = s;
      return gamma;
    }
  }
  return g0;
}

}  // namespace dualray
