#include "dualray/engine.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "dualray/errors.hpp"

namespace dualray {

namespace {

struct Epoch {
  DualEvaluation eval;
  /// Value written to the record; the exact dual when a reference exists.
  double g_record = 0.0;
  std::optional<double> grad_error;
};

using Evaluator = std::function<Epoch(const Vec&)>;

std::vector<Vec> initial_warm(const ConsensusProblem& problem) {
  return std::vector<Vec>(static_cast<std::size_t>(problem.m()), Vec::Zero(problem.n()));
}

// Sum of per-agent Lagrangian values plus lambda'b, and s = A y - b.
DualEvaluation assemble(const ConsensusProblem& problem, const ChainCoupling& A, const Vec& lambda,
                        const Vec& tilt, Vec y, const std::vector<LocalObjective>& objectives) {
  const int n = problem.n();
  DualEvaluation out;
  double g = lambda.dot(A.rhs());
  for (int i = 0; i < problem.m(); ++i) {
    const Vec yi = block_of(y, i, n);
    g += problem.weight() * evaluate(objectives[static_cast<std::size_t>(i)], yi) + block_of(tilt, i, n).dot(yi);
  }
  out.g = g;
  out.s = A.apply(y) - A.rhs();
  out.y = std::move(y);
  return out;
}

DualEvaluation evaluate_with(const ConsensusProblem& problem, const Vec& lambda, double tol,
                             std::vector<Vec>* warm, const std::vector<LocalObjective>& objectives) {
  const ChainCoupling A = problem.coupling();
  if (lambda.size() != A.rows()) throw ShapeError("dual evaluation: lambda has the wrong length");
  const int n = problem.n();
  const Vec tilt = -A.adjoint(lambda);
  Vec y(A.cols());
  for (int i = 0; i < problem.m(); ++i) {
    const Vec ti = block_of(tilt, i, n);
    const Vec* start = warm != nullptr ? &(*warm)[static_cast<std::size_t>(i)] : nullptr;
    Vec yi = agent_minimize({objectives[static_cast<std::size_t>(i)], problem.weight(), ti, problem.box()}, tol,
                            start);
    if (warm != nullptr) (*warm)[static_cast<std::size_t>(i)] = yi;
    block_of(y, i, n) = yi;
  }
  return assemble(problem, A, lambda, tilt, std::move(y), objectives);
}

RunTrace drive(const ConsensusProblem& problem, const Evaluator& evaluate_epoch, StepsizeRule& rule,
               const Vec& lambda0, const FgorRay* ray, double gamma_const, const EngineOptions& options,
               const std::string& variant) {
  if (options.max_iter < 1) throw ConfigError("max_iter must be at least 1");
  if (options.bits_per_real < 1) throw ConfigError("bits_per_real must be positive");
  const ChainCoupling A = problem.coupling();
  if (lambda0.size() != A.rows()) throw ShapeError("initial multiplier has the wrong length");
  const int m = problem.m();
  const int n = problem.n();
  const std::int64_t full_bits = full_exchange_bits(m, n, options.bits_per_real);
  const double member_tol = options.member_tol.value_or(1e-8 * problem.box().radius());

  RunTrace trace;
  trace.m = m;
  trace.n = n;
  trace.bits_per_real = options.bits_per_real;
  trace.variant = variant;
  trace.stop_reason = "max_iter";

  bool in_region = ray != nullptr;
  if (ray != nullptr && !(gamma_const > 0.0)) throw ConfigError("gamma_const must be positive");
  Vec lambda = lambda0;
  int local_k = 0;
  std::int64_t bits_cum = 0;

  for (int k = 1; k <= options.max_iter; ++k) {
    Epoch epoch;
    try {
      epoch = evaluate_epoch(lambda);
    } catch (const Error& e) {
      trace.lambda_final = lambda;
      trace.stop_reason = "aborted";
      trace.k0 = static_cast<int>(std::count_if(trace.records.begin(), trace.records.end(),
                                                [](const auto& r) { return r.in_rfgor; }));
      throw RunAborted(std::string("run aborted at epoch ") + std::to_string(k) + ": " + e.what(),
                       std::move(trace));
    }
    const DualEvaluation& ev = epoch.eval;
    IterationRecord rec;
    rec.k = k;
    rec.g_val = epoch.g_record;
    rec.primal_val = problem.consensus_objective(average_primal(ev.y, m, n));
    rec.subgrad_norm = ev.s.norm();
    rec.grad_error = epoch.grad_error;
    trace.lambda_final = lambda;
    trace.y_final = ev.y;

    auto commit = [&](std::int64_t bits) {
      rec.bits_epoch = bits;
      bits_cum += bits;
      rec.bits_cum = bits_cum;
      trace.records.push_back(rec);
    };

    if (in_region) {
      if (rfgor_member(ev.y, ray->y_bar, member_tol)) {
        rec.in_rfgor = true;
        rec.gamma = gamma_const;
        trace.max_ray_gradient_error =
            std::max(trace.max_ray_gradient_error, (ev.s - ray->beta * ray->mu_tilde).cwiseAbs().maxCoeff());
        commit(m + 1);
        lambda -= gamma_const * ray->beta * ray->mu_tilde;
        continue;
      }
      in_region = false;
      if (k == 1) trace.warm_start_outside = true;
      if (k > 1 && ev.s.dot(ray->mu_tilde) < 0.0) {
        // The last ray step passed the dual maximum along the ray: take half of it instead.
        trace.overshoot_corrected = true;
        rec.gamma = 0.5 * gamma_const;
        commit(full_bits);
        lambda += rec.gamma * ray->beta * ray->mu_tilde;
        continue;
      }
    }

    if (options.eps > 0.0 && ev.s.cwiseAbs().maxCoeff() <= options.eps) {
      trace.stop_reason = "eps";
      commit(full_bits);
      break;
    }
    const double gamma = rule.next(++local_k, lambda, ev.s, ev.g);
    if (rule.converged()) {
      trace.stop_reason = "rule_converged";
      commit(full_bits);
      break;
    }
    rec.gamma = gamma;
    commit(full_bits);
    lambda -= gamma * ev.s;
  }
  trace.k0 = static_cast<int>(
      std::count_if(trace.records.begin(), trace.records.end(), [](const auto& r) { return r.in_rfgor; }));
  return trace;
}

}  // namespace

DualEvaluation dual_value_and_subgradient(const ConsensusProblem& problem, const Vec& lambda, double tol,
                                          std::vector<Vec>* warm) {
  return evaluate_with(problem, lambda, tol, warm, problem.agents());
}

DualEvaluation stochastic_dual_value_and_subgradient(const ConsensusProblem& problem, const Vec& lambda,
                                                     int batch_size, std::vector<std::mt19937_64>& rngs,
                                                     Sampling sampling, double tol, std::vector<Vec>* warm) {
  if (rngs.size() != static_cast<std::size_t>(problem.m())) {
    throw ShapeError("stochastic evaluation: one random source per agent required");
  }
  std::vector<LocalObjective> batch;
  batch.reserve(static_cast<std::size_t>(problem.m()));
  for (int i = 0; i < problem.m(); ++i) {
    const auto* ls = std::get_if<LeastSquaresObjective>(&problem.agent(i));
    if (ls == nullptr) throw DomainError("stochastic evaluation requires least-squares agents");
    if (batch_size < 1 || (sampling == Sampling::kWithoutReplacement && batch_size > ls->samples())) {
      throw DomainError("stochastic evaluation: batch size outside [1, N]");
    }
    batch.emplace_back(minibatch_view(*ls, sample_minibatch(ls->samples(), batch_size,
                                                            rngs[static_cast<std::size_t>(i)], sampling)));
  }
  return evaluate_with(problem, lambda, tol, warm, batch);
}

Vec average_primal(const Vec& y, int m, int n) {
  if (m < 1 || n < 1 || y.size() != static_cast<Eigen::Index>(m) * n) {
    throw ShapeError("average_primal: y does not have m blocks of length n");
  }
  Vec z = Vec::Zero(n);
  for (int i = 0; i < m; ++i) z += block_of(y, i, n);
  return z / static_cast<double>(m);
}

std::int64_t full_exchange_bits(int m, int n, int b) {
  return static_cast<std::int64_t>(n) * b * (2 * static_cast<std::int64_t>(m) - 1);
}

std::int64_t closed_form_bits(int k, int k0, int m, int n, int b) {
  const std::int64_t inside = std::min(k, k0);
  const std::int64_t outside = std::max(0, k - k0);
  return inside * (m + 1) + outside * full_exchange_bits(m, n, b);
}

RunTrace run_standard(const ConsensusProblem& problem, StepsizeRule& rule, const Vec& lambda0,
                      const EngineOptions& options) {
  std::vector<Vec> warm = initial_warm(problem);
  Evaluator eval = [&](const Vec& lambda) {
    Epoch e;
    e.eval = dual_value_and_subgradient(problem, lambda, options.subproblem_tol, &warm);
    e.g_record = e.eval.g;
    return e;
  };
  return drive(problem, eval, rule, lambda0, nullptr, 0.0, options, "standard");
}

RunTrace run_fgor(const ConsensusProblem& problem, const FgorRay& ray, double gamma_const, StepsizeRule& fallback,
                  const EngineOptions& options) {
  std::vector<Vec> warm = initial_warm(problem);
  Evaluator eval = [&](const Vec& lambda) {
    Epoch e;
    e.eval = dual_value_and_subgradient(problem, lambda, options.subproblem_tol, &warm);
    e.g_record = e.eval.g;
    return e;
  };
  return drive(problem, eval, fallback, ray.lambda0(), &ray, gamma_const, options, "fgor");
}

RunTrace run_stochastic(const ConsensusProblem& problem, StochasticMode mode, const StochasticOptions& stochastic,
                        StepsizeRule& rule, const Vec& lambda0, const FgorRay* ray, double gamma_const,
                        const EngineOptions& options) {
  if (mode == StochasticMode::kFgor && ray == nullptr) throw ConfigError("stochastic FGOR run needs a ray");
  std::vector<std::mt19937_64> rngs;
  for (int i = 0; i < problem.m(); ++i) {
    std::seed_seq seq{static_cast<std::uint32_t>(stochastic.seed & 0xffffffffu),
                      static_cast<std::uint32_t>(stochastic.seed >> 32), static_cast<std::uint32_t>(i)};
    rngs.emplace_back(seq);
  }
  std::vector<Vec> warm = initial_warm(problem);
  std::vector<Vec> warm_full = initial_warm(problem);
  const ChainCoupling A = problem.coupling();
  Evaluator eval = [&](const Vec& lambda) {
    Epoch e;
    e.eval = stochastic_dual_value_and_subgradient(problem, lambda, stochastic.batch_size, rngs,
                                                   stochastic.sampling, options.subproblem_tol, &warm);
    e.g_record = e.eval.g;
    if (stochastic.reference) {
      const DualEvaluation full = dual_value_and_subgradient(problem, lambda, options.subproblem_tol, &warm_full);
      e.g_record = full.g;
      e.grad_error = A.apply(e.eval.y - full.y).squaredNorm();
    }
    return e;
  };
  const bool fgor = mode == StochasticMode::kFgor;
  return drive(problem, eval, rule, fgor ? ray->lambda0() : lambda0, fgor ? ray : nullptr, gamma_const, options,
               fgor ? "stochastic_fgor" : "stochastic");
}

TraceSummary summarize(const RunTrace& trace, double g_star, double accuracy) {
  TraceSummary out;
  out.k0 = trace.k0;
  for (const auto& r : trace.records) {
    if (std::abs(r.g_val - g_star) <= accuracy) {
      out.k_star = r.k;
      out.bits_at_k_star = r.bits_cum;
      break;
    }
  }
  if (!trace.records.empty()) out.final_gap = g_star - trace.records.back().g_val;
  return out;
}

}  // namespace dualray
