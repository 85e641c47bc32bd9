#include "dualray/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <limits>
#include <map>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include "dualray/diagnostics.hpp"
#include "dualray/errors.hpp"
#include "dualray/fgor.hpp"
#include "dualray/io.hpp"
#include "dualray/logging.hpp"
#include "json.hpp"

namespace dualray {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json parse_config_json(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("config: ") + e.what(), 0, 0);
  }
}

template <typename T>
T get(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw ConfigError(where + ": missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + ": field '" + key + "' has the wrong type");
  }
}

template <typename T>
T get_or(const json& j, const char* key, T fallback, const std::string& where) {
  if (!j.is_object() || !j.contains(key) || j.at(key).is_null()) return fallback;
  return get<T>(j, key, where);
}

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

StepsizeConfig parse_rule(const json& j, const std::string& where) {
  require(j.is_object(), where + ": rule must be an object");
  StepsizeConfig rule;
  rule.kind = step_kind_from_string(get<std::string>(j, "kind", where));
  rule.gamma0 = get_or<double>(j, "gamma0", 1.0, where);
  rule.q = get_or<double>(j, "q", 0.5, where);
  rule.stage_length = get_or<int>(j, "stage_length", 10, where);
  if (j.contains("g_star") && !j.at("g_star").is_null()) rule.g_star = get<double>(j, "g_star", where);
  require(rule.gamma0 > 0.0 && std::isfinite(rule.gamma0), where + ": gamma0 must be positive");
  require(rule.q > 0.0 && rule.q < 1.0, where + ": q must lie in (0, 1)");
  require(rule.stage_length > 0, where + ": stage_length must be positive");
  return rule;
}

ProblemSource parse_problem_source(const json& j, const std::string& base_dir) {
  require(j.is_object(), "problem: expected an object");
  ProblemSource p;
  const std::string where = "problem";
  if (j.contains("agents")) {
    p.kind = "inline";
    p.inline_json = j.dump();
    return p;
  }
  if (j.contains("file")) {
    p.kind = "file";
    fs::path path = get<std::string>(j, "file", where);
    if (path.is_relative()) path = fs::path(base_dir) / path;
    p.path = path.string();
    return p;
  }
  p.kind = get<std::string>(j, "generator", where);
  p.box_radius = get_or<double>(j, "box_radius", 1.0, where);
  require(p.box_radius > 0.0, "problem: box_radius must be positive");
  if (p.kind == "quadratic") {
    p.m = get<int>(j, "m", where);
    p.n = get<int>(j, "n", where);
    const std::string regime = get_or<std::string>(j, "regime", "interior", where);
    require(regime == "interior" || regime == "boundary", "problem: regime must be interior or boundary");
    p.regime = regime == "interior" ? OptimumRegime::kInterior : OptimumRegime::kBoundary;
    p.synth.eig_min = get_or<double>(j, "eig_min", p.synth.eig_min, where);
    p.synth.condition = get_or<double>(j, "condition", p.synth.condition, where);
    p.synth.target_ratio = get_or<double>(j, "target_ratio", 0.0, where);
  } else if (p.kind == "mixed_nonconvex") {
    p.m = get<int>(j, "m", where);
    p.n = get<int>(j, "n", where);
    p.m_convex = get<int>(j, "m_convex", where);
    require(p.m_convex >= 0 && p.m_convex <= p.m, "problem: m_convex must lie in [0, m]");
  } else if (p.kind == "strong_duality_preset") {
    p.m = 2;
    p.n = get_or<int>(j, "n", 2, where);
  } else if (p.kind == "valuation" || p.kind == "csv") {
    p.m = get<int>(j, "m", where);
    p.rows = get_or<int>(j, "rows", p.kind == "valuation" ? 276 : 0, where);
    p.d_bar = get<double>(j, "d_bar", where);
    p.standardize = get_or<bool>(j, "standardize", true, where);
    require(p.d_bar > 0.0, "problem: d_bar must be positive");
    if (p.kind == "csv") {
      fs::path path = get<std::string>(j, "csv_path", where);
      if (path.is_relative()) path = fs::path(base_dir) / path;
      p.path = path.string();
      p.target_column = get<int>(j, "target_column", where);
      p.bias = get_or<bool>(j, "bias", true, where);
      p.header = get_or<bool>(j, "header", false, where);
    }
  } else {
    throw ConfigError("problem: unknown generator '" + p.kind + "'");
  }
  require(p.m >= 2, "problem: m must be at least 2");
  if (p.kind != "valuation" && p.kind != "csv") require(p.n >= 1, "problem: n must be positive");
  return p;
}

RunSpec parse_run(const json& j, int index) {
  const std::string where = "runs[" + std::to_string(index) + "]";
  require(j.is_object(), where + ": expected an object");
  RunSpec r;
  r.json_text = j.dump();
  r.label = get_or<std::string>(j, "label", "", where);
  r.variant = get<std::string>(j, "variant", where);
  require(r.variant == "standard" || r.variant == "fgor" || r.variant == "stochastic",
          where + ": variant must be standard, fgor or stochastic");
  require(j.contains("rule"), where + ": missing field 'rule'");
  r.rule = parse_rule(j.at("rule"), where + ".rule");
  if (j.contains("c") && !j.at("c").is_null()) {
    r.c = get<double>(j, "c", where);
    require(*r.c > 0.0, where + ": c must be positive");
  }
  r.beta = get_or<double>(j, "beta", 1.0, where);
  require(r.beta > 0.0, where + ": beta must be positive");
  if (j.contains("gamma_const") && !j.at("gamma_const").is_null()) {
    r.gamma_const = get<double>(j, "gamma_const", where);
    require(*r.gamma_const > 0.0, where + ": gamma_const must be positive");
  }
  r.max_iter = get_or<int>(j, "K", 1000, where);
  require(r.max_iter > 0, where + ": K must be positive");
  r.eps = get_or<double>(j, "eps", 0.0, where);
  require(r.eps >= 0.0, where + ": eps must be non-negative");
  if (j.contains("lambda0") && !j.at("lambda0").is_null()) {
    const auto values = get<std::vector<double>>(j, "lambda0", where);
    r.lambda0 = Eigen::Map<const Vec>(values.data(), static_cast<Eigen::Index>(values.size()));
  }
  if (r.variant == "stochastic") {
    const std::string mode = get_or<std::string>(j, "mode", "standard", where);
    require(mode == "standard" || mode == "fgor", where + ": mode must be standard or fgor");
    r.mode = mode == "fgor" ? StochasticMode::kFgor : StochasticMode::kStandard;
    r.batch_size = get<int>(j, "batch_size", where);
    require(r.batch_size > 0, where + ": batch_size must be positive");
    const std::string sampling = get_or<std::string>(j, "sampling", "without_replacement", where);
    require(sampling == "without_replacement" || sampling == "with_replacement",
            where + ": sampling must be without_replacement or with_replacement");
    r.sampling = sampling == "with_replacement" ? Sampling::kWithReplacement : Sampling::kWithoutReplacement;
  }
  return r;
}

ReferenceSpec parse_reference(const json& j) {
  ReferenceSpec ref;
  if (j.is_number()) {
    ref.method = "value";
    ref.value = j.get<double>();
    return ref;
  }
  if (j.is_string()) {
    ref.method = j.get<std::string>();
  } else {
    require(j.is_object(), "reference: expected a number, a string or an object");
    ref.method = get_or<std::string>(j, "method", "auto", "reference");
    ref.value = get_or<double>(j, "value", 0.0, "reference");
    ref.iterations = get_or<int>(j, "iterations", ref.iterations, "reference");
    if (j.contains("rule")) ref.rule = parse_rule(j.at("rule"), "reference.rule");
  }
  require(ref.method == "auto" || ref.method == "oracle" || ref.method == "long_run" || ref.method == "value",
          "reference: method must be auto, oracle, long_run or value");
  require(ref.iterations > 0, "reference: iterations must be positive");
  return ref;
}

bool is_fgor(const RunSpec& run) {
  return run.variant == "fgor" || (run.variant == "stochastic" && run.mode == StochasticMode::kFgor);
}

SummaryRow summary_row(const std::string& name, const std::string& variant, const RunTrace& trace,
                       std::optional<double> g_star) {
  SummaryRow row;
  row.run = name;
  row.variant = variant;
  row.epochs = static_cast<int>(trace.records.size());
  row.k0 = trace.k0;
  row.m = trace.m;
  row.n = trace.n;
  row.bits_per_real = trace.bits_per_real;
  if (g_star) {
    const TraceSummary s = summarize(trace, *g_star);
    row.k_star = s.k_star;
    row.bits_at_k_star = s.bits_at_k_star;
    row.final_gap = s.final_gap;
  }
  return row;
}

template <typename Fn>
void parallel_for(int count, int jobs, Fn&& fn) {
  const int workers = std::max(1, std::min(jobs, count));
  std::atomic<int> next{0};
  auto work = [&] {
    for (int i = next++; i < count; i = next++) fn(i);
  };
  if (workers == 1) {
    work();
    return;
  }
  std::vector<std::jthread> pool;
  for (int w = 0; w < workers; ++w) pool.emplace_back(work);
}

}  // namespace

std::string RunSpec::stem() const {
  return label.empty() ? variant + "-" + to_string(rule.kind) : label;
}

std::string run_name(const RunSpec& run, std::uint64_t seed) { return run.stem() + "-s" + std::to_string(seed); }

ExperimentConfig parse_experiment_config(const std::string& json_text, const std::string& base_dir) {
  const json j = parse_config_json(json_text);
  require(j.is_object(), "config: expected an object");
  ExperimentConfig cfg;
  cfg.base_dir = base_dir;
  cfg.name = get_or<std::string>(j, "name", cfg.name, "config");
  require(j.contains("problem"), "config: missing field 'problem'");
  cfg.problem = parse_problem_source(j.at("problem"), base_dir);
  require(j.contains("runs") && j.at("runs").is_array(), "config: 'runs' must be an array");
  require(!j.at("runs").empty(), "config: the algorithm matrix is empty");
  int index = 0;
  for (const auto& entry : j.at("runs")) cfg.runs.push_back(parse_run(entry, index++));
  cfg.seeds = get_or<std::vector<std::uint64_t>>(j, "seeds", {0}, "config");
  require(!cfg.seeds.empty(), "config: seeds must not be empty");
  cfg.output_dir = get_or<std::string>(j, "output", cfg.output_dir, "config");
  cfg.bits_per_real = get_or<int>(j, "bits_per_real", 64, "config");
  require(cfg.bits_per_real > 0, "config: bits_per_real must be positive");
  if (j.contains("reference")) cfg.reference = parse_reference(j.at("reference"));

  std::set<std::string> names;
  for (const auto& run : cfg.runs) {
    for (auto seed : cfg.seeds) {
      const std::string name = run_name(run, seed);
      require(names.insert(name).second, "config: duplicate run name '" + name + "'");
    }
  }
  return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  const fs::path p(path);
  return parse_experiment_config(read_text_file(path), p.has_parent_path() ? p.parent_path().string() : ".");
}

ConsensusProblem build_problem(const ProblemSource& source, std::uint64_t seed, const std::string& base_dir) {
  if (source.kind == "inline") return parse_problem(source.inline_json, base_dir);
  if (source.kind == "file") return load_problem(source.path);
  if (source.kind == "quadratic")
    return synth_quadratic(source.m, source.n, source.box_radius, seed, source.regime, source.synth);
  if (source.kind == "mixed_nonconvex")
    return synth_mixed_nonconvex(source.m, source.m_convex, source.n, source.box_radius, seed);
  if (source.kind == "strong_duality_preset") return strong_duality_preset(source.n, source.box_radius);
  if (source.kind == "valuation" || source.kind == "csv") {
    Dataset d = source.kind == "valuation"
                    ? synthetic_valuation_dataset(source.rows, seed)
                    : load_csv(source.path, source.target_column, source.bias, source.header);
    if (source.rows > 0 && source.rows < d.rows()) d = slice_rows(d, 0, source.rows);
    if (source.standardize) d = standardize(d);
    return constrain_regularized(partition_agents(d, source.m), source.d_bar);
  }
  throw ConfigError("problem: unknown kind '" + source.kind + "'");
}

Reference compute_reference(const ConsensusProblem& problem, const ReferenceSpec& spec) {
  if (spec.method == "value") return {spec.value, "value"};
  std::string method = spec.method;
  if (method == "auto") {
    const ConsensusQuadratic cq = consensus_quadratic(problem);
    method = classify_hessian(cq.H) == Convexity::kStrictlyConvex ? "oracle" : "long_run";
  }
  if (method == "oracle") {
    const OracleResult o = brute_force_primal(problem);
    return {o.f_star, std::string("oracle:") + to_string(o.method)};
  }
  StepsizeRule rule(spec.rule);
  EngineOptions opts;
  opts.max_iter = spec.iterations;
  const RunTrace t = run_standard(problem, rule, Vec::Zero(problem.coupling().rows()), opts);
  return {best_dual_value(t), "long_run:" + std::string(to_string(spec.rule.kind)) + ":" +
                                   std::to_string(spec.iterations)};
}

RunTrace execute_run(const ConsensusProblem& problem, const RunSpec& run, std::uint64_t seed, int bits_per_real,
                     std::optional<double> g_star) {
  EngineOptions opts;
  opts.max_iter = run.max_iter;
  opts.eps = run.eps;
  opts.bits_per_real = bits_per_real;
  StepsizeConfig rule_cfg = run.rule;
  if (rule_cfg.kind == StepKind::kPolyak && !rule_cfg.g_star) rule_cfg.g_star = g_star;
  StepsizeRule rule(rule_cfg);
  const int dual_dim = problem.coupling().rows();
  Vec lambda0 = run.lambda0.size() ? run.lambda0 : Vec(Vec::Zero(dual_dim));
  if (lambda0.size() != dual_dim)
    throw ShapeError("lambda0: expected length " + std::to_string(dual_dim) + ", got " +
                     std::to_string(lambda0.size()));
  const double gamma_const = run.gamma_const.value_or(run.rule.gamma0);
  auto make_ray = [&] {
    FgorRay ray = consensus_ray(problem, run.beta);
    if (run.c) warm_start(ray, *run.c);
    return ray;
  };
  if (run.variant == "standard") return run_standard(problem, rule, lambda0, opts);
  if (run.variant == "fgor") return run_fgor(problem, make_ray(), gamma_const, rule, opts);
  StochasticOptions so;
  so.batch_size = run.batch_size;
  so.seed = seed;
  so.sampling = run.sampling;
  if (run.mode == StochasticMode::kFgor) {
    const FgorRay ray = make_ray();
    return run_stochastic(problem, run.mode, so, rule, lambda0, &ray, gamma_const, opts);
  }
  return run_stochastic(problem, run.mode, so, rule, lambda0, nullptr, gamma_const, opts);
}

int ExperimentReport::failures() const {
  return static_cast<int>(std::count_if(outcomes.begin(), outcomes.end(), [](const RunOutcome& o) { return !o.ok; }));
}

ExperimentReport run_experiment(const ExperimentConfig& config, const std::string& out_dir, int jobs) {
  fs::create_directories(out_dir);
  const int seeds = static_cast<int>(config.seeds.size());

  struct Instance {
    std::optional<ConsensusProblem> problem;
    std::optional<Reference> reference;
    std::string error;
  };
  std::vector<Instance> instances(config.seeds.size());
  parallel_for(seeds, jobs, [&](int i) {
    try {
      instances[i].problem = build_problem(config.problem, config.seeds[i], config.base_dir);
      instances[i].reference = compute_reference(*instances[i].problem, config.reference);
    } catch (const std::exception& e) {
      instances[i].error = e.what();
    }
  });

  const int runs = static_cast<int>(config.runs.size());
  ExperimentReport report;
  report.outcomes.resize(static_cast<std::size_t>(seeds * runs));
  parallel_for(seeds * runs, jobs, [&](int task) {
    const int si = task / runs;
    const RunSpec& spec = config.runs[task % runs];
    const std::uint64_t seed = config.seeds[si];
    RunOutcome& outcome = report.outcomes[task];
    outcome.run = run_name(spec, seed);
    const Instance& inst = instances[si];
    if (!inst.problem || !inst.reference) {
      outcome.error = "problem setup failed: " + inst.error;
      log_message(LogLevel::kError, outcome.run + ": " + outcome.error);
      return;
    }
    RunTrace trace;
    try {
      trace = execute_run(*inst.problem, spec, seed, config.bits_per_real, inst.reference->g_star);
      outcome.ok = true;
    } catch (const RunAborted& e) {
      trace = e.partial();
      outcome.error = e.what();
    } catch (const std::exception& e) {
      outcome.error = e.what();
      log_message(LogLevel::kError, outcome.run + ": " + outcome.error);
      return;
    }
    if (!outcome.ok) log_message(LogLevel::kError, outcome.run + ": " + outcome.error);
    const SummaryRow row = summary_row(outcome.run, spec.variant, trace, inst.reference->g_star);
    RunSidecar side;
    side.run = outcome.run;
    side.variant = is_fgor(spec) && spec.variant == "stochastic" ? "stochastic-fgor" : spec.variant;
    side.rule = to_string(spec.rule.kind);
    side.seed = seed;
    side.m = trace.m;
    side.n = trace.n;
    side.bits_per_real = trace.bits_per_real;
    side.max_iter = spec.max_iter;
    side.k0 = trace.k0;
    side.g_star = inst.reference->g_star;
    side.g_star_source = inst.reference->source;
    side.stop_reason = trace.stop_reason;
    side.warm_start_outside = trace.warm_start_outside;
    side.overshoot_corrected = trace.overshoot_corrected;
    side.trace_file = outcome.run + ".csv";
    side.k_star = row.k_star;
    side.bits_at_k_star = row.bits_at_k_star;
    side.config_json = spec.json_text;
    try {
      std::ostringstream csv;
      write_trace_csv(trace, csv);
      write_text_file((fs::path(out_dir) / side.trace_file).string(), csv.str());
      write_text_file((fs::path(out_dir) / (outcome.run + ".meta.json")).string(), sidecar_to_json(side));
      if (is_fgor(spec)) {
        FgorRay ray = consensus_ray(*inst.problem, spec.beta);
        if (spec.c) warm_start(ray, *spec.c);
        write_text_file((fs::path(out_dir) / (outcome.run + ".ray.json")).string(), ray_to_json(ray));
      }
    } catch (const std::exception& e) {
      outcome.ok = false;
      outcome.error = e.what();
      log_message(LogLevel::kError, outcome.run + ": " + outcome.error);
    }
    outcome.summary = row;
  });

  std::vector<SummaryRow> rows;
  for (const auto& o : report.outcomes)
    if (o.summary) rows.push_back(*o.summary);
  std::ostringstream summary;
  write_summary_csv(rows, summary);
  write_text_file((fs::path(out_dir) / "summary.csv").string(), summary.str());
  return report;
}

void write_summary_csv(const std::vector<SummaryRow>& rows, std::ostream& out) {
  out << "run,k_star,k0,bits_at_k_star,final_gap\n";
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const auto& r : rows) {
    out << r.run << ',';
    if (r.k_star) {
      out << *r.k_star;
    } else {
      out << '>' << r.epochs;
    }
    out << ',' << r.k0 << ',';
    if (r.bits_at_k_star) {
      out << *r.bits_at_k_star;
    } else {
      out << '>' << closed_form_bits(r.epochs, r.k0, r.m, r.n, r.bits_per_real);
    }
    out << ',' << r.final_gap << '\n';
  }
}

std::string bits_formula(int k, int k0, int m, int n, bool fgor) {
  const std::int64_t inside = fgor ? static_cast<std::int64_t>(std::min(k, k0)) * (m + 1) : 0;
  const std::int64_t outside = static_cast<std::int64_t>(fgor ? std::max(0, k - k0) : k) * n * (2 * m - 1);
  std::string s;
  if (fgor) s = std::to_string(inside) + "+";
  return s + std::to_string(outside) + "b";
}

std::vector<TableRow> recompute_table(const std::string& dir, double accuracy) {
  std::vector<fs::path> sidecars;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.size() > 10 && name.ends_with(".meta.json")) sidecars.push_back(entry.path());
  }
  std::sort(sidecars.begin(), sidecars.end());
  std::vector<TableRow> rows;
  for (const auto& path : sidecars) {
    const RunSidecar side = parse_sidecar(read_text_file(path.string()));
    if (!side.g_star) throw ConfigError("run '" + side.run + "' has no g_star reference in its sidecar");
    std::istringstream csv(read_text_file((path.parent_path() / side.trace_file).string()));
    RunTrace trace = read_trace_csv(csv, side.trace_file);
    trace.m = side.m;
    trace.n = side.n;
    trace.bits_per_real = side.bits_per_real;
    const TraceSummary s = summarize(trace, *side.g_star, accuracy);
    TableRow row;
    row.summary = summary_row(side.run, side.variant, trace, side.g_star);
    row.summary.k_star = s.k_star;
    row.summary.bits_at_k_star = s.bits_at_k_star;
    const bool fgor = side.variant == "fgor" || side.variant == "stochastic-fgor";
    const int k = s.k_star.value_or(row.summary.epochs);
    row.bits_formula = (s.k_star ? "" : ">") + bits_formula(k, trace.k0, side.m, side.n, fgor);
    const std::int64_t closed = closed_form_bits(k, trace.k0, side.m, side.n, side.bits_per_real);
    const std::int64_t recorded = k > 0 ? trace.records[static_cast<std::size_t>(k - 1)].bits_cum : 0;
    const bool online_accuracy = accuracy == 1e-5;
    row.matches_online = trace.k0 == side.k0 && closed == recorded &&
                         (!online_accuracy || (s.k_star == side.k_star && s.bits_at_k_star == side.bits_at_k_star));
    rows.push_back(row);
  }
  return rows;
}

std::string format_table(const std::vector<TableRow>& rows) {
  std::ostringstream out;
  out << std::left << std::setw(36) << "run" << std::setw(9) << "k*" << std::setw(7) << "k0" << std::setw(22) << "b*"
      << std::setw(16) << "bits" << "final gap\n";
  for (const auto& r : rows) {
    const auto& s = r.summary;
    const std::string k = s.k_star ? std::to_string(*s.k_star) : ">" + std::to_string(s.epochs);
    const std::string k0 = s.variant == "standard" || s.variant == "stochastic" ? "NA" : std::to_string(s.k0);
    const std::int64_t bits =
        closed_form_bits(s.k_star.value_or(s.epochs), s.k0, s.m, s.n, s.bits_per_real);
    std::ostringstream gap;
    gap << std::scientific << std::setprecision(3) << s.final_gap;
    out << std::setw(36) << s.run << std::setw(9) << k << std::setw(7) << k0 << std::setw(22) << r.bits_formula
        << std::setw(16) << ((s.k_star ? "" : ">") + std::to_string(bits)) << gap.str();
    if (!r.matches_online) out << "  (differs from online record)";
    out << '\n';
  }
  return out.str();
}

}  // namespace dualray
