#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dualray/data.hpp"
#include "dualray/engine.hpp"
#include "dualray/stepsize.hpp"

namespace dualray {

/// Where the problem of an experiment comes from. Generators are reseeded
/// with every seed of the experiment; file and inline problems are fixed.
struct ProblemSource {
  /// file | inline | quadratic | mixed_nonconvex | strong_duality_preset | valuation | csv
  std::string kind;
  std::string path;
  std::string inline_json;
  int m = 0;
  int n = 0;
  double box_radius = 1.0;
  OptimumRegime regime = OptimumRegime::kInterior;
  QuadraticSynthOptions synth;
  int m_convex = 1;
  /// valuation and csv: rows used (0 means all) and the constraint level d_bar.
  int rows = 0;
  double d_bar = 1.0;
  int target_column = 0;
  bool bias = true;
  bool header = false;
  bool standardize = true;
};

/// How g_star is obtained for a problem instance.
struct ReferenceSpec {
  /// auto | oracle | long_run | value
  std::string method = "auto";
  double value = 0.0;
  int iterations = 20000;
  StepsizeConfig rule{StepKind::kAdaptiveLocal, 1.0, 0.5, 10, std::nullopt};
};

struct RunSpec {
  std::string label;
  /// standard | fgor | stochastic
  std::string variant;
  StepsizeConfig rule;
  std::optional<double> c;
  double beta = 1.0;
  /// Defaults to rule.gamma0.
  std::optional<double> gamma_const;
  int max_iter = 1000;
  double eps = 0.0;
  /// Standard and stochastic-standard start; zero when empty.
  Vec lambda0;
  StochasticMode mode = StochasticMode::kStandard;
  int batch_size = 1;
  Sampling sampling = Sampling::kWithoutReplacement;
  /// The run entry as written in the config.
  std::string json_text = "{}";

  /// label, or variant-rule when no label is set.
  std::string stem() const;
};

struct ExperimentConfig {
  std::string name = "experiment";
  ProblemSource problem;
  std::vector<RunSpec> runs;
  std::vector<std::uint64_t> seeds;
  std::string output_dir = "out";
  int bits_per_real = 64;
  ReferenceSpec reference;
  /// Directory that relative paths resolve against.
  std::string base_dir = ".";
};

/// Throws ConfigError (or ParseError for malformed JSON) on an invalid config,
/// including an empty run list and duplicate run names.
ExperimentConfig parse_experiment_config(const std::string& json_text, const std::string& base_dir = ".");
ExperimentConfig load_experiment_config(const std::string& path);

/// Run name: stem-s<seed>.
std::string run_name(const RunSpec& run, std::uint64_t seed);

ConsensusProblem build_problem(const ProblemSource& source, std::uint64_t seed, const std::string& base_dir = ".");

struct Reference {
  double g_star = 0.0;
  std::string source;
};

/// oracle: f_star from brute_force_primal (equal to g_star under strong
/// duality). long_run: best dual value of a long standard run. auto uses the
/// oracle when the consensus Hessian is positive definite.
Reference compute_reference(const ConsensusProblem& problem, const ReferenceSpec& spec);

/// Polyak rules without their own target use g_star.
RunTrace execute_run(const ConsensusProblem& problem, const RunSpec& run, std::uint64_t seed, int bits_per_real,
                     std::optional<double> g_star = std::nullopt);

struct SummaryRow {
  std::string run;
  std::string variant;
  std::optional<int> k_star;
  /// Number of recorded epochs.
  int epochs = 0;
  int k0 = 0;
  int m = 0;
  int n = 0;
  int bits_per_real = 64;
  std::optional<std::int64_t> bits_at_k_star;
  double final_gap = 0.0;
};

struct RunOutcome {
  std::string run;
  bool ok = false;
  std::string error;
  std::optional<SummaryRow> summary;
};

struct ExperimentReport {
  std::vector<RunOutcome> outcomes;
  int failures() const;
};

/// Runs the matrix seeds x runs on a pool of jobs workers and writes
/// <run>.csv, <run>.meta.json (and <run>.ray.json for FGOR runs) plus
/// summary.csv into out_dir. Failed runs are reported, not thrown.
ExperimentReport run_experiment(const ExperimentConfig& config, const std::string& out_dir, int jobs = 1);

/// Columns run, k_star, k0, bits_at_k_star, final_gap; k_star is ">K" when
/// the accuracy is never reached.
void write_summary_csv(const std::vector<SummaryRow>& rows, std::ostream& out);

struct TableRow {
  SummaryRow summary;
  /// "105+6580b" style closed form, or "29470b" for standard runs.
  std::string bits_formula;
  /// The recomputed k_star, k0 and bits match the values stored online.
  bool matches_online = true;
};

/// Rebuilds the summary of every <run>.meta.json in dir from its raw trace.
/// Throws ConfigError naming the run when a sidecar has no g_star.
std::vector<TableRow> recompute_table(const std::string& dir, double accuracy = 1e-5);
std::string format_table(const std::vector<TableRow>& rows);
/// Symbolic bit count k0(m+1) + n(k-k0)(2m-1) b.
std::string bits_formula(int k, int k0, int m, int n, bool fgor);

struct CheckOptions {
  bool verbose = false;
  /// Negates the adjoint inside the adjoint identity check.
  bool inject_adjoint_fault = false;
};

struct CheckResult {
  std::string name;
  bool pass = false;
  /// Worst observed value and the threshold it is compared with.
  double observed = 0.0;
  double threshold = 0.0;
};

/// Built-in diagnostic suite; prints one line per property.
std::vector<CheckResult> run_checks(const CheckOptions& options, std::ostream& out);

}  // namespace dualray
