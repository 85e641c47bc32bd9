#include <iostream>
#include <string>
#include <thread>

#include "CLI11.hpp"
#include "dualray/errors.hpp"
#include "dualray/experiment.hpp"
#include "dualray/logging.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kValidation = 1;
constexpr int kRuntime = 2;
constexpr int kProperty = 3;

void install_sink(bool verbose) {
  dualray::set_log_sink([verbose](dualray::LogLevel level, const std::string& message) {
    if (level == dualray::LogLevel::kDebug && !verbose) return;
    if (level == dualray::LogLevel::kInfo && !verbose) return;
    const char* tag = level == dualray::LogLevel::kError     ? "error"
                      : level == dualray::LogLevel::kWarning ? "warning"
                                                             : "info";
    std::cerr << tag << ": " << message << '\n';
  });
}

int cmd_run(const std::string& config_path, std::string out_dir, int jobs, bool verbose) {
  dualray::ExperimentConfig config;
  try {
    config = dualray::load_experiment_config(config_path);
  } catch (const dualray::Error& e) {
    std::cerr << "invalid config: " << e.what() << '\n';
    return kValidation;
  }
  if (out_dir.empty()) out_dir = config.output_dir;
  if (jobs <= 0) jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  dualray::ExperimentReport report;
  try {
    report = dualray::run_experiment(config, out_dir, jobs);
  } catch (const std::exception& e) {
    std::cerr << "run failed: " << e.what() << '\n';
    return kRuntime;
  }
  for (const auto& o : report.outcomes) {
    if (!o.ok) {
      std::cerr << "FAILED " << o.run << ": " << o.error << '\n';
    } else if (verbose && o.summary) {
      std::cout << o.run << ": k* = " << (o.summary->k_star ? std::to_string(*o.summary->k_star) : ">K")
                << ", k0 = " << o.summary->k0 << '\n';
    }
  }
  std::cout << report.outcomes.size() - report.failures() << " of " << report.outcomes.size()
            << " runs completed; summary in " << out_dir << "/summary.csv\n";
  return report.failures() ? kRuntime : kOk;
}

int cmd_check(bool verbose, bool fault) {
  dualray::CheckOptions options;
  options.verbose = verbose;
  options.inject_adjoint_fault = fault;
  const auto results = dualray::run_checks(options, std::cout);
  for (const auto& r : results)
    if (!r.pass) return kProperty;
  return kOk;
}

int cmd_table(const std::string& dir) {
  std::vector<dualray::TableRow> rows;
  try {
    rows = dualray::recompute_table(dir);
  } catch (const dualray::ConfigError& e) {
    std::cerr << e.what() << '\n';
    return kValidation;
  } catch (const std::exception& e) {
    std::cerr << "table failed: " << e.what() << '\n';
    return kRuntime;
  }
  if (rows.empty()) {
    std::cerr << "no run sidecars in '" << dir << "'\n";
    return kValidation;
  }
  std::cout << dualray::format_table(rows);
  for (const auto& r : rows)
    if (!r.matches_online) return kProperty;
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dual decomposition with FGOR warm starts for consensus problems"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Print per-run and per-property details");

  std::string config_path, out_dir;
  int jobs = 1;
  auto* run = app.add_subcommand("run", "Execute an experiment config");
  run->add_option("-c,--config", config_path, "Experiment config (JSON)")->required();
  run->add_option("-o,--out", out_dir, "Output directory (overrides the config)");
  run->add_option("-j,--jobs", jobs, "Worker threads; 0 uses every core")->check(CLI::NonNegativeNumber);
  run->add_flag("-v,--verbose", verbose, "Print per-run details");

  bool fault = false;
  auto* check = app.add_subcommand("check", "Run the built-in property suite");
  check->add_flag("-v,--verbose", verbose, "Print margins for every property");
  check->add_flag("--inject-adjoint-fault", fault)->group("");

  std::string table_dir;
  auto* table = app.add_subcommand("table", "Recompute k*, k0 and b* from the traces of a run directory");
  table->add_option("dir", table_dir, "Run output directory");
  table->add_option("-o,--out", table_dir, "Run output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kValidation;
  }
  install_sink(verbose);

  if (*run) return cmd_run(config_path, out_dir, jobs, verbose);
  if (*check) return cmd_check(verbose, fault);
  if (table_dir.empty()) {
    std::cerr << "table: an output directory is required\n";
    return kValidation;
  }
  return cmd_table(table_dir);
}
