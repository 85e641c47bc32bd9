#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include "dualray/engine.hpp"
#include "dualray/fgor.hpp"
#include "dualray/model.hpp"

namespace dualray {

/// Problem files are JSON:
///
///   {"m": 2, "n": 2, "box_radius": 1.0,
///    "agents": [{"kind": "quadratic", "P": [[..], [..]], "q": [..],
///                "scale": 0.5, "convexity": "strictly_convex", "offset": 0},
///               {"kind": "least_squares", "csv_path": "rev.csv",
///                "target_column": 7, "bias": true, "header": true,
///                "standardize": true, "rows": [0, 46]},
///               {"kind": "least_squares", "features": [[..]], "targets": [..]}]}
///
/// Relative csv_path entries resolve against base_dir.
ConsensusProblem parse_problem(const std::string& json_text, const std::string& base_dir = ".");
ConsensusProblem load_problem(const std::string& path);
/// Least-squares agents are written inline as features/targets.
std::string problem_to_json(const ConsensusProblem& problem);

std::string ray_to_json(const FgorRay& ray);
FgorRay parse_ray(const std::string& json_text);

/// Columns k, g_val, primal_val, subgrad_norm, gamma, in_rfgor, bits_epoch,
/// bits_cum, plus grad_error when any record carries one.
void write_trace_csv(const RunTrace& trace, std::ostream& out);
/// Reads the records back; header fields of the trace (m, n, k0, ...) come
/// from the sidecar. k0 is set to the number of in-region records.
RunTrace read_trace_csv(std::istream& in, const std::string& name = "trace");

/// Per-run metadata written next to each trace.
struct RunSidecar {
  std::string run;
  std::string variant;
  std::string rule;
  std::uint64_t seed = 0;
  int m = 0;
  int n = 0;
  int bits_per_real = 64;
  int max_iter = 0;
  int k0 = 0;
  std::optional<double> g_star;
  std::string g_star_source;
  std::string stop_reason;
  bool warm_start_outside = false;
  bool overshoot_corrected = false;
  std::string trace_file;
  /// k_star and bits as recorded online, for the recompute check.
  std::optional<int> k_star;
  std::optional<std::int64_t> bits_at_k_star;
  /// The run entry of the experiment config, as JSON text.
  std::string config_json = "{}";
};

std::string sidecar_to_json(const RunSidecar& sidecar);
RunSidecar parse_sidecar(const std::string& json_text);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace dualray
