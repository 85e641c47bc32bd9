#include "dualray/io.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string_view>
#include <vector>

#include "dualray/data.hpp"
#include "dualray/errors.hpp"
#include "json.hpp"

namespace dualray {

using nlohmann::json;

namespace {

json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ParseError(what + ": " + e.what(), line, col);
  }
}

template <typename T>
T field(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw ConfigError(where + ": missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + ": field '" + key + "' has the wrong type");
  }
}

template <typename T>
T field_or(const json& j, const char* key, T fallback, const std::string& where) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  return field<T>(j, key, where);
}

const json& need(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw ConfigError(where + ": missing field '" + key + "'");
  return j.at(key);
}

Vec to_vec(const json& j, const std::string& where) {
  if (!j.is_array()) throw ConfigError(where + ": expected an array of numbers");
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ConfigError(where + ": entry " + std::to_string(i) + " is not a number");
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

Mat to_mat(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) throw ConfigError(where + ": expected a non-empty array of rows");
  const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
  Mat M(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < j.size(); ++i) {
    const Vec row = to_vec(j[i], where + " row " + std::to_string(i));
    if (static_cast<std::size_t>(row.size()) != cols) throw ConfigError(where + ": ragged rows");
    M.row(static_cast<Eigen::Index>(i)) = row.transpose();
  }
  return M;
}

json from_vec(const Vec& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

json from_mat(const Mat& M) {
  json out = json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) out.push_back(from_vec(M.row(i).transpose()));
  return out;
}

LocalObjective parse_agent(const json& a, int index, const std::string& base_dir) {
  const std::string where = "agent " + std::to_string(index);
  const std::string kind = field<std::string>(a, "kind", where);
  if (kind == "quadratic") {
    Mat P = to_mat(need(a, "P", where), where + " P");
    Vec q = to_vec(need(a, "q", where), where + " q");
    const double scale = field_or<double>(a, "scale", 1.0, where);
    const double offset = field_or<double>(a, "offset", 0.0, where);
    const Convexity tag = a.contains("convexity") ? convexity_from_string(field<std::string>(a, "convexity", where))
                                                  : classify_hessian(P);
    return QuadraticObjective(std::move(P), std::move(q), scale, tag, offset);
  }
  if (kind == "least_squares") {
    if (a.contains("features")) {
      return LeastSquaresObjective(to_mat(need(a, "features", where), where + " features"),
                                   to_vec(need(a, "targets", where), where + " targets"));
    }
    std::filesystem::path path = field<std::string>(a, "csv_path", where);
    if (path.is_relative()) path = std::filesystem::path(base_dir) / path;
    Dataset d = load_csv(path.string(), field<int>(a, "target_column", where), field_or<bool>(a, "bias", true, where),
                         field_or<bool>(a, "header", false, where));
    if (field_or<bool>(a, "standardize", false, where)) d = standardize(d);
    if (a.contains("rows")) {
      const auto rows = field<std::vector<int>>(a, "rows", where);
      if (rows.size() != 2) throw ConfigError(where + ": rows must be [lo, hi]");
      d = slice_rows(d, rows[0], rows[1]);
    }
    return LeastSquaresObjective(d.features, d.targets);
  }
  throw ConfigError(where + ": unknown kind '" + kind + "'");
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

template <typename T>
T parse_number(std::string_view cell, std::size_t row, std::size_t col, const std::string& name) {
  while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.remove_suffix(1);
  T value{};
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size()) {
    throw ParseError(name + ": row " + std::to_string(row) + ", column " + std::to_string(col) + ": '" +
                         std::string(cell) + "' is not a number",
                     row, col);
  }
  return value;
}

}  // namespace

ConsensusProblem parse_problem(const std::string& json_text, const std::string& base_dir) {
  const json j = parse_json(json_text, "problem");
  const std::string where = "problem";
  const int n = field<int>(j, "n", where);
  const double a = field<double>(j, "box_radius", where);
  if (!j.contains("agents") || !j.at("agents").is_array() || j.at("agents").empty())
    throw ConfigError("problem: 'agents' must be a non-empty array");
  std::vector<LocalObjective> agents;
  int index = 0;
  for (const auto& entry : j.at("agents")) agents.push_back(parse_agent(entry, index++, base_dir));
  if (j.contains("m") && field<int>(j, "m", where) != static_cast<int>(agents.size()))
    throw ConfigError("problem: m = " + std::to_string(field<int>(j, "m", where)) + " but " +
                      std::to_string(agents.size()) + " agents are listed");
  return ConsensusProblem(std::move(agents), BoxSet(a, n));
}

ConsensusProblem load_problem(const std::string& path) {
  const std::filesystem::path p(path);
  return parse_problem(read_text_file(path), p.has_parent_path() ? p.parent_path().string() : ".");
}

std::string problem_to_json(const ConsensusProblem& problem) {
  json j;
  j["m"] = problem.m();
  j["n"] = problem.n();
  j["box_radius"] = problem.box().radius();
  j["agents"] = json::array();
  for (const auto& agent : problem.agents()) {
    json a;
    if (const auto* quad = std::get_if<QuadraticObjective>(&agent)) {
      a["kind"] = "quadratic";
      a["P"] = from_mat(quad->P());
      a["q"] = from_vec(quad->q());
      a["scale"] = quad->scale();
      a["offset"] = quad->offset();
      a["convexity"] = to_string(quad->convexity());
    } else {
      const auto& ls = std::get<LeastSquaresObjective>(agent);
      a["kind"] = "least_squares";
      a["features"] = from_mat(ls.features());
      a["targets"] = from_vec(ls.targets());
    }
    j["agents"].push_back(std::move(a));
  }
  return j.dump(2);
}

std::string ray_to_json(const FgorRay& ray) {
  json j;
  j["y_bar"] = from_vec(ray.y_bar);
  j["mu_tilde"] = from_vec(ray.mu_tilde);
  j["eta_tilde"] = from_vec(ray.eta_tilde);
  j["beta"] = ray.beta;
  j["c"] = ray.c;
  j["lambda0"] = from_vec(ray.lambda0());
  return j.dump(2);
}

FgorRay parse_ray(const std::string& json_text) {
  const json j = parse_json(json_text, "ray");
  FgorRay ray;
  ray.y_bar = to_vec(need(j, "y_bar", "ray"), "ray y_bar");
  ray.mu_tilde = to_vec(need(j, "mu_tilde", "ray"), "ray mu_tilde");
  ray.eta_tilde = to_vec(need(j, "eta_tilde", "ray"), "ray eta_tilde");
  ray.beta = field<double>(j, "beta", "ray");
  ray.c = field<double>(j, "c", "ray");
  return ray;
}

void write_trace_csv(const RunTrace& trace, std::ostream& out) {
  bool with_error = false;
  for (const auto& r : trace.records) with_error = with_error || r.grad_error.has_value();
  out << "k,g_val,primal_val,subgrad_norm,gamma,in_rfgor,bits_epoch,bits_cum";
  if (with_error) out << ",grad_error";
  out << '\n';
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const auto& r : trace.records) {
    out << r.k << ',' << r.g_val << ',' << r.primal_val << ',' << r.subgrad_norm << ',' << r.gamma << ','
        << (r.in_rfgor ? 1 : 0) << ',' << r.bits_epoch << ',' << r.bits_cum;
    if (with_error) {
      out << ',';
      if (r.grad_error) out << *r.grad_error;
    }
    out << '\n';
  }
}

RunTrace read_trace_csv(std::istream& in, const std::string& name) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(name + ": empty trace", 1, 0);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split(line);
  static const char* expected[] = {"k", "g_val", "primal_val", "subgrad_norm", "gamma", "in_rfgor", "bits_epoch",
                                   "bits_cum"};
  if (header.size() < 8 || header.size() > 9) throw ParseError(name + ": unexpected header", 1, 0);
  for (std::size_t c = 0; c < 8; ++c) {
    if (header[c] != expected[c]) throw ParseError(name + ": unexpected column '" + std::string(header[c]) + "'", 1, c + 1);
  }
  const bool with_error = header.size() == 9;
  RunTrace trace;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    const auto cells = split(line);
    if (cells.size() != header.size())
      throw ParseError(name + ": row " + std::to_string(row) + " has " + std::to_string(cells.size()) + " cells", row,
                       0);
    IterationRecord r;
    r.k = parse_number<int>(cells[0], row, 1, name);
    r.g_val = parse_number<double>(cells[1], row, 2, name);
    r.primal_val = parse_number<double>(cells[2], row, 3, name);
    r.subgrad_norm = parse_number<double>(cells[3], row, 4, name);
    r.gamma = parse_number<double>(cells[4], row, 5, name);
    r.in_rfgor = parse_number<int>(cells[5], row, 6, name) != 0;
    r.bits_epoch = parse_number<std::int64_t>(cells[6], row, 7, name);
    r.bits_cum = parse_number<std::int64_t>(cells[7], row, 8, name);
    if (with_error && !cells[8].empty() && cells[8] != "\r") r.grad_error = parse_number<double>(cells[8], row, 9, name);
    if (r.in_rfgor) ++trace.k0;
    trace.records.push_back(r);
  }
  return trace;
}

std::string sidecar_to_json(const RunSidecar& s) {
  json j;
  j["run"] = s.run;
  j["variant"] = s.variant;
  j["rule"] = s.rule;
  j["seed"] = s.seed;
  j["m"] = s.m;
  j["n"] = s.n;
  j["bits_per_real"] = s.bits_per_real;
  j["K"] = s.max_iter;
  j["k0"] = s.k0;
  j["g_star"] = s.g_star ? json(*s.g_star) : json(nullptr);
  j["g_star_source"] = s.g_star_source;
  j["stop_reason"] = s.stop_reason;
  j["warm_start_outside"] = s.warm_start_outside;
  j["overshoot_corrected"] = s.overshoot_corrected;
  j["trace_file"] = s.trace_file;
  j["k_star"] = s.k_star ? json(*s.k_star) : json(nullptr);
  j["bits_at_k_star"] = s.bits_at_k_star ? json(*s.bits_at_k_star) : json(nullptr);
  j["config"] = parse_json(s.config_json, "sidecar config");
  return j.dump(2);
}

RunSidecar parse_sidecar(const std::string& json_text) {
  const json j = parse_json(json_text, "sidecar");
  RunSidecar s;
  s.run = field<std::string>(j, "run", "sidecar");
  const std::string where = "sidecar '" + s.run + "'";
  s.variant = field<std::string>(j, "variant", where);
  s.rule = field_or<std::string>(j, "rule", "", where);
  s.seed = field_or<std::uint64_t>(j, "seed", 0, where);
  s.m = field<int>(j, "m", where);
  s.n = field<int>(j, "n", where);
  s.bits_per_real = field<int>(j, "bits_per_real", where);
  s.max_iter = field_or<int>(j, "K", 0, where);
  s.k0 = field_or<int>(j, "k0", 0, where);
  if (j.contains("g_star") && !j.at("g_star").is_null()) s.g_star = field<double>(j, "g_star", where);
  s.g_star_source = field_or<std::string>(j, "g_star_source", "", where);
  s.stop_reason = field_or<std::string>(j, "stop_reason", "", where);
  s.warm_start_outside = field_or<bool>(j, "warm_start_outside", false, where);
  s.overshoot_corrected = field_or<bool>(j, "overshoot_corrected", false, where);
  s.trace_file = field<std::string>(j, "trace_file", where);
  if (j.contains("k_star") && !j.at("k_star").is_null()) s.k_star = field<int>(j, "k_star", where);
  if (j.contains("bits_at_k_star") && !j.at("bits_at_k_star").is_null())
    s.bits_at_k_star = field<std::int64_t>(j, "bits_at_k_star", where);
  if (j.contains("config")) s.config_json = j.at("config").dump();
  return s;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DomainError("cannot open '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DomainError("cannot write '" + path + "'");
  out << text;
  if (!out) throw DomainError("write failed for '" + path + "'");
}

}  // namespace dualray
