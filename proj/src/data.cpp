#include "dualray/data.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <string_view>

#include "dualray/errors.hpp"
#include "dualray/logging.hpp"
#include "dualray/subsolvers.hpp"

namespace dualray {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

double parse_cell(std::string_view cell, int row, int col) {
  cell = trim(cell);
  if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(value)) {
    throw ParseError("row " + std::to_string(row) + ", column " + std::to_string(col) + ": '" +
                         std::string(cell) + "' is not a number",
                     row, col);
  }
  return value;
}

Mat random_orthogonal(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss;
  Mat G(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) G(i, j) = gauss(rng);
  Eigen::HouseholderQR<Mat> qr(G);
  Mat Q = qr.householderQ();
  const Mat R = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < n; ++j)
    if (R(j, j) < 0.0) Q.col(j) *= -1.0;
  return Q;
}

Mat random_spd(int n, double eig_min, double condition, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Vec d(n);
  for (int j = 0; j < n; ++j) d[j] = eig_min * std::pow(condition, u(rng));
  d[0] = eig_min;
  if (n > 1) d[1] = eig_min * condition;
  const Mat Q = random_orthogonal(n, rng);
  Mat P = Q * d.asDiagonal() * Q.transpose();
  return 0.5 * (P + P.transpose());
}

Vec gaussian_vec(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss;
  Vec v(n);
  for (int j = 0; j < n; ++j) v[j] = gauss(rng);
  return v;
}

// Dense box QP in the consensus variable z for all-quadratic convex agents.
Vec constrained_consensus_optimum(const ConsensusProblem& p) {
  Mat P = Mat::Zero(p.n(), p.n());
  Vec c = Vec::Zero(p.n());
  for (const auto& f : p.agents()) {
    const auto& q = std::get<QuadraticObjective>(f);
    P += p.weight() * q.scale() * q.P();
    c += p.weight() * q.scale() * q.q();
  }
  return minimize_box_qp(P, c, p.box(), 1e-13);
}

}  // namespace

Dataset parse_csv(const std::string& text, int target_column, bool bias, bool header, const std::string& name) {
  std::istringstream in(text);
  std::string line;
  std::vector<std::vector<double>> rows;
  int line_no = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    if (header && line_no == 1) continue;
    std::vector<double> cells;
    std::string_view rest(line);
    int col = 1;
    while (true) {
      const auto comma = rest.find(',');
      cells.push_back(parse_cell(rest.substr(0, comma), line_no, col));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
      ++col;
    }
    if (width == 0) width = cells.size();
    if (cells.size() != width) {
      throw ParseError("row " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                           " columns, expected " + std::to_string(width),
                       line_no, static_cast<int>(cells.size()));
    }
    rows.push_back(std::move(cells));
  }
  if (rows.empty()) throw DomainError("csv '" + name + "' has no data rows");
  if (target_column < 0 || static_cast<std::size_t>(target_column) >= width) {
    throw DomainError("target column " + std::to_string(target_column) + " outside the " + std::to_string(width) +
                      " columns of '" + name + "'");
  }
  const int feat = static_cast<int>(width) - 1 + (bias ? 1 : 0);
  if (feat < 1) throw DomainError("csv '" + name + "' has no feature columns");
  Dataset d;
  d.name = name;
  d.has_bias = bias;
  d.features.resize(static_cast<Eigen::Index>(rows.size()), feat);
  d.targets.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    int f = 0;
    const auto ri = static_cast<Eigen::Index>(r);
    if (bias) d.features(ri, f++) = 1.0;
    for (std::size_t c = 0; c < width; ++c) {
      if (static_cast<int>(c) == target_column) d.targets[ri] = rows[r][c];
      else d.features(ri, f++) = rows[r][c];
    }
  }
  return d;
}

Dataset load_csv(const std::string& path, int target_column, bool bias, bool header) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str(), target_column, bias, header, path);
}

StandardizationStats fit_standardization(const Dataset& d) {
  if (d.rows() < 2) throw DomainError("standardization needs at least two rows");
  StandardizationStats st;
  st.first_column = d.has_bias ? 1 : 0;
  const double N = d.rows();
  st.feature_mean = d.features.colwise().mean().transpose();
  st.feature_std.resize(d.dim());
  for (int j = 0; j < d.dim(); ++j) {
    const double ss = (d.features.col(j).array() - st.feature_mean[j]).square().sum();
    st.feature_std[j] = std::sqrt(ss / (N - 1.0));
    if (j >= st.first_column && !(st.feature_std[j] > 0.0)) {
      throw DomainError("column " + std::to_string(j) + " of '" + d.name + "' has zero variance");
    }
  }
  st.target_mean = d.targets.mean();
  st.target_std = std::sqrt((d.targets.array() - st.target_mean).square().sum() / (N - 1.0));
  if (!(st.target_std > 0.0)) throw DomainError("target of '" + d.name + "' has zero variance");
  return st;
}

Dataset apply_standardization(const Dataset& d, const StandardizationStats& st) {
  if (st.feature_mean.size() != d.dim()) throw ShapeError("standardization statistics do not match the dataset");
  Dataset out = d;
  for (int j = st.first_column; j < d.dim(); ++j) {
    out.features.col(j) = (d.features.col(j).array() - st.feature_mean[j]) / st.feature_std[j];
  }
  out.targets = (d.targets.array() - st.target_mean) / st.target_std;
  out.standardized = true;
  return out;
}

Dataset standardize(const Dataset& d, StandardizationStats* stats) {
  StandardizationStats st = fit_standardization(d);
  Dataset out = apply_standardization(d, st);
  if (stats != nullptr) *stats = std::move(st);
  return out;
}

Dataset slice_rows(const Dataset& d, int lo, int hi) {
  if (lo < 0 || hi > d.rows() || lo >= hi) throw DomainError("row slice out of range");
  Dataset out = d;
  out.features = d.features.middleRows(lo, hi - lo);
  out.targets = d.targets.segment(lo, hi - lo);
  return out;
}

std::vector<LeastSquaresObjective> partition_agents(const Dataset& d, int m) {
  if (m < 1) throw DomainError("partition needs at least one agent");
  if (m > d.rows()) {
    throw DomainError("cannot split " + std::to_string(d.rows()) + " rows across " + std::to_string(m) + " agents");
  }
  const int shard = d.rows() / m;
  const int dropped = d.rows() - shard * m;
  if (dropped > 0) {
    log_message(LogLevel::kWarning, "partition of '" + d.name + "' drops the last " + std::to_string(dropped) +
                                        " of " + std::to_string(d.rows()) + " rows");
  }
  std::vector<LeastSquaresObjective> out;
  out.reserve(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    out.emplace_back(d.features.middleRows(i * shard, shard), d.targets.segment(i * shard, shard));
  }
  return out;
}

Dataset synthetic_valuation_dataset(int rows, std::uint64_t seed) {
  if (rows < 2) throw DomainError("synthetic dataset needs at least two rows");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> gauss;
  Dataset d;
  d.name = "synthetic_valuation";
  d.has_bias = true;
  d.features.resize(rows, 7);
  d.targets.resize(rows);
  for (int r = 0; r < rows; ++r) {
    const double date = 2012.67 + 0.92 * u(rng);
    const double age = 43.8 * u(rng);
    const double dist = std::exp(6.5 + 1.2 * gauss(rng));
    const double stores = std::floor(11.0 * u(rng));
    const double lat = 24.97 + 0.02 * gauss(rng) - 2e-6 * dist;
    const double lon = 121.53 + 0.015 * gauss(rng) - 3e-6 * dist;
    d.features.row(r) << 1.0, date, age, dist, stores, lat, lon;
    d.targets[r] = 42.0 + 4.5 * (date - 2013.0) - 0.27 * age - 4.8 * std::log(dist / 600.0) + 1.1 * stores +
                   150.0 * (lat - 24.97) + 6.0 * gauss(rng);
  }
  return d;
}

Vec unconstrained_consensus_optimum(const ConsensusProblem& problem) {
  Mat P = Mat::Zero(problem.n(), problem.n());
  Vec q = Vec::Zero(problem.n());
  for (const auto& f : problem.agents()) {
    const auto* quad = std::get_if<QuadraticObjective>(&f);
    if (quad == nullptr || quad->convexity() != Convexity::kStrictlyConvex) {
      throw DomainError("unconstrained optimum needs strictly convex quadratic agents");
    }
    P += quad->scale() * quad->P();
    q += quad->scale() * quad->q();
  }
  return -0.5 * P.llt().solve(q);
}

ConsensusProblem synth_quadratic(int m, int n, double a, std::uint64_t seed, OptimumRegime regime,
                                 const QuadraticSynthOptions& options) {
  if (m < 2 || n < 1 || !(a > 0.0)) throw DomainError("synth_quadratic: need m >= 2, n >= 1, a > 0");
  if (!(options.eig_min > 0.0) || options.condition < 1.0 || options.condition > 100.0) {
    throw DomainError("synth_quadratic: eig_min > 0 and condition in [1, 100] required");
  }
  std::mt19937_64 rng(seed);
  std::vector<Mat> Ps;
  std::vector<Vec> qs;
  for (int i = 0; i < m; ++i) {
    Ps.push_back(random_spd(n, options.eig_min, options.condition, rng));
    qs.push_back(options.eig_min * gaussian_vec(n, rng));
  }
  std::uniform_real_distribution<double> ratio_draw(regime == OptimumRegime::kInterior ? 0.2 : 1.5,
                                                    regime == OptimumRegime::kInterior ? 0.8 : 3.0);
  const double ratio = options.target_ratio > 0.0 ? options.target_ratio : ratio_draw(rng);
  if (regime == OptimumRegime::kInterior && ratio > 0.8) throw DomainError("interior target ratio above 0.8");
  if (regime == OptimumRegime::kBoundary && ratio <= 1.0) throw DomainError("boundary target ratio must exceed 1");

  Mat Psum = Mat::Zero(n, n);
  Vec qsum = Vec::Zero(n);
  for (int i = 0; i < m; ++i) {
    Psum += Ps[static_cast<std::size_t>(i)];
    qsum += qs[static_cast<std::size_t>(i)];
  }
  const Vec z = -0.5 * Psum.llt().solve(qsum);
  const double peak = z.cwiseAbs().maxCoeff();
  if (!(peak > 0.0)) throw Error("synth_quadratic: degenerate draw with z* = 0");
  const double rescale = ratio * a / peak;

  std::vector<LocalObjective> agents;
  for (int i = 0; i < m; ++i) {
    agents.emplace_back(QuadraticObjective(Ps[static_cast<std::size_t>(i)], rescale * qs[static_cast<std::size_t>(i)],
                                           1.0 / m, Convexity::kStrictlyConvex));
  }
  ConsensusProblem problem(std::move(agents), BoxSet(a, n));

  const Vec z_star = constrained_consensus_optimum(problem);
  const double z_peak = z_star.cwiseAbs().maxCoeff();
  if (regime == OptimumRegime::kInterior && !(z_peak <= 0.8 * a)) {
    throw Error("synth_quadratic: oracle found ||z*||_inf = " + std::to_string(z_peak) + " above 0.8a");
  }
  if (regime == OptimumRegime::kBoundary && std::abs(z_peak - a) > 1e-8) {
    throw Error("synth_quadratic: oracle found no active coordinate");
  }
  return problem;
}

ConsensusProblem synth_mixed_nonconvex(int m, int m_convex, int n, double a, std::uint64_t seed) {
  if (m < 2 || m_convex < 1 || m_convex > m || n < 1 || !(a > 0.0)) {
    throw DomainError("synth_mixed_nonconvex: need m >= 2, 1 <= m_convex <= m, n >= 1, a > 0");
  }
  std::mt19937_64 rng(seed);
  std::vector<LocalObjective> agents;
  for (int i = 0; i < m; ++i) {
    const bool convex = i < m_convex;
    Mat P = random_spd(n, 1.0, 10.0, rng);
    Vec q = 2.0 * gaussian_vec(n, rng);
    agents.emplace_back(QuadraticObjective(convex ? P : Mat(-P), q, 1.0,
                                           convex ? Convexity::kStrictlyConvex : Convexity::kConcave));
  }
  return ConsensusProblem(std::move(agents), BoxSet(a, n));
}

ConsensusProblem strong_duality_preset(int n, double a) {
  const Mat I = Mat::Identity(n, n);
  const Vec ones = Vec::Ones(n);
  std::vector<LocalObjective> agents;
  agents.emplace_back(QuadraticObjective(I / 16.0, ones, 1.0, Convexity::kStrictlyConvex, 5.0));
  agents.emplace_back(QuadraticObjective(-I, 2.0 * ones, 1.0, Convexity::kConcave, 2.0));
  return ConsensusProblem(std::move(agents), BoxSet(a, n));
}

ConsensusProblem constrain_regularized(const std::vector<LeastSquaresObjective>& agents, double d_bar) {
  if (!(d_bar > 0.0)) throw DomainError("d_bar must be positive");
  if (agents.empty()) throw DomainError("constrain_regularized: no agents");
  std::vector<LocalObjective> objs(agents.begin(), agents.end());
  const int n = agents.front().dim();
  return ConsensusProblem(std::move(objs), BoxSet(std::sqrt(d_bar), n));
}

}  // namespace dualray
