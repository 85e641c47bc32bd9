#include "dualray/model.hpp"

#include <cmath>
#include <string>

#include "dualray/errors.hpp"

namespace dualray {

namespace {

void require_length(const Vec& v, Eigen::Index expected, const char* what) {
  if (v.size() != expected) {
    throw ShapeError(std::string(what) + ": expected length " + std::to_string(expected) +
                     ", got " + std::to_string(v.size()));
  }
}

bool off_diagonal_zero(const Mat& P) {
  for (Eigen::Index j = 0; j < P.cols(); ++j) {
    for (Eigen::Index i = 0; i < P.rows(); ++i) {
      if (i != j && P(i, j) != 0.0) return false;
    }
  }
  return true;
}

}  // namespace

BoxSet::BoxSet(double radius, int dim) : radius_(radius), dim_(dim) {
  if (!(radius > 0.0) || !std::isfinite(radius)) throw DomainError("box radius must be positive");
  if (dim < 1) throw DomainError("box dimension must be positive");
}

bool BoxSet::contains(const Vec& z) const {
  require_length(z, dim_, "BoxSet::contains");
  return z.cwiseAbs().maxCoeff() <= radius_;
}

Vec BoxSet::project(const Vec& z) const {
  require_length(z, dim_, "BoxSet::project");
  return z.cwiseMax(-radius_).cwiseMin(radius_);
}

bool BoxSet::is_vertex(const Vec& z) const {
  require_length(z, dim_, "BoxSet::is_vertex");
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    if (std::abs(z[i]) != radius_) return false;
  }
  return true;
}

bool BoxSet::on_boundary(const Vec& z) const {
  return contains(z) && z.cwiseAbs().maxCoeff() == radius_;
}

const char* to_string(Convexity c) {
  switch (c) {
    case Convexity::kStrictlyConvex: return "strictly_convex";
    case Convexity::kConcave: return "concave";
    case Convexity::kIndefinite: return "indefinite";
  }
  return "unknown";
}

Convexity convexity_from_string(const std::string& s) {
  if (s == "strictly_convex") return Convexity::kStrictlyConvex;
  if (s == "concave") return Convexity::kConcave;
  if (s == "indefinite") return Convexity::kIndefinite;
  throw ConfigError("unknown convexity tag '" + s + "'");
}

Convexity classify_hessian(const Mat& P, double tol) {
  Eigen::SelfAdjointEigenSolver<Mat> eig(P, Eigen::EigenvaluesOnly);
  const Vec& ev = eig.eigenvalues();
  if (ev.minCoeff() > tol) return Convexity::kStrictlyConvex;
  if (ev.maxCoeff() <= tol) return Convexity::kConcave;
  return Convexity::kIndefinite;
}

QuadraticObjective::QuadraticObjective(Mat P, Vec q, double scale, Convexity tag, double offset)
    : P_(std::move(P)), q_(std::move(q)), scale_(scale), offset_(offset), tag_(tag) {
  if (P_.rows() != P_.cols() || P_.rows() != q_.size() || q_.size() == 0) {
    throw ShapeError("quadratic objective: P must be n x n and q of length n");
  }
  if (!(scale_ > 0.0)) throw DomainError("quadratic objective: scale must be positive");
  if ((P_ - P_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, P_.cwiseAbs().maxCoeff())) {
    throw DomainError("quadratic objective: P must be symmetric");
  }
  const Convexity actual = classify_hessian(P_);
  if (actual != tag_) {
    throw DomainError(std::string("quadratic objective: tag '") + to_string(tag_) +
                      "' does not match eigenvalues of P ('" + to_string(actual) + "')");
  }
  diagonal_ = off_diagonal_zero(P_);
}

double QuadraticObjective::value(const Vec& y) const {
  require_length(y, q_.size(), "QuadraticObjective::value");
  return scale_ * (y.dot(P_ * y) + q_.dot(y)) + offset_;
}

Vec QuadraticObjective::gradient(const Vec& y) const {
  require_length(y, q_.size(), "QuadraticObjective::gradient");
  return scale_ * (2.0 * (P_ * y) + q_);
}

Vec QuadraticObjective::unconstrained_minimizer() const {
  if (tag_ != Convexity::kStrictlyConvex) {
    throw DomainError("unconstrained minimizer requires a strictly convex objective");
  }
  return -0.5 * P_.llt().solve(q_);
}

LeastSquaresObjective::LeastSquaresObjective(Mat features, Vec targets)
    : features_(std::move(features)), targets_(std::move(targets)) {
  if (features_.rows() == 0 || features_.cols() == 0) {
    throw DomainError("least squares objective: no samples");
  }
  if (features_.rows() != targets_.size()) {
    throw ShapeError("least squares objective: feature rows and targets differ");
  }
  const double inv_n = 1.0 / static_cast<double>(features_.rows());
  gram_ = inv_n * (features_.transpose() * features_);
  moment_ = inv_n * (features_.transpose() * targets_);
  target_energy_ = inv_n * targets_.squaredNorm();
}

double LeastSquaresObjective::value(const Vec& y) const {
  require_length(y, features_.cols(), "LeastSquaresObjective::value");
  return (features_ * y - targets_).squaredNorm() / static_cast<double>(features_.rows());
}

Vec LeastSquaresObjective::gradient(const Vec& y) const {
  require_length(y, features_.cols(), "LeastSquaresObjective::gradient");
  return (2.0 / static_cast<double>(features_.rows())) *
         (features_.transpose() * (features_ * y - targets_));
}

int objective_dim(const LocalObjective& f) {
  return std::visit([](const auto& o) { return o.dim(); }, f);
}

double evaluate(const LocalObjective& f, const Vec& y) {
  return std::visit([&](const auto& o) { return o.value(y); }, f);
}

Vec gradient(const LocalObjective& f, const Vec& y) {
  return std::visit([&](const auto& o) { return o.gradient(y); }, f);
}

ChainCoupling::ChainCoupling(int m, int n) : m_(m), n_(n) {
  if (m < 2) throw DomainError("chain coupling needs at least two agents");
  if (n < 1) throw DomainError("chain coupling needs a positive block size");
  b_ = Vec::Zero(rows());
}

Vec ChainCoupling::apply(const Vec& y) const {
  require_length(y, cols(), "ChainCoupling::apply");
  Vec out(rows());
  for (int i = 0; i + 1 < m_; ++i) {
    block_of(out, i, n_) = block_of(y, i, n_) - block_of(y, i + 1, n_);
  }
  return out;
}

Vec ChainCoupling::adjoint(const Vec& lambda) const {
  require_length(lambda, rows(), "ChainCoupling::adjoint");
  Vec out = Vec::Zero(cols());
  for (int i = 0; i + 1 < m_; ++i) {
    block_of(out, i, n_) += block_of(lambda, i, n_);
    block_of(out, i + 1, n_) -= block_of(lambda, i, n_);
  }
  return out;
}

Vec ChainCoupling::gram_solve(const Vec& v) const {
  require_length(v, rows(), "ChainCoupling::gram_solve");
  const int len = m_ - 1;
  Vec w(rows());
  // Thomas algorithm on tridiag(-1, 2, -1), shared by every coordinate.
  std::vector<double> cprime(static_cast<std::size_t>(len));
  std::vector<double> denom(static_cast<std::size_t>(len));
  denom[0] = 2.0;
  cprime[0] = -1.0 / 2.0;
  for (int i = 1; i < len; ++i) {
    denom[i] = 2.0 + cprime[i - 1];
    cprime[i] = -1.0 / denom[i];
  }
  std::vector<double> d(static_cast<std::size_t>(len));
  for (int j = 0; j < n_; ++j) {
    d[0] = v[j] / denom[0];
    for (int i = 1; i < len; ++i) d[i] = (v[i * n_ + j] + d[i - 1]) / denom[i];
    w[(len - 1) * n_ + j] = d[len - 1];
    for (int i = len - 2; i >= 0; --i) w[i * n_ + j] = d[i] - cprime[i] * w[(i + 1) * n_ + j];
  }
  return w;
}

double ChainCoupling::spectral_norm_sq(double rel_tol) const {
  Vec v(rows());
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = 1.0 + 0.5 * std::sin(1.0 + static_cast<double>(i));
  v.normalize();
  double rho = 0.0;
  constexpr int kMaxIter = 1000000;
  for (int it = 0; it < kMaxIter; ++it) {
    Vec w = apply(adjoint(v));
    rho = v.dot(w);
    const double residual = (w - rho * v).norm();
    if (residual <= rel_tol * rho) return rho;
    v = w / w.norm();
  }
  return rho;
}

Mat ChainCoupling::dense() const {
  Mat A = Mat::Zero(rows(), cols());
  for (int i = 0; i + 1 < m_; ++i) {
    for (int j = 0; j < n_; ++j) {
      A(i * n_ + j, i * n_ + j) = 1.0;
      A(i * n_ + j, (i + 1) * n_ + j) = -1.0;
    }
  }
  return A;
}

ConsensusProblem::ConsensusProblem(std::vector<LocalObjective> agents, BoxSet box)
    : agents_(std::move(agents)), box_(box) {
  if (agents_.size() < 2) throw DomainError("consensus problem needs at least two agents");
  for (const auto& f : agents_) {
    if (objective_dim(f) != box_.dim()) {
      throw ShapeError("consensus problem: agent dimension differs from the box dimension");
    }
  }
}

double ConsensusProblem::objective(const Vec& y) const {
  require_length(y, static_cast<Eigen::Index>(m()) * n(), "ConsensusProblem::objective");
  double total = 0.0;
  for (int i = 0; i < m(); ++i) total += evaluate(agents_[i], Vec(block_of(y, i, n())));
  return weight() * total;
}

double ConsensusProblem::consensus_objective(const Vec& z) const {
  require_length(z, n(), "ConsensusProblem::consensus_objective");
  double total = 0.0;
  for (const auto& f : agents_) total += evaluate(f, z);
  return weight() * total;
}

Vec ConsensusProblem::replicate(const Vec& z) const {
  require_length(z, n(), "ConsensusProblem::replicate");
  Vec y(static_cast<Eigen::Index>(m()) * n());
  for (int i = 0; i < m(); ++i) block_of(y, i, n()) = z;
  return y;
}

}  // namespace dualray
