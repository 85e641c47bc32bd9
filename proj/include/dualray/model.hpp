#pragma once

#include <Eigen/Dense>

#include <string>
#include <variant>
#include <vector>

namespace dualray {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Symmetric l-infinity ball {z : ||z||_inf <= a} in R^n.
class BoxSet {
 public:
  BoxSet(double radius, int dim);

  double radius() const noexcept { return radius_; }
  int dim() const noexcept { return dim_; }

  /// Exact membership; no tolerance.
  bool contains(const Vec& z) const;
  Vec project(const Vec& z) const;
  /// Every coordinate equals +a or -a exactly.
  bool is_vertex(const Vec& z) const;
  /// Inside the box with at least one coordinate at +-a.
  bool on_boundary(const Vec& z) const;

 private:
  double radius_;
  int dim_;
};

enum class Convexity { kStrictlyConvex, kConcave, kIndefinite };

const char* to_string(Convexity c);
Convexity convexity_from_string(const std::string& s);

/// Classifies a symmetric matrix by the signs of its eigenvalues.
/// Strictly convex means every eigenvalue > tol; concave means every eigenvalue <= tol.
Convexity classify_hessian(const Mat& P, double tol = 1e-10);

/// f(y) = scale * (y'Py + q'y) + offset.
///
/// The convexity tag is supplied by the caller and checked against the
/// eigenvalues of P, so building a concave agent is always deliberate.
class QuadraticObjective {
 public:
  QuadraticObjective(Mat P, Vec q, double scale, Convexity tag, double offset = 0.0);

  int dim() const noexcept { return static_cast<int>(q_.size()); }
  double value(const Vec& y) const;
  Vec gradient(const Vec& y) const;

  const Mat& P() const noexcept { return P_; }
  const Vec& q() const noexcept { return q_; }
  double scale() const noexcept { return scale_; }
  double offset() const noexcept { return offset_; }
  Convexity convexity() const noexcept { return tag_; }
  bool is_diagonal() const noexcept { return diagonal_; }

  /// -(1/2) P^{-1} q; strictly convex objectives only.
  Vec unconstrained_minimizer() const;

 private:
  Mat P_;
  Vec q_;
  double scale_;
  double offset_;
  Convexity tag_;
  bool diagonal_;
};

/// f(y) = (1/N) sum_j (y'x_j - t_j)^2 over the rows of X.
class LeastSquaresObjective {
 public:
  LeastSquaresObjective(Mat features, Vec targets);

  int dim() const noexcept { return static_cast<int>(features_.cols()); }
  int samples() const noexcept { return static_cast<int>(features_.rows()); }
  double value(const Vec& y) const;
  Vec gradient(const Vec& y) const;

  const Mat& features() const noexcept { return features_; }
  const Vec& targets() const noexcept { return targets_; }
  /// X'X / N
  const Mat& gram() const noexcept { return gram_; }
  /// X't / N
  const Vec& moment() const noexcept { return moment_; }
  /// t't / N
  double target_energy() const noexcept { return target_energy_; }

 private:
  Mat features_;
  Vec targets_;
  Mat gram_;
  Vec moment_;
  double target_energy_;
};

using LocalObjective = std::variant<QuadraticObjective, LeastSquaresObjective>;

int objective_dim(const LocalObjective& f);
double evaluate(const LocalObjective& f, const Vec& y);
Vec gradient(const LocalObjective& f, const Vec& y);

/// Implicit chain consensus operator A in R^{n(m-1) x nm}; block row i is
/// [0 .. I -I .. 0], so (Ay)_i = y_i - y_{i+1}. The right-hand side b is zero.
class ChainCoupling {
 public:
  ChainCoupling(int m, int n);

  int agents() const noexcept { return m_; }
  int block() const noexcept { return n_; }
  int rows() const noexcept { return n_ * (m_ - 1); }
  int cols() const noexcept { return n_ * m_; }
  const Vec& rhs() const noexcept { return b_; }

  Vec apply(const Vec& y) const;
  Vec adjoint(const Vec& lambda) const;
  /// Solves (AA')w = v. AA' is block tridiagonal with 2I / -I blocks, so the
  /// system splits into n scalar tridiagonal solves.
  Vec gram_solve(const Vec& v) const;
  /// ||A||_2^2 by power iteration on AA'; exact value is 2 + 2cos(pi/m).
  double spectral_norm_sq(double rel_tol = 1e-8) const;
  /// Dense materialization, used only as a test oracle.
  Mat dense() const;

 private:
  int m_;
  int n_;
  Vec b_;
};

/// m agents sharing the box Z; f0(y) = (1/m) sum_i f_i(y_i).
class ConsensusProblem {
 public:
  ConsensusProblem(std::vector<LocalObjective> agents, BoxSet box);

  int m() const noexcept { return static_cast<int>(agents_.size()); }
  int n() const noexcept { return box_.dim(); }
  const BoxSet& box() const noexcept { return box_; }
  const std::vector<LocalObjective>& agents() const noexcept { return agents_; }
  const LocalObjective& agent(int i) const { return agents_.at(static_cast<std::size_t>(i)); }
  /// The 1/m factor in f0.
  double weight() const noexcept { return 1.0 / m(); }
  ChainCoupling coupling() const { return ChainCoupling(m(), n()); }

  double objective(const Vec& y) const;
  /// f0 at the consensus point [z; ...; z].
  double consensus_objective(const Vec& z) const;
  Vec replicate(const Vec& z) const;

 private:
  std::vector<LocalObjective> agents_;
  BoxSet box_;
};

/// Block i of a stacked vector with block size n.
inline auto block_of(const Vec& v, int i, int n) { return v.segment(static_cast<Eigen::Index>(i) * n, n); }
inline auto block_of(Vec& v, int i, int n) { return v.segment(static_cast<Eigen::Index>(i) * n, n); }

}  // namespace dualray
