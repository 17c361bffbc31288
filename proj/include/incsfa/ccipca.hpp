#pragma once

// Candid covariance-free incremental PCA (CCIPCA).
//
// Each stored vector v_i estimates lambda_i * e_i: its direction is the i-th
// eigenvector of the input covariance and its norm the eigenvalue. Lower
// components learn on residuals with the higher components projected out.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "incsfa/error.hpp"
#include "incsfa/signal.hpp"

namespace incsfa {

/// Norm below which an eigenvector estimate is treated as absent.
inline constexpr double kZeroNormGuard = 1e-12;

/// Three-sectioned amnesic averaging parameters.
struct AmnesicSchedule {
  std::int64_t t1 = 20;
  std::int64_t t2 = 200;
  double c = 2.0;
  double r = 10000.0;

  void validate() const {
    if (!(0 < t1 && t1 < t2)) throw ConfigError("amnesic schedule: need 0 < t1 < t2");
    if (!(c >= 0.0)) throw ConfigError("amnesic schedule: need c >= 0");
    if (!(r > 0.0)) throw ConfigError("amnesic schedule: need r > 0");
  }
};

/// Amnesic parameter mu(t): 0 up to t1, ramps to c at t2, then grows as (t - t2) / r.
inline double amnesic_mu(std::uint64_t t, const AmnesicSchedule& s) {
  const auto ti = static_cast<double>(t);
  if (ti <= static_cast<double>(s.t1)) return 0.0;
  if (ti <= static_cast<double>(s.t2))
    return s.c * (ti - static_cast<double>(s.t1)) / static_cast<double>(s.t2 - s.t1);
  return s.c + (ti - static_cast<double>(s.t2)) / s.r;
}

/// Learning rate (1 + mu(t)) / t, capped at 1. Equals 1/t in the first
/// section and tends to 1/r as t grows.
inline double amnesic_rate(std::uint64_t t, const AmnesicSchedule& s) {
  if (t == 0) throw InvalidInput("amnesic_rate: t must be >= 1");
  return std::min(1.0, (1.0 + amnesic_mu(t, s)) / static_cast<double>(t));
}

/// Weight of each sample tau = 1..T in an average built with per-step rates
/// rate(tau) and retention 1 - rate(tau). Sums to one when rate(1) == 1.
template <typename RateFn>
std::vector<double> sample_weights(std::uint64_t T, RateFn&& rate) {
  std::vector<double> w(T);
  double retain = 1.0;
  for (std::uint64_t tau = T; tau >= 1; --tau) {
    const double eta = rate(tau);
    w[tau - 1] = eta * retain;
    retain *= 1.0 - eta;
  }
  return w;
}

/// Expected squared estimation error sum(rho^2) * trace for sample weights rho.
inline double expected_error_bound(std::span<const double> rho, double trace_estimate) {
  const double total = std::accumulate(rho.begin(), rho.end(), 0.0);
  if (std::abs(total - 1.0) > 1e-9)
    throw InvalidInput("expected_error_bound: weights must sum to 1, got " + std::to_string(total));
  double sq = 0.0;
  for (double r : rho) sq += r * r;
  return sq * trace_estimate;
}

/// Smallest K whose leading eigenvalue sum exceeds beta times the previous
/// total variance. Eigenvalues must be sorted descending. Returns at least 1.
inline std::size_t reduce_dim(std::span<const double> eigenvalues, double previous_total, double beta) {
  if (!(beta > 0.0 && beta < 1.0)) throw InvalidInput("reduce_dim: beta must lie in (0, 1)");
  if (eigenvalues.empty()) throw InvalidInput("reduce_dim: no eigenvalues");
  if (previous_total <= 0.0) return 1;
  double acc = 0.0;
  for (std::size_t k = 0; k < eigenvalues.size(); ++k) {
    acc += eigenvalues[k];
    if (acc / previous_total > beta) return k + 1;
  }
  return eigenvalues.size();
}

class PrincipalComponentSet {
 public:
  PrincipalComponentSet() = default;
  PrincipalComponentSet(std::size_t dim, std::size_t components)
      : vectors_(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(components))) {
    if (dim == 0 || components == 0) throw ConfigError("CCIPCA: dimension and component count must be positive");
    if (components > dim) throw ConfigError("CCIPCA: more components than input dimensions");
  }

  std::size_t dim() const { return static_cast<std::size_t>(vectors_.rows()); }
  std::size_t components() const { return static_cast<std::size_t>(vectors_.cols()); }
  std::size_t initialized() const { return initialized_; }
  bool ready() const { return initialized_ == components(); }
  std::uint64_t steps() const { return steps_; }

  /// Unnormalized estimates, one per column, in stored order.
  const Eigen::MatrixXd& vectors() const { return vectors_; }

  double eigenvalue(std::size_t i) const { return vectors_.col(static_cast<Eigen::Index>(i)).norm(); }

  Eigen::VectorXd eigenvalues() const { return vectors_.colwise().norm().transpose(); }

  /// Stored indices sorted by descending eigenvalue estimate; ties keep stored order.
  std::vector<Eigen::Index> descending_order() const {
    const Eigen::VectorXd lambda = eigenvalues();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(lambda.size()));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return lambda[a] > lambda[b]; });
    return order;
  }

  /// One CCIPCA step on a centered sample.
  ///
  /// While fewer than K components exist, a non-zero sample seeds the next
  /// one and nothing else changes. Afterwards every component takes a
  /// Hebbian step on its residual and deflates it for the next component.
  void update(const Frame& u, double eta) {
    check_dim(u);
    ++steps_;
    if (!ready()) {
      if (u.norm() > kZeroNormGuard) vectors_.col(static_cast<Eigen::Index>(initialized_++)) = u;
      return;
    }
    Frame residual = u;
    for (Eigen::Index i = 0; i < vectors_.cols(); ++i) {
      auto v = vectors_.col(i);
      const double norm = v.norm();
      if (norm > kZeroNormGuard) v = (1.0 - eta) * v + eta * (residual.dot(v) / norm) * residual;
      deflate(residual, v);
    }
  }

  /// The residual fed to each component (entry 0 is u itself, entry K the
  /// part of u outside all components) under the current estimates.
  std::vector<Frame> residual_chain(const Frame& u) const {
    check_dim(u);
    std::vector<Frame> chain;
    chain.reserve(components() + 1);
    chain.push_back(u);
    for (Eigen::Index i = 0; i < vectors_.cols(); ++i) {
      Frame next = chain.back();
      deflate(next, vectors_.col(i));
      chain.push_back(std::move(next));
    }
    return chain;
  }

  /// Per stored component i: (r_i . v_i) / |v_i|^1.5 with r_i the residual
  /// after deflating components 0..i-1, i.e. the coordinate whose variance
  /// the eigenvalue estimate |v_i| tracks, scaled to unit variance. Equals
  /// D V^T u when the vectors are orthogonal. Unseeded components give 0.
  Frame deflated_projections(const Frame& u) const {
    check_dim(u);
    Frame out = Frame::Zero(vectors_.cols());
    Frame residual = u;
    for (Eigen::Index i = 0; i < vectors_.cols(); ++i) {
      const double lambda = vectors_.col(i).norm();
      if (lambda <= kZeroNormGuard) continue;
      const double along = residual.dot(vectors_.col(i)) / lambda;
      out[i] = along / std::sqrt(lambda);
      residual -= along * (vectors_.col(i) / lambda);
    }
    return out;
  }

  /// Keeps only the listed stored components, in the given order.
  void retain(std::span<const Eigen::Index> keep) {
    Eigen::MatrixXd kept(vectors_.rows(), static_cast<Eigen::Index>(keep.size()));
    for (std::size_t j = 0; j < keep.size(); ++j) kept.col(static_cast<Eigen::Index>(j)) = vectors_.col(keep[j]);
    vectors_ = std::move(kept);
    initialized_ = std::min(initialized_, keep.size());
  }

  /// Restores raw state (deserialization).
  void assign(Eigen::MatrixXd vectors, std::size_t initialized, std::uint64_t steps) {
    vectors_ = std::move(vectors);
    initialized_ = initialized;
    steps_ = steps;
  }

 private:
  template <typename V>
  static void deflate(Frame& residual, const V& v) {
    const double norm = v.norm();
    if (norm <= kZeroNormGuard) return;
    const Frame dir = v / norm;
    residual -= residual.dot(dir) * dir;
  }

  void check_dim(const Frame& u) const {
    if (u.size() != vectors_.rows())
      throw InvalidInput("CCIPCA: expected dim " + std::to_string(vectors_.rows()) + ", got " +
                         std::to_string(u.size()));
  }

  Eigen::MatrixXd vectors_;
  std::size_t initialized_ = 0;
  std::uint64_t steps_ = 0;
};

enum class FloorPolicy {
  drop,  ///< omit components under the floor from the map
  fail,  ///< throw ConfigError
  zero,  ///< keep a zero row so the output dimension stays K
};

/// Linear map z = D V^T u, rows ordered by descending eigenvalue estimate.
struct WhiteningTransform {
  Eigen::MatrixXd matrix;             ///< rows x input dim
  std::vector<Eigen::Index> source;   ///< stored component index behind each row
  std::vector<Eigen::Index> dropped;  ///< stored components under the floor

  Frame apply(const Frame& u) const { return matrix * u; }
  std::size_t output_dim() const { return static_cast<std::size_t>(matrix.rows()); }
};

inline WhiteningTransform whitening_transform(const PrincipalComponentSet& pcs, double floor = kZeroNormGuard,
                                              FloorPolicy policy = FloorPolicy::drop) {
  WhiteningTransform wt;
  std::vector<Eigen::Index> rows;
  for (Eigen::Index i : pcs.descending_order()) {
    if (pcs.eigenvalue(static_cast<std::size_t>(i)) <= floor) {
      if (policy == FloorPolicy::fail)
        throw ConfigError("whitening: eigenvalue estimate " + std::to_string(i) + " below floor");
      wt.dropped.push_back(i);
      if (policy == FloorPolicy::drop) continue;
    }
    rows.push_back(i);
  }
  wt.matrix = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(pcs.dim()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto v = pcs.vectors().col(rows[r]);
    const double lambda = v.norm();
    if (lambda > floor) wt.matrix.row(static_cast<Eigen::Index>(r)) = v.transpose() / (lambda * std::sqrt(lambda));
  }
  wt.source = std::move(rows);
  return wt;
}

}  // namespace incsfa
