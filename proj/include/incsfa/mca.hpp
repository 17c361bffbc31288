#pragma once

// Incremental minor components analysis on the whitened derivative signal.
//
// Feature 1 follows the anti-Hebbian rule w <- (1 - eta) w - eta (zdot.w) zdot.
// Lower features add a lateral term gamma * sum_{j<i} (w_j.w_i) w_j that lifts
// the already-found minor directions above every derivative eigenvalue, so the
// next minor component becomes the minimum of the shifted problem.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>

#include "incsfa/ccipca.hpp"
#include "incsfa/error.hpp"
#include "incsfa/rng.hpp"
#include "incsfa/signal.hpp"

namespace incsfa {

/// Rate rising quadratically from eta_l at t = 0 to eta_h at t = T.
struct McaRateSchedule {
  double eta_l = 0.01;
  double eta_h = 0.01;
  std::uint64_t T = 0;  ///< 0 means a constant eta_h

  void validate() const {
    if (!(0.0 < eta_l && eta_l <= eta_h && eta_h <= 0.5))
      throw ConfigError("MCA rate schedule: need 0 < eta_l <= eta_h <= 0.5");
  }
};

inline double mca_rate(std::uint64_t t, const McaRateSchedule& s) {
  if (s.T == 0 || t > s.T) return s.eta_h;
  const double x = static_cast<double>(t) / static_cast<double>(s.T);
  return s.eta_l + (s.eta_h - s.eta_l) * x * x;
}

/// Largest stable rate of the raw minor-component rule: eta * lambda1 < 1/2.
inline double eta_bound(double lambda1) {
  if (!(lambda1 > 0.0)) throw InvalidInput("eta_bound: lambda1 must be positive");
  return 1.0 / (2.0 * lambda1);
}

/// Rescales a working rate when the slowness S of the fastest derivative
/// component changes, keeping eta proportional to S^-2.
inline double adapt_eta_from_slowness(double eta_old, double s_old, double s_new) {
  if (!(s_old > 0.0)) throw InvalidInput("adapt_eta_from_slowness: S_old must be positive");
  if (s_new < kZeroNormGuard) return eta_old;
  const double ratio = s_old / s_new;
  return eta_old * ratio * ratio;
}

/// Tracks the largest derivative eigenvalue with a single CCIPCA component
/// and derives the sequential-addition constant gamma = lambda1 + epsilon.
class GammaEstimator {
 public:
  GammaEstimator() = default;
  explicit GammaEstimator(std::size_t dim, double eps_rel = 0.1, double eps_abs = 1e-3)
      : v1_(Frame::Zero(static_cast<Eigen::Index>(dim))), eps_rel_(eps_rel), eps_abs_(eps_abs) {}

  void update(const Frame& zdot, double eta) {
    if (zdot.size() != v1_.size())
      throw InvalidInput("GammaEstimator: expected dim " + std::to_string(v1_.size()) + ", got " +
                         std::to_string(zdot.size()));
    ++steps_;
    const double norm = v1_.norm();
    if (steps_ == 1 || norm <= kZeroNormGuard) {
      v1_ = zdot;
      return;
    }
    v1_ = (1.0 - eta) * v1_ + eta * (zdot.dot(v1_) / norm) * zdot;
  }

  double lambda1() const { return v1_.norm(); }
  double epsilon() const { return std::max(eps_rel_ * lambda1(), eps_abs_); }
  double gamma() const { return lambda1() + epsilon(); }

  const Frame& vector() const { return v1_; }
  std::uint64_t steps() const { return steps_; }
  double eps_rel() const { return eps_rel_; }
  double eps_abs() const { return eps_abs_; }

  void assign(Frame v1, std::uint64_t steps) {
    v1_ = std::move(v1);
    steps_ = steps;
  }
  /// Reorders or drops derivative-space coordinates: new coordinate c was old
  /// coordinate keep[c].
  void retain(std::span<const Eigen::Index> keep) {
    Frame kept(static_cast<Eigen::Index>(keep.size()));
    for (std::size_t c = 0; c < keep.size(); ++c) kept[static_cast<Eigen::Index>(c)] = v1_[keep[c]];
    v1_ = std::move(kept);
  }

 private:
  Frame v1_;
  std::uint64_t steps_ = 0;
  double eps_rel_ = 0.1;
  double eps_abs_ = 1e-3;
};

enum class McaInit {
  derivative,  ///< seed feature t with the t-th derivative sample
  random,      ///< seed every feature with a random unit vector
};

/// J minor-component estimates of dimension K, one per row.
class SlowFeatureSet {
 public:
  SlowFeatureSet() = default;
  SlowFeatureSet(std::size_t dim, std::size_t features, std::uint64_t seed = 0, McaInit init = McaInit::derivative)
      : w_(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(features), static_cast<Eigen::Index>(dim))),
        rng_(seed),
        init_(init) {
    if (dim == 0 || features == 0) throw ConfigError("MCA: dimension and feature count must be positive");
    if (features > dim) throw ConfigError("MCA: more features than whitened dimensions");
  }

  std::size_t dim() const { return static_cast<std::size_t>(w_.cols()); }
  std::size_t features() const { return static_cast<std::size_t>(w_.rows()); }
  std::size_t initialized() const { return initialized_; }
  bool ready() const { return initialized_ == features(); }
  std::uint64_t steps() const { return steps_; }
  std::uint64_t reinitializations() const { return reinitializations_; }
  McaInit init_mode() const { return init_; }

  const Eigen::MatrixXd& weights() const { return w_; }
  auto feature(std::size_t i) const { return w_.row(static_cast<Eigen::Index>(i)); }

  /// y_j = w_j . z for every feature; rows not yet seeded give 0.
  Frame project(const Frame& z) const { return w_ * z; }

  /// One update on a derivative sample.
  ///
  /// With normalize set this is the retention/anti-Hebbian form followed by
  /// w_i <- w_i / |w_i|. Without it, the raw rule
  /// w_i <- 1.5 w_i - eta C_i w_i - eta (w_i.w_i) w_i with
  /// C_i = zdot zdot^T + gamma sum_{j<i} w_j w_j^T / (w_j.w_j).
  void update(const Frame& zdot, double gamma, double eta, bool normalize) {
    if (zdot.size() != w_.cols())
      throw InvalidInput("MCA: expected dim " + std::to_string(w_.cols()) + ", got " + std::to_string(zdot.size()));
    ++steps_;
    if (!ready()) {
      seed_next(zdot);
      return;
    }
    for (Eigen::Index i = 0; i < w_.rows(); ++i) {
      const Frame w = w_.row(i).transpose();
      Frame lateral = Frame::Zero(w.size());
      for (Eigen::Index j = 0; j < i; ++j) {
        const auto wj = w_.row(j).transpose();
        const double n2 = wj.squaredNorm();
        if (n2 > kZeroNormGuard) lateral += (wj.dot(w) / n2) * wj;
      }
      const Frame anti = zdot.dot(w) * zdot + gamma * lateral;
      Frame next = normalize ? Frame((1.0 - eta) * w - eta * anti)
                             : Frame(1.5 * w - eta * anti - eta * w.squaredNorm() * w);
      const double norm = next.norm();
      if (!(norm > kZeroNormGuard) || !next.allFinite()) {
        next = fallback_direction(zdot);
        ++reinitializations_;
      } else if (normalize) {
        next /= norm;
      }
      w_.row(i) = next.transpose();
    }
  }

  /// Rescales every feature to unit norm.
  void normalize_all() {
    for (Eigen::Index i = 0; i < w_.rows(); ++i) {
      const double n = w_.row(i).norm();
      if (n > kZeroNormGuard) w_.row(i) /= n;
    }
  }

  /// Drops derivative-space coordinates and renormalizes.
  void retain_coordinates(std::span<const Eigen::Index> keep) {
    Eigen::MatrixXd kept(w_.rows(), static_cast<Eigen::Index>(keep.size()));
    for (std::size_t c = 0; c < keep.size(); ++c) kept.col(static_cast<Eigen::Index>(c)) = w_.col(keep[c]);
    w_ = std::move(kept);
    normalize_all();
  }

  /// Applies a permutation of the whitened coordinates: new coordinate c
  /// was old coordinate perm[c].
  void permute_coordinates(std::span<const Eigen::Index> perm) {
    Eigen::MatrixXd p(w_.rows(), w_.cols());
    for (std::size_t c = 0; c < perm.size(); ++c) p.col(static_cast<Eigen::Index>(c)) = w_.col(perm[c]);
    w_ = std::move(p);
  }

  const Rng& rng() const { return rng_; }

  void assign(Eigen::MatrixXd w, std::size_t initialized, std::uint64_t steps, std::uint64_t reinits, Rng rng,
              McaInit init) {
    w_ = std::move(w);
    initialized_ = initialized;
    steps_ = steps;
    reinitializations_ = reinits;
    rng_ = std::move(rng);
    init_ = init;
  }

 private:
  void seed_next(const Frame& zdot) {
    if (init_ == McaInit::random) {
      for (Eigen::Index i = 0; i < w_.rows(); ++i) w_.row(i) = random_unit().transpose();
      initialized_ = features();
      return;
    }
    const double n = zdot.norm();
    w_.row(static_cast<Eigen::Index>(initialized_++)) = (n > kZeroNormGuard ? Frame(zdot / n) : random_unit()).transpose();
  }

  Frame fallback_direction(const Frame& zdot) {
    const double n = zdot.norm();
    return n > kZeroNormGuard ? Frame(zdot / n) : random_unit();
  }

  Frame random_unit() {
    Frame r(w_.cols());
    for (Eigen::Index k = 0; k < r.size(); ++k) r[k] = rng_.gaussian();
    return r / r.norm();
  }

  Eigen::MatrixXd w_;
  std::size_t initialized_ = 0;
  std::uint64_t steps_ = 0;
  std::uint64_t reinitializations_ = 0;
  Rng rng_;
  McaInit init_ = McaInit::derivative;
};

}  // namespace incsfa
