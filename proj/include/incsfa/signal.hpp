#pragma once

// Frame-level preprocessing: quadratic expansion, time embedding, running
// moments and clipping.

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "incsfa/error.hpp"

namespace incsfa {

using Frame = Eigen::VectorXd;

/// Components whose running variance falls below this are centered but not scaled.
inline constexpr double kVarianceFloor = 1e-8;

inline bool all_finite(const Frame& x) { return x.allFinite(); }

/// Output dimension of quadratic_expand for a d-dimensional input.
constexpr std::size_t expanded_dim(std::size_t d) { return d + d * (d + 1) / 2; }

/// Returns [x_1..x_d, x_1*x_1, x_1*x_2, ..., x_1*x_d, x_2*x_2, ..., x_d*x_d].
///
/// The monomial order is fixed (row-major upper triangle) and is part of the
/// serialized model contract.
inline Frame quadratic_expand(const Frame& x) {
  const Eigen::Index d = x.size();
  if (d == 0) throw InvalidInput("quadratic_expand: empty frame");
  Frame out(static_cast<Eigen::Index>(expanded_dim(static_cast<std::size_t>(d))));
  out.head(d) = x;
  Eigen::Index k = d;
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = i; j < d; ++j) out[k++] = x[i] * x[j];
  return out;
}

/// Sliding-window embedding: frame k is [s(k), ..., s(k + window - 1)].
inline std::vector<Frame> time_embed(std::span<const double> stream, std::size_t window) {
  if (window == 0) throw InvalidInput("time_embed: window must be positive");
  if (window > stream.size())
    throw InvalidInput("time_embed: window " + std::to_string(window) +
                       " exceeds stream length " + std::to_string(stream.size()));
  std::vector<Frame> frames;
  frames.reserve(stream.size() - window + 1);
  for (std::size_t k = 0; k + window <= stream.size(); ++k)
    frames.emplace_back(Eigen::Map<const Frame>(stream.data() + k, static_cast<Eigen::Index>(window)));
  return frames;
}

/// Limits each component to [lo, hi].
inline Frame clip(const Frame& z, double lo, double hi) {
  if (!(lo < hi)) throw InvalidInput("clip: lo must be below hi");
  return z.cwiseMax(lo).cwiseMin(hi);
}

/// Exponentially weighted running mean and per-component variance.
///
/// The first update adopts the sample as the mean with zero variance. The
/// variance update uses the mean as already updated in the same step.
struct RunningMoments {
  Frame mean;
  Frame variance;
  std::size_t count = 0;

  std::size_t dim() const { return static_cast<std::size_t>(mean.size()); }

  void update_mean(const Frame& x, double eta) {
    if (count == 0) {
      mean = x;
      variance = Frame::Zero(x.size());
      count = 1;
      return;
    }
    check_dim(x);
    mean = (1.0 - eta) * mean + eta * x;
    ++count;
  }

  void update_variance(const Frame& x, double eta) {
    check_dim(x);
    if (count < 2) return;
    variance = (1.0 - eta) * variance + eta * (x - mean).array().square().matrix();
  }

  /// Centers x and divides each component by its standard deviation, leaving
  /// components under kVarianceFloor unscaled.
  Frame normalize(const Frame& x, bool scale = true) const {
    check_dim(x);
    Frame u = x - mean;
    if (!scale) return u;
    for (Eigen::Index i = 0; i < u.size(); ++i)
      if (variance[i] >= kVarianceFloor) u[i] /= std::sqrt(variance[i]);
    return u;
  }

 private:
  void check_dim(const Frame& x) const {
    if (x.size() != mean.size())
      throw InvalidInput("RunningMoments: expected dim " + std::to_string(mean.size()) +
                         ", got " + std::to_string(x.size()));
  }
};

}  // namespace incsfa
