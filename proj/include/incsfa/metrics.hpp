#pragma once

// Comparison metrics between feature outputs, reference solutions and latents.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "incsfa/error.hpp"

namespace incsfa {

/// Per column j: min over s in {+1, -1} of RMSE(s * a_j, b_j). Rows are samples.
inline Eigen::VectorXd rmse_sign_aligned(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw InvalidInput("rmse_sign_aligned: shape mismatch");
  if (a.rows() == 0) throw InvalidInput("rmse_sign_aligned: empty input");
  Eigen::VectorXd out(a.cols());
  const auto n = static_cast<double>(a.rows());
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    const double plus = (a.col(j) - b.col(j)).squaredNorm();
    const double minus = (a.col(j) + b.col(j)).squaredNorm();
    out[j] = std::sqrt(std::min(plus, minus) / n);
  }
  return out;
}

/// |w . w*| / (|w| |w*|); zero when either vector vanishes.
inline double direction_cosine(const Eigen::VectorXd& w, const Eigen::VectorXd& w_star) {
  if (w.size() != w_star.size()) throw InvalidInput("direction_cosine: size mismatch");
  const double denom = w.norm() * w_star.norm();
  if (denom == 0.0) return 0.0;
  return std::min(1.0, std::abs(w.dot(w_star)) / denom);
}

/// Mean squared forward difference.
inline double delta_value(std::span<const double> signal) {
  if (signal.size() < 2) throw InvalidInput("delta_value: need at least 2 samples");
  double acc = 0.0;
  for (std::size_t t = 1; t < signal.size(); ++t) {
    const double d = signal[t] - signal[t - 1];
    acc += d * d;
  }
  return acc / static_cast<double>(signal.size() - 1);
}

inline double slowness_from_delta(double delta, double period) { return period / (2.0 * std::numbers::pi) * std::sqrt(delta); }

/// (P / 2 pi) sqrt(Delta). Calibrated for unit-variance signals: a unit-variance
/// sine completing one period over P samples gives about 1.
inline double slowness_S(std::span<const double> signal, double period) {
  return slowness_from_delta(delta_value(signal), period);
}

/// Pearson correlation; zero when either signal is constant.
inline double correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size() || a.size() < 2) throw InvalidInput("correlation: need equal lengths >= 2");
  const Eigen::ArrayXd da = a.array() - a.mean();
  const Eigen::ArrayXd db = b.array() - b.mean();
  const double denom = std::sqrt((da * da).sum() * (db * db).sum());
  if (denom == 0.0) return 0.0;
  return (da * db).sum() / denom;
}

/// Fraction of points whose nearest class centroid is their own class.
/// Rows of points are samples; labels are in [0, classes).
inline double nearest_centroid_purity(const Eigen::MatrixXd& points, std::span<const int> labels) {
  if (static_cast<std::size_t>(points.rows()) != labels.size() || labels.empty())
    throw InvalidInput("nearest_centroid_purity: size mismatch");
  const int classes = *std::max_element(labels.begin(), labels.end()) + 1;
  Eigen::MatrixXd centroids = Eigen::MatrixXd::Zero(classes, points.cols());
  std::vector<double> counts(static_cast<std::size_t>(classes), 0.0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0) throw InvalidInput("nearest_centroid_purity: negative label");
    centroids.row(labels[i]) += points.row(static_cast<Eigen::Index>(i));
    counts[static_cast<std::size_t>(labels[i])] += 1.0;
  }
  for (int c = 0; c < classes; ++c)
    if (counts[static_cast<std::size_t>(c)] > 0) centroids.row(c) /= counts[static_cast<std::size_t>(c)];
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    int best = -1;
    double best_d = 0.0;
    for (int c = 0; c < classes; ++c) {
      if (counts[static_cast<std::size_t>(c)] == 0) continue;
      const double d = (points.row(static_cast<Eigen::Index>(i)) - centroids.row(c)).squaredNorm();
      if (best < 0 || d < best_d) {
        best = c;
        best_d = d;
      }
    }
    if (best == labels[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

/// Mean |direction cosine| over distinct pairs of rows.
inline double mean_pairwise_cosine(const Eigen::MatrixXd& rows) {
  double acc = 0.0;
  int pairs = 0;
  for (Eigen::Index i = 0; i < rows.rows(); ++i)
    for (Eigen::Index j = i + 1; j < rows.rows(); ++j) {
      acc += direction_cosine(rows.row(i).transpose(), rows.row(j).transpose());
      ++pairs;
    }
  return pairs ? acc / pairs : 0.0;
}

}  // namespace incsfa
