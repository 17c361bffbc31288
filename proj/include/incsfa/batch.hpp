#pragma once

// Batch PCA and batch SFA used as reference solutions.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "incsfa/error.hpp"
#include "incsfa/signal.hpp"

namespace incsfa {

/// Stacks frames as the rows of a matrix.
inline Eigen::MatrixXd to_matrix(std::span<const Frame> frames) {
  if (frames.empty()) return {};
  Eigen::MatrixXd m(static_cast<Eigen::Index>(frames.size()), frames.front().size());
  for (std::size_t i = 0; i < frames.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = frames[i].transpose();
  return m;
}

inline Eigen::MatrixXd expand_rows(const Eigen::MatrixXd& x) {
  Eigen::MatrixXd out(x.rows(), static_cast<Eigen::Index>(expanded_dim(static_cast<std::size_t>(x.cols()))));
  for (Eigen::Index i = 0; i < x.rows(); ++i) out.row(i) = quadratic_expand(x.row(i).transpose()).transpose();
  return out;
}

struct EigenPairs {
  Eigen::VectorXd mean;
  Eigen::VectorXd values;   ///< descending
  Eigen::MatrixXd vectors;  ///< orthonormal columns matching values
};

namespace detail {
// Eigendecomposition of a symmetric matrix, eigenvalues descending. Each
// eigenvector is signed so its largest-magnitude entry is positive.
inline std::pair<Eigen::VectorXd, Eigen::MatrixXd> sym_eig_desc(const Eigen::MatrixXd& c) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c);
  if (es.info() != Eigen::Success) throw InvalidInput("eigendecomposition failed");
  Eigen::VectorXd values = es.eigenvalues().reverse();
  Eigen::MatrixXd vectors = es.eigenvectors().rowwise().reverse();
  for (Eigen::Index j = 0; j < vectors.cols(); ++j) {
    Eigen::Index arg = 0;
    vectors.col(j).cwiseAbs().maxCoeff(&arg);
    if (vectors(arg, j) < 0) vectors.col(j) *= -1.0;
  }
  return {values, vectors};
}
}  // namespace detail

/// Eigendecomposition of the sample covariance (divided by N) of the rows of x.
inline EigenPairs batch_pca(const Eigen::MatrixXd& x) {
  if (x.rows() < 2) throw InvalidInput("batch_pca: need at least 2 samples");
  EigenPairs out;
  out.mean = x.colwise().mean().transpose();
  const Eigen::MatrixXd centered = x.rowwise() - out.mean.transpose();
  const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(x.rows());
  auto [values, vectors] = detail::sym_eig_desc(cov);
  out.values = values.cwiseMax(0.0);
  out.vectors = std::move(vectors);
  return out;
}

struct BatchSfaModel {
  bool expand = false;
  Eigen::VectorXd mean;       ///< mean of the (expanded) input
  Eigen::MatrixXd whitening;  ///< columns map centered input to white coordinates
  Eigen::MatrixXd features;   ///< columns: unit slow features in white coordinates, slowest first
  Eigen::VectorXd delta;      ///< derivative second-moment eigenvalues of the returned features
  std::vector<std::string> warnings;

  std::size_t output_dim() const { return static_cast<std::size_t>(features.cols()); }
  std::size_t whitened_dim() const { return static_cast<std::size_t>(whitening.cols()); }

  Eigen::MatrixXd whiten(const Eigen::MatrixXd& x_raw) const {
    const Eigen::MatrixXd x = expand ? expand_rows(x_raw) : x_raw;
    return (x.rowwise() - mean.transpose()) * whitening;
  }
  Eigen::MatrixXd apply(const Eigen::MatrixXd& x_raw) const { return whiten(x_raw) * features; }
  Frame apply(const Frame& x_raw) const { return apply(Eigen::MatrixXd(x_raw.transpose())).row(0).transpose(); }
};

/// Batch SFA on a single contiguous sequence (rows are time steps).
///
/// Expands (optionally), centers, whitens with PCA, takes the forward
/// difference of the white signal and returns the J eigenvectors of its
/// second-moment matrix with the smallest eigenvalues. Directions whose
/// variance is below rank_tol times the largest are dropped with a warning;
/// max_whitened keeps only that many leading principal components.
inline BatchSfaModel batch_sfa(const Eigen::MatrixXd& x_raw, std::size_t J, bool expand,
                               std::optional<std::size_t> max_whitened = std::nullopt, double rank_tol = 1e-10) {
  if (x_raw.rows() < 3) throw InvalidInput("batch_sfa: need at least 3 samples");
  if (J == 0) throw InvalidInput("batch_sfa: J must be positive");
  BatchSfaModel model;
  model.expand = expand;
  const Eigen::MatrixXd x = expand ? expand_rows(x_raw) : x_raw;
  const EigenPairs pca = batch_pca(x);
  model.mean = pca.mean;

  const double top = pca.values.size() > 0 ? pca.values[0] : 0.0;
  Eigen::Index keep = 0;
  while (keep < pca.values.size() && pca.values[keep] > rank_tol * top && pca.values[keep] > 0.0) ++keep;
  if (keep < pca.values.size())
    model.warnings.push_back("batch_sfa: dropped " + std::to_string(pca.values.size() - keep) +
                             " near-null whitening directions");
  if (max_whitened) keep = std::min<Eigen::Index>(keep, static_cast<Eigen::Index>(*max_whitened));
  if (static_cast<std::size_t>(keep) < J) throw InvalidInput("batch_sfa: whitened rank below J");

  model.whitening = pca.vectors.leftCols(keep) * pca.values.head(keep).cwiseSqrt().cwiseInverse().asDiagonal();
  const Eigen::MatrixXd z = (x.rowwise() - model.mean.transpose()) * model.whitening;
  const Eigen::MatrixXd zdot = z.bottomRows(z.rows() - 1) - z.topRows(z.rows() - 1);
  const Eigen::MatrixXd second = zdot.transpose() * zdot / static_cast<double>(zdot.rows());
  auto [values, vectors] = detail::sym_eig_desc(second);
  const auto j = static_cast<Eigen::Index>(J);
  model.features = vectors.rightCols(j).rowwise().reverse();
  model.delta = values.tail(j).reverse();
  return model;
}

}  // namespace incsfa
