#pragma once

// A single incremental SFA unit: expansion, running centering, CCIPCA
// whitening, derivative, gamma tracking, slowness tracking and MCA, one
// sample at a time.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "incsfa/binary_io.hpp"
#include "incsfa/ccipca.hpp"
#include "incsfa/error.hpp"
#include "incsfa/mca.hpp"
#include "incsfa/signal.hpp"

namespace incsfa {

struct UnitConfig {
  std::size_t input_dim = 1;
  bool expand = false;
  bool normalize_variance = false;
  std::size_t K = 1;  ///< whitened (CCIPCA) dimension
  std::size_t J = 1;  ///< slow features
  AmnesicSchedule ccipca_schedule{};
  /// Rate schedule of the running mean and variance; follows ccipca_schedule when unset.
  std::optional<AmnesicSchedule> mean_schedule;
  McaRateSchedule mca{};
  bool normalize_features = true;
  McaInit mca_init = McaInit::derivative;
  bool clip = false;
  double clip_lo = -5.0;
  double clip_hi = 5.0;
  double gamma_eps_rel = 0.1;
  double gamma_eps_abs = 1e-3;
  /// Ratio of variance to keep when re-selecting K; 0 disables re-selection.
  double reduce_beta = 0.0;
  std::uint64_t reduce_interval = 1000;
  /// Rescale eta_h by (S_ref / S)^2 of the fastest derivative component once
  /// adapt_start derivative updates have passed.
  bool adapt_eta = false;
  std::uint64_t adapt_start = 1000;
  /// Window length P used to express Delta values as slowness S.
  double slowness_period = 100.0;
  std::uint64_t seed = 0;
  std::uint64_t config_hash = 0;

  std::size_t expanded_dim() const { return expand ? incsfa::expanded_dim(input_dim) : input_dim; }
  const AmnesicSchedule& effective_mean_schedule() const { return mean_schedule ? *mean_schedule : ccipca_schedule; }

  void validate() const {
    if (input_dim == 0) throw ConfigError("unit: input_dim must be positive");
    if (J == 0) throw ConfigError("unit: J must be at least 1");
    if (J > K) throw ConfigError("unit: J (" + std::to_string(J) + ") exceeds K (" + std::to_string(K) + ")");
    if (K > expanded_dim())
      throw ConfigError("unit: K (" + std::to_string(K) + ") exceeds input dimension " +
                        std::to_string(expanded_dim()));
    ccipca_schedule.validate();
    if (mean_schedule) mean_schedule->validate();
    mca.validate();
    if (clip && !(clip_lo < clip_hi)) throw ConfigError("unit: clip_lo must be below clip_hi");
    if (reduce_beta != 0.0 && !(reduce_beta > 0.0 && reduce_beta < 1.0))
      throw ConfigError("unit: reduce_beta must lie in (0, 1)");
    if (reduce_beta > 0.0 && reduce_interval == 0) throw ConfigError("unit: reduce_interval must be positive");
    if (!(slowness_period > 0.0)) throw ConfigError("unit: slowness_period must be positive");
    if (!(gamma_eps_abs > 0.0) || gamma_eps_rel < 0.0) throw ConfigError("unit: invalid gamma epsilon");
  }
};

struct SlownessReport {
  Eigen::VectorXd delta;      ///< running Delta of each output derivative
  Eigen::VectorXd slowness;   ///< (P / 2 pi) sqrt(Delta)
  Eigen::VectorXd zdot_delta; ///< running Delta of each whitened derivative component
};

class IncSfaUnit {
 public:
  static constexpr std::uint32_t kFormatVersion = 1;

  explicit IncSfaUnit(UnitConfig config) : config_(std::move(config)) {
    config_.validate();
    k_ = config_.K;
    pcs_ = PrincipalComponentSet(config_.expanded_dim(), k_);
    gamma_ = GammaEstimator(k_, config_.gamma_eps_rel, config_.gamma_eps_abs);
    sfs_ = SlowFeatureSet(k_, config_.J, config_.seed, config_.mca_init);
    order_.resize(k_);
    for (std::size_t i = 0; i < k_; ++i) order_[i] = static_cast<Eigen::Index>(i);
    zdot_delta_ = Frame::Zero(static_cast<Eigen::Index>(k_));
    y_delta_ = Frame::Zero(static_cast<Eigen::Index>(config_.J));
    eta_h_ = config_.mca.eta_h;
  }

  const UnitConfig& config() const { return config_; }
  std::size_t whitened_dim() const { return k_; }
  std::size_t output_dim() const { return config_.J; }
  std::uint64_t steps() const { return t_; }
  std::uint64_t derivative_updates() const { return derivative_updates_; }
  /// Samples processed without a predecessor (stream start and every episode start).
  std::uint64_t episodes() const { return episodes_; }
  bool has_previous() const { return prev_z_.has_value(); }

  const RunningMoments& moments() const { return moments_; }
  const PrincipalComponentSet& principal_components() const { return pcs_; }
  const GammaEstimator& gamma_estimator() const { return gamma_; }
  const SlowFeatureSet& slow_features() const { return sfs_; }
  /// Stored CCIPCA index behind each whitened coordinate.
  const std::vector<Eigen::Index>& whitening_order() const { return order_; }

  /// Eigenvalue estimates in whitening (descending) order.
  Eigen::VectorXd eigenvalues() const {
    Eigen::VectorXd out(static_cast<Eigen::Index>(k_));
    for (std::size_t c = 0; c < k_; ++c) out[static_cast<Eigen::Index>(c)] = pcs_.eigenvalue(static_cast<std::size_t>(order_[c]));
    return out;
  }

  /// Current MCA rate (after the rising schedule and any slowness adaptation).
  double mca_rate_now() const {
    if (config_.adapt_eta && derivative_updates_ > config_.adapt_start) return eta_h_;
    return mca_rate(derivative_updates_, config_.mca);
  }

  void set_normalize_features(bool on) { config_.normalize_features = on; }

  /// Processes one raw frame and returns the slow-feature output y (dim J).
  ///
  /// A frame with non-finite components is rejected before any state changes.
  Frame update(const Frame& x_raw) {
    check_input(x_raw);
    const Frame x = config_.expand ? quadratic_expand(x_raw) : x_raw;
    ++t_;
    const double eta_mean = amnesic_rate(t_, config_.effective_mean_schedule());
    moments_.update_mean(x, eta_mean);
    moments_.update_variance(x, eta_mean);
    const Frame u = moments_.normalize(x, config_.normalize_variance);

    pcs_.update(u, amnesic_rate(t_, config_.ccipca_schedule));
    maybe_reduce_dim();
    sync_order();
    Frame z = whiten(u);

    if (!prev_z_) ++episodes_;
    if (prev_z_) {
      const Frame zdot = z - *prev_z_;
      ++derivative_updates_;
      gamma_.update(zdot, amnesic_rate(gamma_.steps() + 1, config_.ccipca_schedule));
      const double eta = mca_rate_now();
      track(zdot_delta_, zdot.array().square().matrix(), eta);
      sfs_.update(zdot, gamma_.gamma(), eta, config_.normalize_features);
      track(y_delta_, sfs_.project(zdot).array().square().matrix(), eta);
      adapt_rate();
    }
    Frame y = sfs_.project(z);
    prev_z_ = std::move(z);
    return y;
  }

  /// Marks a stream discontinuity: the next sample updates the principal
  /// components but produces no derivative.
  void begin_episode() { prev_z_.reset(); }

  /// Applies the learned mapping without changing any state.
  Frame infer(const Frame& x_raw) const {
    if (t_ == 0) throw InvalidInput("infer: unit has not been trained");
    check_input(x_raw);
    const Frame x = config_.expand ? quadratic_expand(x_raw) : x_raw;
    return sfs_.project(whiten(moments_.normalize(x, config_.normalize_variance)));
  }

  /// Whitened (and clipped, if enabled) representation of a raw frame.
  Frame whitened(const Frame& x_raw) const {
    if (t_ == 0) throw InvalidInput("whitened: unit has not been trained");
    check_input(x_raw);
    const Frame x = config_.expand ? quadratic_expand(x_raw) : x_raw;
    return whiten(moments_.normalize(x, config_.normalize_variance));
  }

  SlownessReport slowness_report() const {
    const double scale = config_.slowness_period / (2.0 * std::numbers::pi);
    return {y_delta_, scale * y_delta_.cwiseSqrt(), zdot_delta_};
  }

  std::vector<std::uint8_t> save() const;
  static IncSfaUnit load(std::span<const std::uint8_t> bytes);

  friend bool operator==(const IncSfaUnit& a, const IncSfaUnit& b) { return a.save() == b.save(); }

 private:
  void check_input(const Frame& x) const {
    if (static_cast<std::size_t>(x.size()) != config_.input_dim)
      throw InvalidInput("unit: expected input dim " + std::to_string(config_.input_dim) + ", got " +
                         std::to_string(x.size()));
    if (!x.allFinite()) throw InvalidInput("unit: input frame has non-finite components");
  }

  static void track(Frame& acc, const Frame& sample, double eta) {
    acc = (1.0 - eta) * acc + eta * sample;
  }

  Frame whiten(const Frame& u) const {
    const Frame stored = pcs_.deflated_projections(u);
    Frame z(static_cast<Eigen::Index>(k_));
    for (std::size_t c = 0; c < k_; ++c) z[static_cast<Eigen::Index>(c)] = stored[order_[c]];
    if (config_.clip) z = clip(z, config_.clip_lo, config_.clip_hi);
    return z;
  }

  // Remaps every whitened-space quantity: new coordinate c was old coordinate map[c].
  void remap_coordinates(std::span<const Eigen::Index> map) {
    sfs_.permute_coordinates(map);
    gamma_.retain(map);
    auto pick = [&](const Frame& f) {
      Frame out(static_cast<Eigen::Index>(map.size()));
      for (std::size_t c = 0; c < map.size(); ++c) out[static_cast<Eigen::Index>(c)] = f[map[c]];
      return out;
    };
    zdot_delta_ = pick(zdot_delta_);
    if (prev_z_) prev_z_ = pick(*prev_z_);
  }

  // Keeps the whitened coordinates sorted by eigenvalue; when the estimates
  // swap rank the slow-feature state is permuted along so outputs stay continuous.
  void sync_order() {
    const std::vector<Eigen::Index> next = pcs_.descending_order();
    if (next == order_) return;
    std::vector<Eigen::Index> map(next.size());
    for (std::size_t c = 0; c < next.size(); ++c)
      map[c] = std::find(order_.begin(), order_.end(), next[c]) - order_.begin();
    remap_coordinates(map);
    order_ = next;
  }

  void maybe_reduce_dim() {
    if (config_.reduce_beta <= 0.0 || !pcs_.ready() || t_ % config_.reduce_interval != 0) return;
    const Eigen::VectorXd lambda = eigenvalues();
    std::vector<double> sorted(lambda.data(), lambda.data() + lambda.size());
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    const double total = lambda.sum();
    const double previous = last_total_;
    last_total_ = total;
    if (previous <= 0.0) return;
    const std::size_t k_new = std::max(config_.J, reduce_dim(sorted, previous, config_.reduce_beta));
    if (k_new >= k_) return;

    // Keep the k_new largest components, in stored order to preserve the residual chain.
    sync_order();
    std::vector<Eigen::Index> keep(order_.begin(), order_.begin() + static_cast<std::ptrdiff_t>(k_new));
    std::sort(keep.begin(), keep.end());
    pcs_.retain(keep);
    const std::vector<Eigen::Index> order_new = pcs_.descending_order();
    std::vector<Eigen::Index> map(k_new);
    for (std::size_t c = 0; c < k_new; ++c)
      map[c] = std::find(order_.begin(), order_.end(), keep[static_cast<std::size_t>(order_new[c])]) - order_.begin();
    remap_coordinates(map);
    sfs_.normalize_all();
    order_ = order_new;
    k_ = k_new;
  }

  void adapt_rate() {
    if (!config_.adapt_eta || derivative_updates_ < config_.adapt_start) return;
    const double s_now = config_.slowness_period / (2.0 * std::numbers::pi) * std::sqrt(zdot_delta_.maxCoeff());
    if (derivative_updates_ == config_.adapt_start) {
      eta_h_ = mca_rate(derivative_updates_, config_.mca);
    } else if (s_prev_ > 0.0) {
      eta_h_ = std::clamp(adapt_eta_from_slowness(eta_h_, s_prev_, s_now), 1e-9, 0.5);
    }
    s_prev_ = s_now;
  }

  UnitConfig config_;
  std::size_t k_ = 0;
  RunningMoments moments_;
  PrincipalComponentSet pcs_;
  std::vector<Eigen::Index> order_;
  GammaEstimator gamma_;
  SlowFeatureSet sfs_;
  std::optional<Frame> prev_z_;
  Frame zdot_delta_;
  Frame y_delta_;
  std::uint64_t t_ = 0;
  std::uint64_t derivative_updates_ = 0;
  std::uint64_t episodes_ = 0;
  double eta_h_ = 0.0;
  double s_prev_ = 0.0;
  double last_total_ = 0.0;
};

}  // namespace incsfa

#include "incsfa/unit_io.hpp"
