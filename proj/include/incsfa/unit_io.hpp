#pragma once

// Binary model format of IncSfaUnit; the byte layout is documented in
// docs/model_format.md.

#include "incsfa/unit.hpp"

namespace incsfa {

namespace detail {
inline constexpr std::string_view kUnitMagic = "ISFA";

enum UnitFlags : std::uint32_t {
  kExpand = 1u << 0,
  kNormalizeVariance = 1u << 1,
  kClip = 1u << 2,
  kNormalizeFeatures = 1u << 3,
  kAdaptEta = 1u << 4,
  kHasPrevious = 1u << 5,
  kRandomInit = 1u << 6,
  kMeanSchedule = 1u << 7,
};

inline void write_schedule(ByteWriter& w, const AmnesicSchedule& s) {
  w.i64(s.t1);
  w.i64(s.t2);
  w.f64(s.c);
  w.f64(s.r);
}

inline AmnesicSchedule read_schedule(ByteReader& r) {
  AmnesicSchedule s;
  s.t1 = r.i64();
  s.t2 = r.i64();
  s.c = r.f64();
  s.r = r.f64();
  return s;
}
}  // namespace detail

inline std::vector<std::uint8_t> IncSfaUnit::save() const {
  using namespace detail;
  ByteWriter w;
  w.raw(kUnitMagic);
  w.u32(kFormatVersion);
  const std::size_t dim = config_.expanded_dim();
  w.u64(config_.input_dim);
  w.u64(dim);
  w.u64(config_.K);
  w.u64(k_);
  w.u64(config_.J);
  std::uint32_t flags = 0;
  if (config_.expand) flags |= kExpand;
  if (config_.normalize_variance) flags |= kNormalizeVariance;
  if (config_.clip) flags |= kClip;
  if (config_.normalize_features) flags |= kNormalizeFeatures;
  if (config_.adapt_eta) flags |= kAdaptEta;
  if (prev_z_) flags |= kHasPrevious;
  if (config_.mca_init == McaInit::random) flags |= kRandomInit;
  if (config_.mean_schedule) flags |= kMeanSchedule;
  w.u32(flags);
  w.u64(config_.config_hash);
  w.u64(config_.seed);

  write_schedule(w, config_.ccipca_schedule);
  write_schedule(w, config_.effective_mean_schedule());
  w.f64(config_.mca.eta_l);
  w.f64(config_.mca.eta_h);
  w.u64(config_.mca.T);
  w.f64(config_.clip_lo);
  w.f64(config_.clip_hi);
  w.f64(config_.gamma_eps_rel);
  w.f64(config_.gamma_eps_abs);
  w.f64(config_.reduce_beta);
  w.u64(config_.reduce_interval);
  w.u64(config_.adapt_start);
  w.f64(config_.slowness_period);

  w.u64(t_);
  w.u64(derivative_updates_);
  w.u64(episodes_);

  w.u64(moments_.count);
  if (moments_.count > 0) {
    w.f64s(moments_.mean);
    w.f64s(moments_.variance);
  }

  w.u64(pcs_.initialized());
  w.u64(pcs_.steps());
  w.f64s(pcs_.vectors().reshaped());
  for (Eigen::Index i : order_) w.u64(static_cast<std::uint64_t>(i));

  w.u64(gamma_.steps());
  w.f64s(gamma_.vector());

  w.u64(sfs_.initialized());
  w.u64(sfs_.steps());
  w.u64(sfs_.reinitializations());
  w.f64s(sfs_.weights().reshaped<Eigen::RowMajor>());
  w.str(sfs_.rng().state());

  if (prev_z_) w.f64s(*prev_z_);
  w.f64s(zdot_delta_);
  w.f64s(y_delta_);
  w.f64(eta_h_);
  w.f64(s_prev_);
  w.f64(last_total_);
  return w.finish();
}

inline IncSfaUnit IncSfaUnit::load(std::span<const std::uint8_t> bytes) {
  using namespace detail;
  ByteReader r(bytes);
  if (r.raw(kUnitMagic.size()) != kUnitMagic) throw FormatError("model: bad magic");
  const std::uint32_t version = r.u32();
  if (version != kFormatVersion)
    throw FormatError("model: unsupported version " + std::to_string(version) + " (expected " +
                      std::to_string(kFormatVersion) + ")");
  UnitConfig c;
  c.input_dim = r.u64();
  const std::size_t dim = r.u64();
  c.K = r.u64();
  const std::size_t k = r.u64();
  c.J = r.u64();
  const std::uint32_t flags = r.u32();
  c.expand = flags & kExpand;
  c.normalize_variance = flags & kNormalizeVariance;
  c.clip = flags & kClip;
  c.normalize_features = flags & kNormalizeFeatures;
  c.adapt_eta = flags & kAdaptEta;
  c.mca_init = (flags & kRandomInit) ? McaInit::random : McaInit::derivative;
  c.config_hash = r.u64();
  c.seed = r.u64();
  c.ccipca_schedule = read_schedule(r);
  const AmnesicSchedule mean_schedule = read_schedule(r);
  if (flags & kMeanSchedule) c.mean_schedule = mean_schedule;
  c.mca.eta_l = r.f64();
  c.mca.eta_h = r.f64();
  c.mca.T = r.u64();
  c.clip_lo = r.f64();
  c.clip_hi = r.f64();
  c.gamma_eps_rel = r.f64();
  c.gamma_eps_abs = r.f64();
  c.reduce_beta = r.f64();
  c.reduce_interval = r.u64();
  c.adapt_start = r.u64();
  c.slowness_period = r.f64();
  if (dim != c.expanded_dim()) throw FormatError("model: expanded dimension does not match header");
  if (k == 0 || k > c.K || c.J > k) throw FormatError("model: inconsistent component counts");
  try {
    c.validate();
  } catch (const ConfigError& e) {
    throw FormatError(std::string("model: invalid stored config: ") + e.what());
  }

  IncSfaUnit unit(c);
  unit.k_ = k;
  const auto ki = static_cast<Eigen::Index>(k);
  const auto ji = static_cast<Eigen::Index>(c.J);
  const auto di = static_cast<Eigen::Index>(dim);
  unit.t_ = r.u64();
  unit.derivative_updates_ = r.u64();
  unit.episodes_ = r.u64();

  unit.moments_.count = r.u64();
  if (unit.moments_.count > 0) {
    unit.moments_.mean = Frame(di);
    unit.moments_.variance = Frame(di);
    r.f64s(unit.moments_.mean);
    r.f64s(unit.moments_.variance);
  }

  const std::size_t pcs_init = r.u64();
  const std::uint64_t pcs_steps = r.u64();
  Eigen::MatrixXd vectors(di, ki);
  r.f64s(vectors.reshaped());
  if (pcs_init > k) throw FormatError("model: inconsistent CCIPCA state");
  unit.pcs_.assign(std::move(vectors), pcs_init, pcs_steps);
  unit.order_.resize(k);
  for (auto& i : unit.order_) {
    i = static_cast<Eigen::Index>(r.u64());
    if (i < 0 || i >= ki) throw FormatError("model: whitening order out of range");
  }

  const std::uint64_t gamma_steps = r.u64();
  Frame v1(ki);
  r.f64s(v1);
  unit.gamma_ = GammaEstimator(k, c.gamma_eps_rel, c.gamma_eps_abs);
  unit.gamma_.assign(std::move(v1), gamma_steps);

  const std::size_t sfs_init = r.u64();
  const std::uint64_t sfs_steps = r.u64();
  const std::uint64_t sfs_reinit = r.u64();
  Eigen::MatrixXd w(ji, ki);
  r.f64s(w.reshaped<Eigen::RowMajor>());
  Rng rng;
  rng.set_state(r.str());
  if (sfs_init > c.J) throw FormatError("model: inconsistent MCA state");
  unit.sfs_ = SlowFeatureSet(k, c.J, c.seed, c.mca_init);
  unit.sfs_.assign(std::move(w), sfs_init, sfs_steps, sfs_reinit, std::move(rng), c.mca_init);

  if (flags & kHasPrevious) {
    Frame prev(ki);
    r.f64s(prev);
    unit.prev_z_ = std::move(prev);
  }
  unit.zdot_delta_ = Frame(ki);
  r.f64s(unit.zdot_delta_);
  unit.y_delta_ = Frame(ji);
  r.f64s(unit.y_delta_);
  unit.eta_h_ = r.f64();
  unit.s_prev_ = r.f64();
  unit.last_total_ = r.f64();
  if (!r.at_end()) throw FormatError("model: trailing bytes after state");
  return unit;
}

}  // namespace incsfa
