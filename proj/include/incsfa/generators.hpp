#pragma once

// Deterministic input streams for the reference experiments. Every generator
// is a pure function of its arguments.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "incsfa/error.hpp"
#include "incsfa/rng.hpp"
#include "incsfa/signal.hpp"

namespace incsfa {

/// n points evenly spaced over [lo, hi], both ends included.
inline std::vector<double> linspace(double lo, double hi, std::size_t n) {
  std::vector<double> t(n);
  for (std::size_t k = 0; k < n; ++k)
    t[k] = n == 1 ? lo : lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(n - 1);
  return t;
}

/// x1 = sin(t) + cos(11 t)^2, x2 = cos(11 t), t evenly spaced over [0, 2 pi].
inline std::vector<Frame> gen_simple(std::size_t n) {
  if (n < 2) throw InvalidInput("gen_simple: n must be >= 2");
  std::vector<Frame> out;
  out.reserve(n);
  for (double t : linspace(0.0, 2.0 * std::numbers::pi, n)) {
    const double c = std::cos(11.0 * t);
    out.push_back(Frame{{std::sin(t) + c * c, c}});
  }
  return out;
}

/// The hidden slow source sin(t) of gen_simple.
inline std::vector<double> simple_latent(std::size_t n) {
  std::vector<double> s;
  for (double t : linspace(0.0, 2.0 * std::numbers::pi, n)) s.push_back(std::sin(t));
  return s;
}

/// total_epochs repetitions of gen_simple(n_per_epoch), channels swapped from switch_epoch on.
inline std::vector<Frame> gen_switched(std::size_t n_per_epoch, std::size_t switch_epoch, std::size_t total_epochs) {
  const std::vector<Frame> base = gen_simple(n_per_epoch);
  std::vector<Frame> out;
  out.reserve(n_per_epoch * total_epochs);
  for (std::size_t e = 0; e < total_epochs; ++e)
    for (const Frame& f : base) out.push_back(e >= switch_epoch ? Frame{{f[1], f[0]}} : f);
  return out;
}

struct LogisticSeries {
  std::vector<double> x;
  std::vector<double> gamma;  ///< driving force at each step
};

/// x(k+1) = (3.6 + forcing * g(t_k)) x(k) (1 - x(k)) with g(t) = sin(10 pi t) + sin(22 pi t)
/// and t_k = k / n on [0, 1).
inline LogisticSeries gen_logistic(std::size_t n, double x0 = 0.6, double forcing = 0.13) {
  if (n == 0) throw InvalidInput("gen_logistic: n must be positive");
  LogisticSeries s;
  s.x.reserve(n);
  s.gamma.reserve(n);
  double x = x0;
  for (std::size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) / static_cast<double>(n);
    const double g = std::sin(10.0 * std::numbers::pi * t) + std::sin(22.0 * std::numbers::pi * t);
    if (!(x >= 0.0 && x <= 1.0)) throw InvalidInput("gen_logistic: trajectory left [0, 1] at step " + std::to_string(k));
    s.x.push_back(x);
    s.gamma.push_back(g);
    x = (3.6 + forcing * g) * x * (1.0 - x);
  }
  return s;
}

struct Bounds2 {
  double x_lo = 0.0, x_hi = 1.0, y_lo = 0.0, y_hi = 1.0;
  bool contains(const Eigen::Vector2d& p) const { return p.x() >= x_lo && p.x() <= x_hi && p.y() >= y_lo && p.y() <= y_hi; }
  Eigen::Vector2d center() const { return {0.5 * (x_lo + x_hi), 0.5 * (y_lo + y_hi)}; }
};

struct WalkConfig {
  std::size_t n = 50000;
  Eigen::Vector2d v_r{3.0, 2.5};  ///< per-axis noise standard deviation
  double m = 0.75;
  Bounds2 bounds{0.0, 80.0, 0.0, 60.0};
  std::uint64_t seed = 0;
  std::size_t max_retries = 100000;
};

/// Momentum random walk: a candidate p + m * v + (1 - m) * noise is redrawn,
/// halving v each time, until it lies inside the bounds. Starts at rest in the center.
inline std::vector<Frame> gen_random_walk(const WalkConfig& cfg) {
  const Bounds2& b = cfg.bounds;
  if (!(b.x_lo < b.x_hi && b.y_lo < b.y_hi)) throw InvalidInput("gen_random_walk: degenerate bounds");
  if (!(cfg.m >= 0.0 && cfg.m <= 1.0)) throw InvalidInput("gen_random_walk: m must lie in [0, 1]");
  Rng rng(cfg.seed);
  std::vector<Frame> out;
  out.reserve(cfg.n);
  Eigen::Vector2d prev = b.center();
  Eigen::Vector2d p = prev;
  for (std::size_t k = 0; k < cfg.n; ++k) {
    out.push_back(p);
    Eigen::Vector2d vel = p - prev;
    Eigen::Vector2d next;
    std::size_t tries = 0;
    while (true) {
      const Eigen::Vector2d noise{rng.gaussian() * cfg.v_r.x(), rng.gaussian() * cfg.v_r.y()};
      next = p + cfg.m * vel + (1.0 - cfg.m) * noise;
      if (b.contains(next)) break;
      vel /= 2.0;
      if (++tries > cfg.max_retries) throw InvalidInput("gen_random_walk: no valid step found");
    }
    prev = p;
    p = next;
  }
  return out;
}

/// Copy of stream with every channel of frame index set to value.
inline std::vector<Frame> inject_outlier(std::vector<Frame> stream, std::size_t index, double value) {
  if (index >= stream.size())
    throw InvalidInput("inject_outlier: index " + std::to_string(index) + " out of range " + std::to_string(stream.size()));
  stream[index].setConstant(value);
  return stream;
}

struct EpisodicConfig {
  std::size_t n_episodes = 50;
  std::size_t episode_len = 120;
  std::size_t dim = 24;
  double arm_period = 8.0;    ///< mean period of the fast distractor, in samples
  double noise = 0.05;
  double latent_gain = 1.0;
  std::uint64_t seed = 0;        ///< episode content
  std::uint64_t world_seed = 1;  ///< fixed mixing of sources into frames
};

struct EpisodicData {
  std::vector<std::vector<Frame>> episodes;
  /// Per episode and frame: the two binary latent states.
  std::vector<std::vector<std::array<int, 2>>> latents;
};

/// Two binary latents start at 0 and each flip to 1 once per episode, at
/// distinct random times, in random order. A fast oscillating "arm" and
/// white noise are mixed in with them through a fixed random matrix.
inline EpisodicData gen_episodic(const EpisodicConfig& cfg) {
  if (cfg.episode_len < 4) throw InvalidInput("gen_episodic: episode_len must be >= 4");
  if (cfg.dim < 6) throw InvalidInput("gen_episodic: dim must be >= 6");
  constexpr int kSources = 6;  // two latents, cos/sin of the arm angle and its double
  Rng world(cfg.world_seed);
  Eigen::MatrixXd mix(static_cast<Eigen::Index>(cfg.dim), kSources);
  for (Eigen::Index i = 0; i < mix.rows(); ++i)
    for (Eigen::Index j = 0; j < kSources; ++j) mix(i, j) = world.gaussian();
  mix.leftCols(2) *= cfg.latent_gain;

  Rng rng(cfg.seed);
  EpisodicData data;
  const std::size_t len = cfg.episode_len;
  for (std::size_t e = 0; e < cfg.n_episodes; ++e) {
    const auto lo = len / 5;
    const auto span = len - 2 * lo;
    std::size_t first = lo + static_cast<std::size_t>(rng.below(span));
    std::size_t second = first;
    while (second == first) second = lo + static_cast<std::size_t>(rng.below(span));
    if (second < first) std::swap(first, second);
    const bool a_first = rng.uniform() < 0.5;
    const std::size_t flip_a = a_first ? first : second;
    const std::size_t flip_b = a_first ? second : first;
    double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double omega = 2.0 * std::numbers::pi / (cfg.arm_period * rng.uniform(0.8, 1.25));

    std::vector<Frame> frames;
    std::vector<std::array<int, 2>> lat;
    for (std::size_t t = 0; t < len; ++t) {
      const int a = t >= flip_a ? 1 : 0;
      const int b = t >= flip_b ? 1 : 0;
      phase += omega;
      Eigen::Matrix<double, kSources, 1> s;
      s << a, b, std::cos(phase), std::sin(phase), std::cos(2 * phase), std::sin(2 * phase);
      Frame f = mix * s;
      for (Eigen::Index i = 0; i < f.size(); ++i) f[i] += cfg.noise * rng.gaussian();
      frames.push_back(std::move(f));
      lat.push_back({a, b});
    }
    data.episodes.push_back(std::move(frames));
    data.latents.push_back(std::move(lat));
  }
  return data;
}

struct BoardConfig {
  std::size_t n = 2000;
  std::size_t width = 16;
  std::size_t height = 16;
  double depth_lo = 1.0;
  double depth_hi = 3.0;
  double depth_start = 2.0;
  double v_r = 0.3;  ///< noise standard deviation of the 1-D depth walk
  double m = 0.75;
  /// Board half-extent in pixels at depth 1, as fractions of the image size.
  double half_w = 0.45;
  double half_h = 0.3;
  std::uint64_t seed = 0;
};

struct BoardStream {
  std::vector<Frame> frames;  ///< row-major images, values in [0, 1]
  std::vector<double> depth;
};

/// Renders an axis-aligned board centered in the image with area coverage
/// anti-aliasing. Its apparent size is inversely proportional to depth.
inline Frame render_board(std::size_t w, std::size_t h, double half_w_px, double half_h_px) {
  const double cx = 0.5 * static_cast<double>(w), cy = 0.5 * static_cast<double>(h);
  auto overlap = [](double a0, double a1, double b0, double b1) { return std::max(0.0, std::min(a1, b1) - std::max(a0, b0)); };
  Frame img(static_cast<Eigen::Index>(w * h));
  for (std::size_t r = 0; r < h; ++r) {
    const double oy = overlap(static_cast<double>(r), r + 1.0, cy - half_h_px, cy + half_h_px);
    for (std::size_t c = 0; c < w; ++c)
      img[static_cast<Eigen::Index>(r * w + c)] = oy * overlap(static_cast<double>(c), c + 1.0, cx - half_w_px, cx + half_w_px);
  }
  return img;
}

/// Board moving in depth by the 1-D momentum random walk.
inline BoardStream gen_moving_board(const BoardConfig& cfg) {
  if (!(cfg.depth_lo > 0.0 && cfg.depth_lo < cfg.depth_hi)) throw InvalidInput("gen_moving_board: invalid depth range");
  if (!(cfg.depth_start >= cfg.depth_lo && cfg.depth_start <= cfg.depth_hi))
    throw InvalidInput("gen_moving_board: depth_start outside range");
  if (cfg.width == 0 || cfg.height == 0) throw InvalidInput("gen_moving_board: empty image");
  Rng rng(cfg.seed);
  BoardStream out;
  double prev = cfg.depth_start, d = cfg.depth_start;
  for (std::size_t k = 0; k < cfg.n; ++k) {
    out.depth.push_back(d);
    out.frames.push_back(render_board(cfg.width, cfg.height, cfg.half_w * static_cast<double>(cfg.width) / d,
                                      cfg.half_h * static_cast<double>(cfg.height) / d));
    double vel = d - prev, next = d;
    for (std::size_t tries = 0;; ++tries) {
      next = d + cfg.m * vel + (1.0 - cfg.m) * cfg.v_r * rng.gaussian();
      if (next >= cfg.depth_lo && next <= cfg.depth_hi) break;
      vel /= 2.0;
      if (tries > 100000) throw InvalidInput("gen_moving_board: no valid step found");
    }
    prev = d;
    d = next;
  }
  return out;
}

}  // namespace incsfa
