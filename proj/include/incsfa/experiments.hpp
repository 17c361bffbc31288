#pragma once

// Named reference experiments. Each runner is a pure function of its merged
// configuration and returns metrics, plot-ready tables and the trained model.

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "incsfa/batch.hpp"
#include "incsfa/config.hpp"
#include "incsfa/csv.hpp"
#include "incsfa/error.hpp"
#include "incsfa/generators.hpp"
#include "incsfa/hierarchy.hpp"
#include "incsfa/metrics.hpp"
#include "incsfa/rng.hpp"
#include "incsfa/signal.hpp"
#include "incsfa/unit.hpp"
#include "incsfa/unit_io.hpp"

namespace incsfa {

struct Table {
  std::vector<std::string> header;
  std::vector<Frame> rows;

  void add(std::initializer_list<double> values) {
    Frame f(static_cast<Eigen::Index>(values.size()));
    Eigen::Index i = 0;
    for (double v : values) f[i++] = v;
    add(f);
  }
  void add(const Frame& row) {
    if (static_cast<std::size_t>(row.size()) != header.size()) throw InvalidInput("table: row width differs from header");
    rows.push_back(row);
  }
};

struct ExperimentResult {
  std::string name;
  Json config;  ///< merged configuration the run used
  std::uint64_t hash = 0;
  std::uint64_t seed = 0;
  Json metrics;
  std::vector<std::pair<std::string, Table>> tables;
  std::string model_kind;  ///< "unit" or "network"
  std::vector<std::uint8_t> model;
};

/// Cosine between an oracle feature and the direction a learned output takes
/// in the oracle's whitened space: w = E[z* (y - mean y)] over the frames.
inline double cross_basis_cosine(const BatchSfaModel& oracle, const Eigen::MatrixXd& frames, const Eigen::VectorXd& y,
                                 Eigen::Index feature) {
  if (frames.rows() != y.size()) throw InvalidInput("cross_basis_cosine: length mismatch");
  const Eigen::MatrixXd z = oracle.whiten(frames);
  const Eigen::VectorXd yc = y.array() - y.mean();
  const Eigen::VectorXd w = z.transpose() * yc / static_cast<double>(y.size());
  return direction_cosine(w, oracle.features.col(feature));
}

/// One row per frame of unit outputs.
inline Eigen::MatrixXd infer_rows(const IncSfaUnit& unit, std::span<const Frame> frames) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(frames.size()), static_cast<Eigen::Index>(unit.output_dim()));
  for (std::size_t i = 0; i < frames.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = unit.infer(frames[i]).transpose();
  return out;
}

namespace detail {

inline Json vec_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

inline UnitConfig unit_from(const Json& cfg, std::uint64_t hash, std::uint64_t seed) {
  UnitConfig u = unit_from_json(cfg.at("unit"));
  u.seed = seed;
  u.config_hash = hash;
  u.validate();
  return u;
}

inline Json unit_json(std::size_t input_dim, bool expand, std::size_t K, std::size_t J, AmnesicSchedule ccipca,
                      std::optional<AmnesicSchedule> mean, double eta, bool normalize_variance) {
  UnitConfig u;
  u.input_dim = input_dim;
  u.expand = expand;
  u.K = K;
  u.J = J;
  u.ccipca_schedule = ccipca;
  u.mean_schedule = mean;
  u.mca = {eta, eta, 0};
  u.normalize_variance = normalize_variance;
  Json j = to_json(u);
  j.erase("seed");
  return j;
}

inline constexpr AmnesicSchedule kPlainMean{20, 200, 0.0, 1e12};
inline constexpr AmnesicSchedule kAdaptSchedule{20, 200, 4.0, 5000.0};
inline constexpr AmnesicSchedule kSlowSchedule{20, 200, 2.0, 10000.0};

inline std::vector<Frame> repeat(const std::vector<Frame>& epoch, std::size_t times) {
  std::vector<Frame> out;
  out.reserve(epoch.size() * times);
  for (std::size_t e = 0; e < times; ++e) out.insert(out.end(), epoch.begin(), epoch.end());
  return out;
}

inline std::vector<double> column(const Eigen::MatrixXd& m, Eigen::Index c) {
  return std::vector<double>(m.col(c).data(), m.col(c).data() + m.rows());
}

// ---------------------------------------------------------------------------

inline Json simple_signal_defaults() {
  return {{"seed", 1},
          {"samples", 2000},
          {"epochs", 10},
          {"unit", unit_json(2, true, 5, 3, kSlowSchedule, kPlainMean, 0.08, false)}};
}

inline void run_simple_signal(ExperimentResult& r) {
  const Json& c = r.config;
  const auto n = c.at("samples").get<std::size_t>();
  const auto epochs = c.at("epochs").get<std::size_t>();
  const auto frames = gen_simple(n);
  const Eigen::MatrixXd X = to_matrix(frames);
  IncSfaUnit unit(unit_from(c, r.hash, r.seed));
  const BatchSfaModel oracle = batch_sfa(X, unit.output_dim(), unit.config().expand);
  const Eigen::MatrixXd ref = oracle.apply(X);
  const auto J = static_cast<Eigen::Index>(unit.output_dim());

  Table outputs{{"epoch", "t"}, {}};
  for (auto& h : numbered("y", unit.output_dim())) outputs.header.push_back(h);
  for (auto& h : numbered("oracle", unit.output_dim())) outputs.header.push_back(h);
  Json rmse_trace = Json::array();
  Eigen::VectorXd rmse;
  for (std::size_t e = 1; e <= epochs; ++e) {
    for (const Frame& f : frames) unit.update(f);
    const Eigen::MatrixXd y = infer_rows(unit, frames);
    rmse = rmse_sign_aligned(y, ref);
    rmse_trace.push_back(vec_json(rmse));
    for (Eigen::Index t = 0; t < y.rows(); ++t) {
      Frame row(2 + 2 * J);
      row << static_cast<double>(e), static_cast<double>(t), y.row(t).transpose(), ref.row(t).transpose();
      outputs.add(row);
    }
  }
  r.metrics = {{"rmse_per_epoch", rmse_trace}, {"final_rmse", vec_json(rmse)}, {"oracle_delta", vec_json(oracle.delta)}};
  r.tables.emplace_back("outputs", std::move(outputs));
  r.model_kind = "unit";
  r.model = unit.save();
}

// ---------------------------------------------------------------------------

inline Json driving_force_defaults() {
  return {{"seed", 1},
          {"samples", 1000},
          {"window", 10},
          {"x0", 0.6},
          {"forcing", 0.13},
          {"epochs", 60},
          {"unit", [] {
             Json u = unit_json(10, true, 36, 1, kAdaptSchedule, kPlainMean, 0.004, false);
             u["clip"] = true;
             return u;
           }()}};
}

inline void run_driving_force(ExperimentResult& r) {
  const Json& c = r.config;
  const auto window = c.at("window").get<std::size_t>();
  const LogisticSeries series = gen_logistic(c.at("samples").get<std::size_t>(), c.at("x0").get<double>(), c.at("forcing").get<double>());
  if (series.x.size() < window + 2) throw ConfigError("driving-force: samples must exceed window + 1");
  const auto frames = time_embed(series.x, window);
  const Eigen::MatrixXd X = to_matrix(frames);
  Eigen::VectorXd force(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) force[i] = series.gamma[static_cast<std::size_t>(i) + window - 1];

  UnitConfig cfg = unit_from(c, r.hash, r.seed);
  if (cfg.input_dim != window) throw ConfigError("driving-force: unit.input_dim must equal window");
  IncSfaUnit unit(cfg);
  const BatchSfaModel oracle = batch_sfa(X, unit.output_dim(), cfg.expand);
  const Eigen::MatrixXd ref = oracle.apply(X);

  Table trace{{"epoch", "rmse0", "corr_force"}, {}};
  Eigen::MatrixXd y;
  for (std::size_t e = 1; e <= c.at("epochs").get<std::size_t>(); ++e) {
    unit.begin_episode();
    for (const Frame& f : frames) unit.update(f);
    y = infer_rows(unit, frames);
    trace.add({static_cast<double>(e), rmse_sign_aligned(y.leftCols(1), ref.leftCols(1))[0], std::abs(correlation(y.col(0), force))});
  }
  Table outputs{{"t", "force", "y0", "oracle0"}, {}};
  for (Eigen::Index t = 0; t < X.rows(); ++t) outputs.add({static_cast<double>(t), force[t], y(t, 0), ref(t, 0)});
  r.metrics = {{"rmse_per_epoch", Json::array()},
               {"final_rmse", trace.rows.back()[1]},
               {"incsfa_force_corr", trace.rows.back()[2]},
               {"oracle_force_corr", std::abs(correlation(ref.col(0), force))},
               {"oracle_whitened_dim", oracle.whitened_dim()},
               {"oracle_warnings", oracle.warnings}};
  for (const Frame& row : trace.rows) r.metrics["rmse_per_epoch"].push_back(row[1]);
  r.tables.emplace_back("trace", std::move(trace));
  r.tables.emplace_back("outputs", std::move(outputs));
  r.model_kind = "unit";
  r.model = unit.save();
}

// ---------------------------------------------------------------------------

inline Json spatial_coding_defaults() {
  return {{"seed", 1},
          {"samples", 50000},
          {"v_r", {3.0, 2.5}},
          {"m", 0.75},
          {"bounds", {0.0, 10.0, 0.0, 10.0}},
          {"grid", 21},
          {"checkpoint", 10000},
          {"unit", unit_json(2, true, 5, 2, kSlowSchedule, kPlainMean, 0.003, true)}};
}

inline void run_spatial_coding(ExperimentResult& r) {
  const Json& c = r.config;
  WalkConfig w;
  w.n = c.at("samples").get<std::size_t>();
  const auto vr = c.at("v_r").get<std::vector<double>>();
  const auto b = c.at("bounds").get<std::vector<double>>();
  if (vr.size() != 2 || b.size() != 4) throw ConfigError("spatial-coding: v_r needs 2 entries and bounds 4");
  w.v_r = {vr[0], vr[1]};
  w.m = c.at("m").get<double>();
  w.bounds = {b[0], b[1], b[2], b[3]};
  w.seed = r.seed;
  const auto walk = gen_random_walk(w);
  const auto g = c.at("grid").get<std::size_t>();
  if (g < 2) throw ConfigError("spatial-coding: grid must be >= 2");
  std::vector<Frame> grid;
  for (double x : linspace(b[0], b[1], g))
    for (double yv : linspace(b[2], b[3], g)) grid.push_back(Frame{{x, yv}});
  const Eigen::MatrixXd G = to_matrix(grid);

  IncSfaUnit unit(unit_from(c, r.hash, r.seed));
  const BatchSfaModel oracle = batch_sfa(to_matrix(walk), unit.output_dim(), unit.config().expand);
  const Eigen::MatrixXd ref = oracle.apply(G);
  const auto every = c.at("checkpoint").get<std::size_t>();

  Table trace{{"samples"}, {}};
  for (auto& h : numbered("rmse", unit.output_dim())) trace.header.push_back(h);
  Eigen::MatrixXd y;
  for (std::size_t t = 0; t < walk.size(); ++t) {
    unit.update(walk[t]);
    if ((every > 0 && (t + 1) % every == 0) || t + 1 == walk.size()) {
      y = infer_rows(unit, grid);
      Frame row(1 + y.cols());
      row << static_cast<double>(t + 1), rmse_sign_aligned(y, ref);
      if (trace.rows.empty() || trace.rows.back()[0] != row[0]) trace.add(row);
    }
  }
  Table responses{{"x", "y"}, {}};
  for (auto& h : numbered("f", unit.output_dim())) responses.header.push_back(h);
  for (auto& h : numbered("oracle", unit.output_dim())) responses.header.push_back(h);
  for (Eigen::Index i = 0; i < G.rows(); ++i) {
    Frame row(2 + 2 * y.cols());
    row << G.row(i).transpose(), y.row(i).transpose(), ref.row(i).transpose();
    responses.add(row);
  }
  const double cx = std::abs(correlation(y.col(0), G.col(0)));
  const double cy = std::abs(correlation(y.col(0), G.col(1)));
  const Frame last = trace.rows.back();
  r.metrics = {{"final_rmse", vec_json(last.tail(last.size() - 1))},
               {"feature1_corr_x", cx},
               {"feature1_corr_y", cy},
               {"feature1_varying_axis", cx >= cy ? "x" : "y"},
               {"feature1_invariant_axis_corr", std::min(cx, cy)},
               {"oracle_delta", vec_json(oracle.delta)}};
  r.tables.emplace_back("trace", std::move(trace));
  r.tables.emplace_back("responses", std::move(responses));
  r.model_kind = "unit";
  r.model = unit.save();
}

// ---------------------------------------------------------------------------

inline Json adaptation_defaults() {
  return {{"seed", 1},
          {"samples_per_epoch", 500},
          {"switch_epoch", 60},
          {"epochs", 120},
          {"unit", unit_json(2, true, 5, 2, kAdaptSchedule, std::nullopt, 0.01, true)}};
}

inline void run_adaptation(ExperimentResult& r) {
  const Json& c = r.config;
  const auto n = c.at("samples_per_epoch").get<std::size_t>();
  const auto sw = c.at("switch_epoch").get<std::size_t>();
  const auto epochs = c.at("epochs").get<std::size_t>();
  if (sw > epochs) throw ConfigError("adaptation: switch_epoch exceeds epochs");
  IncSfaUnit unit(unit_from(c, r.hash, r.seed));
  const auto J = static_cast<Eigen::Index>(unit.output_dim());
  const Eigen::MatrixXd Xa = to_matrix(gen_switched(n, 1, 1));
  const Eigen::MatrixXd Xb = to_matrix(gen_switched(n, 0, 1));
  const BatchSfaModel pre = batch_sfa(Xa, unit.output_dim(), unit.config().expand);
  const BatchSfaModel post = batch_sfa(Xb, unit.output_dim(), unit.config().expand);
  const auto stream = gen_switched(n, sw, epochs);

  Table trace{{"epoch"}, {}};
  for (auto& h : numbered("cos_pre", unit.output_dim())) trace.header.push_back(h);
  for (auto& h : numbered("cos_post", unit.output_dim())) trace.header.push_back(h);
  auto rows_of = [](const Eigen::MatrixXd& X) {
    std::vector<Frame> f;
    for (Eigen::Index i = 0; i < X.rows(); ++i) f.push_back(X.row(i).transpose());
    return f;
  };
  const auto fa = rows_of(Xa), fb = rows_of(Xb);
  for (std::size_t e = 0; e < epochs; ++e) {
    for (std::size_t i = 0; i < n; ++i) unit.update(stream[e * n + i]);
    const Eigen::MatrixXd ya = infer_rows(unit, fa), yb = infer_rows(unit, fb);
    Frame row(1 + 2 * J);
    row[0] = static_cast<double>(e + 1);
    for (Eigen::Index j = 0; j < J; ++j) {
      row[1 + j] = cross_basis_cosine(pre, Xa, ya.col(j), j);
      row[1 + J + j] = cross_basis_cosine(post, Xb, yb.col(j), j);
    }
    trace.add(row);
  }
  Json pre_first = nullptr, post_first = nullptr;
  for (const Frame& row : trace.rows) {
    const auto e = static_cast<std::size_t>(row[0]);
    if (pre_first.is_null() && e <= sw && row[1] > 0.9) pre_first = e;
    if (post_first.is_null() && e > sw && row[1 + J] > 0.9) post_first = e;
  }
  r.metrics = {{"cos_pre_feature1", Json::array()},
               {"cos_post_feature1", Json::array()},
               {"first_epoch_pre_above_0_9", pre_first},
               {"first_epoch_post_above_0_9", post_first},
               {"switch_epoch", sw}};
  for (const Frame& row : trace.rows) {
    r.metrics["cos_pre_feature1"].push_back(row[1]);
    r.metrics["cos_post_feature1"].push_back(row[1 + J]);
  }
  r.tables.emplace_back("trace", std::move(trace));
  r.model_kind = "unit";
  r.model = unit.save();
}

// ---------------------------------------------------------------------------

inline Json outlier_defaults() {
  return {{"seed", 1},
          {"samples_per_epoch", 500},
          {"epochs", 150},
          {"outlier_index", 100},
          {"outlier_value", 2000.0},
          {"unit", unit_json(2, true, 5, 1, kAdaptSchedule, std::nullopt, 0.01, true)}};
}

inline void run_outlier(ExperimentResult& r) {
  const Json& c = r.config;
  const auto n = c.at("samples_per_epoch").get<std::size_t>();
  const auto epochs = c.at("epochs").get<std::size_t>();
  const auto epoch = gen_simple(n);
  const Eigen::MatrixXd Xc = to_matrix(epoch);
  const auto stream = inject_outlier(repeat(epoch, epochs), c.at("outlier_index").get<std::size_t>(), c.at("outlier_value").get<double>());

  IncSfaUnit unit(unit_from(c, r.hash, r.seed));
  const BatchSfaModel clean = batch_sfa(Xc, 1, unit.config().expand);
  const Eigen::VectorXd ref = clean.apply(Xc).col(0);
  const BatchSfaModel dirty = batch_sfa(to_matrix(stream), 1, unit.config().expand);
  const Eigen::VectorXd dirty_out = dirty.apply(Xc).col(0);

  Table trace{{"epoch", "corr_incsfa"}, {}};
  Eigen::VectorXd y;
  for (std::size_t e = 0; e < epochs; ++e) {
    for (std::size_t i = 0; i < n; ++i) unit.update(stream[e * n + i]);
    y = infer_rows(unit, epoch).col(0);
    trace.add({static_cast<double>(e + 1), std::abs(correlation(y, ref))});
  }
  Table outputs{{"t", "clean_oracle", "dirty_oracle", "incsfa"}, {}};
  for (Eigen::Index t = 0; t < Xc.rows(); ++t) outputs.add({static_cast<double>(t), ref[t], dirty_out[t], y[t]});
  r.metrics = {{"incsfa_corr_per_epoch", Json::array()},
               {"incsfa_final_corr", trace.rows.back()[1]},
               {"batch_dirty_corr", std::abs(correlation(dirty_out, ref))},
               {"batch_clean_delta", clean.delta[0]},
               {"batch_dirty_delta", dirty.delta[0]},
               {"batch_dirty_warnings", dirty.warnings}};
  for (const Frame& row : trace.rows) r.metrics["incsfa_corr_per_epoch"].push_back(row[1]);
  r.tables.emplace_back("trace", std::move(trace));
  r.tables.emplace_back("outputs", std::move(outputs));
  r.model_kind = "unit";
  r.model = unit.save();
}

// ---------------------------------------------------------------------------

inline Json episodic_defaults() {
  return {{"seed", 1},
          {"generator",
           {{"episodes", 50}, {"episode_len", 120}, {"dim", 24}, {"arm_period", 8.0}, {"noise", 0.3}, {"world_seed", 1}}},
          {"test_episodes", 3},
          {"training_episodes", 400},
          {"normalize_episodes", 10},
          {"trials", 25},
          {"unit", unit_json(24, false, 20, 5, kSlowSchedule, kPlainMean, 0.001, false)}};
}

/// Mean over features of Delta / variance of each output on each test episode.
inline double episodic_delta(const Eigen::MatrixXd& w_unit_rows, const IncSfaUnit& unit, const EpisodicData& test) {
  double acc = 0.0;
  int count = 0;
  for (const auto& ep : test.episodes) {
    Eigen::MatrixXd y(static_cast<Eigen::Index>(ep.size()), w_unit_rows.rows());
    for (std::size_t t = 0; t < ep.size(); ++t) y.row(static_cast<Eigen::Index>(t)) = (w_unit_rows * unit.whitened(ep[t])).transpose();
    for (Eigen::Index j = 0; j < y.cols(); ++j) {
      const double var = (y.col(j).array() - y.col(j).mean()).square().mean();
      if (var > 0.0) {
        acc += delta_value(column(y, j)) / var;
        ++count;
      }
    }
  }
  return count ? acc / count : 0.0;
}

inline void run_episodic(ExperimentResult& r) {
  const Json& c = r.config;
  const Json& g = c.at("generator");
  EpisodicConfig ec;
  ec.n_episodes = g.at("episodes").get<std::size_t>();
  ec.episode_len = g.at("episode_len").get<std::size_t>();
  ec.dim = g.at("dim").get<std::size_t>();
  ec.arm_period = g.at("arm_period").get<double>();
  ec.noise = g.at("noise").get<double>();
  ec.world_seed = g.at("world_seed").get<std::uint64_t>();
  ec.seed = r.seed;
  if (ec.n_episodes == 0) throw ConfigError("episodic: generator.episodes must be positive");
  const EpisodicData train = gen_episodic(ec);
  EpisodicConfig tc = ec;
  tc.seed = r.seed + 1;
  tc.n_episodes = c.at("test_episodes").get<std::size_t>();
  if (tc.n_episodes == 0) throw ConfigError("episodic: test_episodes must be positive");
  const EpisodicData test = gen_episodic(tc);
  const auto n_train = c.at("training_episodes").get<std::size_t>();
  const auto n_norm = c.at("normalize_episodes").get<std::size_t>();
  const auto trials = c.at("trials").get<std::size_t>();
  if (n_train < 2 || trials == 0) throw ConfigError("episodic: need training_episodes >= 2 and trials >= 1");

  std::vector<int> labels;
  for (std::size_t k = 0; k < test.episodes.size(); ++k)
    for (const auto& lat : test.latents[k]) labels.push_back(lat[0] * 2 + lat[1]);

  std::vector<double> delta(n_train, 0.0), pairwise(n_train, 0.0), purity(n_train, 0.0);
  std::vector<double> final_purity, final_pairwise;
  Table embedding{{"episode", "t", "latent_a", "latent_b", "f0", "f1"}, {}};
  std::vector<std::uint8_t> model;
  for (std::size_t trial = 0; trial < trials; ++trial) {
    UnitConfig cfg = unit_from(c, r.hash, r.seed + trial);
    if (cfg.input_dim != ec.dim) throw ConfigError("episodic: unit.input_dim must equal generator.dim");
    IncSfaUnit unit(cfg);
    Rng pick(r.seed * 7919 + 1000 + trial);
    double last_purity = 0.0, last_pairwise = 0.0;
    for (std::size_t e = 0; e < n_train; ++e) {
      unit.set_normalize_features(e < n_norm);
      unit.begin_episode();
      for (const Frame& f : train.episodes[static_cast<std::size_t>(pick.below(ec.n_episodes))]) unit.update(f);

      Eigen::MatrixXd w = unit.slow_features().weights();
      for (Eigen::Index j = 0; j < w.rows(); ++j) w.row(j).normalize();
      std::vector<Frame> pts;
      for (const auto& ep : test.episodes)
        for (const Frame& f : ep) pts.push_back((w.topRows(std::min<Eigen::Index>(2, w.rows())) * unit.whitened(f)));
      last_purity = nearest_centroid_purity(to_matrix(pts), labels);
      last_pairwise = mean_pairwise_cosine(w);
      delta[e] += episodic_delta(w, unit, test) / static_cast<double>(trials);
      pairwise[e] += last_pairwise / static_cast<double>(trials);
      purity[e] += last_purity / static_cast<double>(trials);
    }
    final_purity.push_back(last_purity);
    final_pairwise.push_back(last_pairwise);
    if (trial == 0) {
      for (std::size_t k = 0; k < test.episodes.size(); ++k)
        for (std::size_t t = 0; t < test.episodes[k].size(); ++t) {
          const Frame y = unit.infer(test.episodes[k][t]);
          embedding.add({static_cast<double>(k), static_cast<double>(t), static_cast<double>(test.latents[k][t][0]),
                         static_cast<double>(test.latents[k][t][1]), y[0], y.size() > 1 ? y[1] : 0.0});
        }
      model = unit.save();
    }
  }
  std::size_t rises = 0;
  for (std::size_t e = 1; e < n_train; ++e) rises += delta[e] > delta[e - 1] ? 1 : 0;
  Table curve{{"episode", "delta", "pairwise_cosine", "purity"}, {}};
  for (std::size_t e = 0; e < n_train; ++e) curve.add({static_cast<double>(e + 1), delta[e], pairwise[e], purity[e]});
  const auto mean = [](const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); };
  r.metrics = {{"delta_per_episode", delta},
               {"delta_increases", rises},
               {"delta_steps", n_train - 1},
               {"delta_first", delta.front()},
               {"delta_final", delta.back()},
               {"final_pairwise_cosine", mean(final_pairwise)},
               {"final_purity", mean(final_purity)},
               {"final_purity_min", *std::min_element(final_purity.begin(), final_purity.end())}};
  r.tables.emplace_back("curve", std::move(curve));
  r.tables.emplace_back("embedding", std::move(embedding));
  r.model_kind = "unit";
  r.model = std::move(model);
}

// ---------------------------------------------------------------------------

inline Json hierarchy_defaults() {
  auto layer_unit = [](std::size_t K, std::size_t J) {
    Json u = unit_json(1, false, K, J, kSlowSchedule, kPlainMean, 0.005, false);
    u["clip"] = true;
    u.erase("input_dim");
    return u;
  };
  return {{"seed", 1},
          {"board", {{"frames", 2000}, {"width", 16}, {"height", 16}, {"depth", {1.0, 3.0}}, {"v_r", 0.3}, {"m", 0.75}}},
          {"hierarchy",
           {{"image", {16, 16}},
            {"layers",
             {{{"field", {8, 8}}, {"overlap", {4, 4}}, {"epochs", 5}, {"unit", layer_unit(10, 5)}},
              {{"single", true}, {"epochs", 5}, {"unit", layer_unit(10, 1)}}}}}}};
}

/// Field bounds and grid sizes of a built network agree with the tiling rule.
inline bool slicing_consistent(const HierarchySpec& spec) {
  std::size_t cols = spec.image_width, rows = spec.image_height;
  for (const LayerSpec& layer : spec.layers) {
    for (const NodeSpec& node : layer.nodes)
      if (node.field.x0 + node.field.width > cols || node.field.y0 + node.field.height > rows) return false;
    cols = layer.grid_cols;
    rows = layer.grid_rows;
  }
  const HierarchySpec reference = full_scale_layout();
  return reference.layers[0].grid_rows == 15 && reference.layers[0].grid_cols == 19 && reference.layers[1].grid_rows == 4 &&
         reference.layers[1].grid_cols == 5;
}

inline void run_hierarchy(ExperimentResult& r) {
  const Json& c = r.config;
  const Json& b = c.at("board");
  BoardConfig bc;
  bc.n = b.at("frames").get<std::size_t>();
  bc.width = b.at("width").get<std::size_t>();
  bc.height = b.at("height").get<std::size_t>();
  const auto depth = b.at("depth").get<std::vector<double>>();
  if (depth.size() != 2) throw ConfigError("hierarchy: board.depth needs [lo, hi]");
  bc.depth_lo = depth[0];
  bc.depth_hi = depth[1];
  bc.depth_start = 0.5 * (depth[0] + depth[1]);
  bc.v_r = b.at("v_r").get<double>();
  bc.m = b.at("m").get<double>();
  bc.seed = r.seed;
  const BoardStream board = gen_moving_board(bc);
  BoardConfig tc = bc;
  tc.seed = r.seed + 1;
  const BoardStream test = gen_moving_board(tc);

  HierarchySpec spec = hierarchy_from_json(c.at("hierarchy"));
  for (std::size_t l = 0; l < spec.layers.size(); ++l)
    for (NodeSpec& node : spec.layers[l].nodes) {
      node.unit.seed = r.seed + 1000 * l + node.unit.seed;
      node.unit.config_hash = r.hash;
    }
  if (spec.image_width != bc.width || spec.image_height != bc.height || spec.image_channels != 1)
    throw ConfigError("hierarchy: image geometry differs from the board stream");
  Network net(spec);

  bool frozen = true;
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    std::vector<std::vector<std::uint8_t>> before;
    for (std::size_t k = 0; k < l; ++k)
      for (std::size_t n = 0; n < net.node_count(k); ++n) before.push_back(net.unit(k, n).save());
    net.train_layer(l, board.frames, spec.layers[l].epochs);
    std::size_t i = 0;
    for (std::size_t k = 0; k < l; ++k)
      for (std::size_t n = 0; n < net.node_count(k); ++n) frozen = frozen && before[i++] == net.unit(k, n).save();
  }

  auto top_corr = [&](const BoardStream& s, Eigen::VectorXd& y) {
    y.resize(static_cast<Eigen::Index>(s.frames.size()));
    Eigen::VectorXd d(y.size());
    for (std::size_t t = 0; t < s.frames.size(); ++t) {
      y[static_cast<Eigen::Index>(t)] = net.forward(s.frames[t])[0];
      d[static_cast<Eigen::Index>(t)] = s.depth[t];
    }
    return std::abs(correlation(y, d));
  };
  Eigen::VectorXd y_train, y_test;
  const double corr_train = top_corr(board, y_train);
  const double corr_test = top_corr(test, y_test);
  Table outputs{{"t", "depth", "top"}, {}};
  for (std::size_t t = 0; t < board.frames.size(); ++t)
    outputs.add({static_cast<double>(t), board.depth[t], y_train[static_cast<Eigen::Index>(t)]});
  r.metrics = {{"top_depth_corr", corr_train},
               {"top_depth_corr_test", corr_test},
               {"layer_freeze_ok", frozen},
               {"slicing_ok", slicing_consistent(spec)},
               {"layer_grids", Json::array()}};
  for (const LayerSpec& layer : spec.layers) r.metrics["layer_grids"].push_back({layer.grid_rows, layer.grid_cols});
  r.tables.emplace_back("outputs", std::move(outputs));
  r.model_kind = "network";
  r.model = net.save();
}

struct ExperimentEntry {
  std::string_view name;
  Json (*defaults)();
  void (*run)(ExperimentResult&);
};

inline const std::vector<ExperimentEntry>& registry() {
  static const std::vector<ExperimentEntry> entries = {
      {"simple-signal", simple_signal_defaults, run_simple_signal},
      {"driving-force", driving_force_defaults, run_driving_force},
      {"spatial-coding", spatial_coding_defaults, run_spatial_coding},
      {"adaptation", adaptation_defaults, run_adaptation},
      {"outlier", outlier_defaults, run_outlier},
      {"episodic", episodic_defaults, run_episodic},
      {"hierarchy", hierarchy_defaults, run_hierarchy},
  };
  return entries;
}

inline const ExperimentEntry& find_experiment(std::string_view name) {
  for (const auto& e : registry())
    if (e.name == name) return e;
  std::string known;
  for (const auto& e : registry()) known += (known.empty() ? "" : ", ") + std::string(e.name);
  throw ConfigError("unknown experiment '" + std::string(name) + "' (known: " + known + ")");
}

}  // namespace detail

inline std::vector<std::string> experiment_names() {
  std::vector<std::string> out;
  for (const auto& e : detail::registry()) out.emplace_back(e.name);
  return out;
}

/// Default configuration of a named experiment.
inline Json experiment_defaults(std::string_view name) { return detail::find_experiment(name).defaults(); }

/// Runs a named experiment with `overrides` merged over its defaults.
inline ExperimentResult run_experiment(std::string_view name, const Json& overrides = nullptr) {
  const auto& entry = detail::find_experiment(name);
  ExperimentResult r;
  r.name = std::string(name);
  r.config = merge_config(entry.defaults(), overrides);
  try {
    r.seed = r.config.at("seed").get<std::uint64_t>();
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("seed: ") + e.what());
  }
  r.hash = config_hash(Json{{"experiment", r.name}, {"config", r.config}});
  try {
    entry.run(r);
  } catch (const Json::exception& e) {
    throw ConfigError(std::string(name) + ": " + e.what());
  }
  return r;
}

}  // namespace incsfa
