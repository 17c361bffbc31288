// incsfa-cli: run reference experiments, train and apply units on CSV
// streams, and inspect model files.
//
// Exit codes: 0 success, 1 I/O failure, 2 configuration error, 3 data error.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "incsfa/incsfa.hpp"

namespace fs = std::filesystem;
using namespace incsfa;

namespace {

constexpr int kExitIo = 1;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;

std::vector<std::uint8_t> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::system_error(errno, std::generic_category(), "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const fs::path& path, const std::vector<std::uint8_t>& bytes) {
  write_atomic(path, [&](std::ostream& os) { os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size())); },
               true);
}

Json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::system_error(errno, std::generic_category(), "cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::string stamp(std::string_view experiment, std::uint64_t hash, std::uint64_t seed) {
  std::ostringstream s;
  if (!experiment.empty()) s << "experiment=" << experiment << " ";
  s << "config_hash=" << hex64(hash) << " seed=" << seed;
  return s.str();
}

fs::path default_out_dir(const std::string& leaf) {
  const char* env = std::getenv("INCSFA_OUT_DIR");
  return fs::path(env && *env ? env : "incsfa-out") / leaf;
}

// ---------------------------------------------------------------------------

struct RunOptions {
  std::string name;
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
};

int cmd_run(const RunOptions& o) {
  Json overrides = Json::object();
  std::string name = o.name;
  if (!o.config_path.empty()) {
    overrides = read_json_file(o.config_path);
    if (!overrides.is_object()) throw ConfigError("config: expected a JSON object");
    if (overrides.contains("experiment")) {
      const auto from_file = overrides.at("experiment").get<std::string>();
      if (!name.empty() && name != from_file)
        throw ConfigError("config names experiment '" + from_file + "' but '" + name + "' was requested");
      name = from_file;
      overrides.erase("experiment");
    }
  }
  if (name.empty()) throw ConfigError("run: give an experiment name or a config with an \"experiment\" key");
  if (o.seed) overrides["seed"] = *o.seed;

  const ExperimentResult r = run_experiment(name, overrides);
  const fs::path dir = o.out.empty() ? default_out_dir(name) : fs::path(o.out);
  const std::string tag = stamp(r.name, r.hash, r.seed);

  for (const auto& [stem, table] : r.tables)
    write_atomic(dir / (stem + ".csv"), [&](std::ostream& os) { write_csv(os, table.header, table.rows, {}, tag); });
  write_bytes(dir / "model.bin", r.model);
  Json doc = {{"experiment", r.name},
              {"config_hash", hex64(r.hash)},
              {"seed", r.seed},
              {"config", r.config},
              {"model", {{"file", "model.bin"}, {"kind", r.model_kind}}},
              {"tables", Json::array()},
              {"metrics", r.metrics}};
  for (const auto& [stem, table] : r.tables) doc["tables"].push_back(stem + ".csv");
  write_atomic(dir / "metrics.json", [&](std::ostream& os) { os << doc.dump(2) << '\n'; });
  std::cout << "wrote " << (dir / "metrics.json").string() << " (" << tag << ")\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct TrainOptions {
  std::string config_path;
  std::string input;
  std::string out;
  std::optional<std::uint64_t> seed;
};

int cmd_train(const TrainOptions& o) {
  Json cfg = read_json_file(o.config_path);
  detail::require_object(cfg, "train config");
  detail::check_keys(cfg, Json{{"unit", 0}, {"epochs", 0}, {"seed", 0}}, "");
  if (!cfg.contains("unit")) throw ConfigError("train config: missing \"unit\"");
  if (o.seed) cfg["seed"] = *o.seed;
  const auto epochs = cfg.value("epochs", std::size_t{1});
  if (epochs == 0) throw ConfigError("train config: epochs must be positive");

  std::size_t width = 0;
  {
    std::ifstream probe(o.input);
    if (!probe) throw std::system_error(errno, std::generic_category(), "cannot open " + o.input);
    CsvReader reader(probe);
    Frame f;
    bool start = false;
    if (!reader.next(f, start)) throw InvalidInput("train: input has no data rows");
    width = reader.width();
  }
  UnitConfig base;
  base.input_dim = width;
  UnitConfig uc = unit_from_json(cfg.at("unit"), base);
  if (cfg.contains("seed")) uc.seed = cfg.at("seed").get<std::uint64_t>();
  uc.config_hash = config_hash(cfg);
  if (uc.input_dim != width)
    throw InvalidInput("train: config input_dim " + std::to_string(uc.input_dim) + " but input has " + std::to_string(width) +
                       " columns");
  IncSfaUnit unit(uc);

  for (std::size_t e = 0; e < epochs; ++e) {
    std::ifstream in(o.input);
    if (!in) throw std::system_error(errno, std::generic_category(), "cannot open " + o.input);
    CsvReader reader(in, width);
    Frame f;
    bool start = false;
    while (reader.next(f, start)) {
      if (start) unit.begin_episode();
      unit.update(f);
    }
  }
  write_bytes(o.out, unit.save());
  std::cout << "trained on " << unit.steps() << " samples; wrote " << o.out << " ("
            << stamp("", uc.config_hash, uc.seed) << ")\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct InferOptions {
  std::string model;
  std::string input;
  std::string out;
};

int cmd_infer(const InferOptions& o) {
  const IncSfaUnit unit = IncSfaUnit::load(read_bytes(o.model));
  std::ifstream in(o.input);
  if (!in) throw std::system_error(errno, std::generic_category(), "cannot open " + o.input);
  CsvReader reader(in, unit.config().input_dim);
  write_atomic(o.out, [&](std::ostream& os) {
    os << "# " << stamp("", unit.config().config_hash, unit.config().seed) << '\n';
    const auto header = numbered("y", unit.output_dim());
    for (std::size_t i = 0; i < header.size(); ++i) os << (i ? "," : "") << header[i];
    os << '\n';
    Frame f;
    bool start = false;
    bool first = true;
    while (reader.next(f, start)) {
      if (start && !first) os << '\n';
      first = false;
      write_csv_row(os, unit.infer(f));
    }
  });
  return 0;
}

// ---------------------------------------------------------------------------

void print_vector(std::ostream& os, const char* label, const Eigen::VectorXd& v) {
  os << std::left << std::setw(22) << label;
  for (Eigen::Index i = 0; i < v.size(); ++i) os << (i ? " " : "") << v[i];
  os << '\n';
}

int cmd_inspect(const std::string& path) {
  const auto bytes = read_bytes(path);
  if (bytes.size() >= 4 && std::string_view(reinterpret_cast<const char*>(bytes.data()), 4) == Network::kMagic) {
    ByteReader r(bytes);
    r.raw(4);
    std::cout << "network model, format version " << r.u32() << "\n";
    const auto layers = r.u64();
    std::cout << "layers               " << layers << " (trained " << r.u64() << ")\n";
    for (std::uint64_t l = 0; l < layers; ++l) {
      const auto nodes = r.u64();
      std::size_t in_dim = 0, j = 0;
      for (std::uint64_t n = 0; n < nodes; ++n) {
        const std::string blob = r.raw(static_cast<std::size_t>(r.u64()));
        const auto u = IncSfaUnit::load(std::span(reinterpret_cast<const std::uint8_t*>(blob.data()), blob.size()));
        in_dim = u.config().input_dim;
        j = u.output_dim();
      }
      std::cout << "layer " << l << "              " << nodes << " nodes, input " << in_dim << ", outputs " << j << " each\n";
    }
    return 0;
  }

  const IncSfaUnit u = IncSfaUnit::load(bytes);
  const UnitConfig& c = u.config();
  std::cout << std::setprecision(6);
  std::cout << "unit model, format version " << IncSfaUnit::kFormatVersion << "\n"
            << "config_hash          " << hex64(c.config_hash) << "\n"
            << "seed                 " << c.seed << "\n"
            << "input_dim            " << c.input_dim << (c.expand ? " (quadratic expansion to " + std::to_string(c.expanded_dim()) + ")" : "") << "\n"
            << "whitened_dim (K)     " << u.whitened_dim() << "\n"
            << "features (J)         " << u.output_dim() << "\n"
            << "steps                " << u.steps() << "\n"
            << "derivative_updates   " << u.derivative_updates() << "\n"
            << "episodes             " << u.episodes() << "\n";
  print_vector(std::cout, "eigenvalues", u.eigenvalues());
  const Eigen::MatrixXd& w = u.slow_features().weights();
  print_vector(std::cout, "feature_norms", w.rowwise().norm());
  const SlownessReport rep = u.slowness_report();
  print_vector(std::cout, "delta", rep.delta);
  print_vector(std::cout, "slowness_S", rep.slowness);
  std::cout << "gamma                " << u.gamma_estimator().gamma() << "\n"
            << "mca_rate             " << u.mca_rate_now() << "\n"
            << "ccipca_rate          " << (u.steps() ? amnesic_rate(u.steps(), c.ccipca_schedule) : 1.0) << " (t1=" << c.ccipca_schedule.t1
            << " t2=" << c.ccipca_schedule.t2 << " c=" << c.ccipca_schedule.c << " r=" << c.ccipca_schedule.r << ")\n"
            << "normalize_features   " << (c.normalize_features ? "on" : "off") << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Incremental slow feature analysis: experiments, training and inference"};
  app.require_subcommand(1);

  RunOptions run;
  auto* run_cmd = app.add_subcommand("run", "Run a named reference experiment");
  run_cmd->add_option("name", run.name, "Experiment name (see 'list')");
  run_cmd->add_option("--config", run.config_path, "JSON overrides; may name the experiment under \"experiment\"");
  run_cmd->add_option("--seed", run.seed, "Seed (overrides the config)");
  run_cmd->add_option("--out", run.out, "Output directory (default $INCSFA_OUT_DIR/<name> or incsfa-out/<name>)");

  auto* list_cmd = app.add_subcommand("list", "List experiments and print their default configs");
  bool list_verbose = false;
  list_cmd->add_flag("--verbose,-v", list_verbose, "Print default configurations");

  TrainOptions train;
  auto* train_cmd = app.add_subcommand("train", "Train a unit on a CSV stream");
  train_cmd->add_option("--config", train.config_path, "JSON with \"unit\", optional \"epochs\" and \"seed\"")->required();
  train_cmd->add_option("--input", train.input, "Input CSV (blank lines separate episodes)")->required();
  train_cmd->add_option("--out", train.out, "Model file to write")->required();
  train_cmd->add_option("--seed", train.seed, "Seed (overrides the config)");

  InferOptions infer;
  auto* infer_cmd = app.add_subcommand("infer", "Apply a trained unit to a CSV stream");
  infer_cmd->add_option("--model", infer.model, "Model file")->required();
  infer_cmd->add_option("--input", infer.input, "Input CSV")->required();
  infer_cmd->add_option("--out", infer.out, "Output CSV")->required();

  std::string inspect_path;
  auto* inspect_cmd = app.add_subcommand("inspect", "Summarize a model file");
  inspect_cmd->add_option("--model", inspect_path, "Model file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*run_cmd) return cmd_run(run);
    if (*list_cmd) {
      for (const auto& name : experiment_names()) {
        std::cout << name << "\n";
        if (list_verbose) std::cout << experiment_defaults(name).dump(2) << "\n";
      }
      return 0;
    }
    if (*train_cmd) return cmd_train(train);
    if (*infer_cmd) return cmd_infer(infer);
    if (*inspect_cmd) return cmd_inspect(inspect_path);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const InvalidInput& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const FormatError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const Json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::system_error& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kExitIo;
  }
  return 0;
}
