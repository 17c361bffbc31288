#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <numbers>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("incsfa_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  Result run(const std::string& args) const {
    const std::string cmd = std::string(INCSFA_CLI_PATH) + " " + args + " > " + (dir_ / "stdout").string() + " 2> " +
                            (dir_ / "stderr").string();
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(dir_ / "stdout"), slurp(dir_ / "stderr")};
  }

  fs::path write(const std::string& name, const std::string& content) const {
    std::ofstream(dir_ / name) << content;
    return dir_ / name;
  }

  fs::path stream_csv(const std::string& name, int columns) const {
    std::ostringstream s;
    s << "a,b" << (columns == 3 ? ",c" : "") << "\n";
    for (int t = 0; t < 400; ++t) {
      if (t == 200) s << "\n";
      const double slow = std::sin(2 * std::numbers::pi * t / 200.0), fast = std::sin(2.3 * t);
      s << slow + fast << "," << fast - slow;
      if (columns == 3) s << "," << 0.5 * slow + std::cos(1.7 * t);
      s << "\n";
    }
    return write(name, s.str());
  }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, ListNamesExperiments) {
  const Result r = run("list");
  EXPECT_EQ(r.code, 0);
  for (const char* name : {"simple-signal", "driving-force", "spatial-coding", "adaptation", "outlier", "episodic", "hierarchy"})
    EXPECT_NE(r.out.find(name), std::string::npos) << name;
}

TEST_F(Cli, RunWritesMetricsAndStampedTables) {
  const auto cfg = write("cfg.json", R"({"experiment": "simple-signal", "epochs": 2})");
  const auto out = dir_ / "run";
  const Result r = run("run --config " + cfg.string() + " --seed 4 --out " + out.string());
  ASSERT_EQ(r.code, 0) << r.err;
  const auto doc = nlohmann::json::parse(slurp(out / "metrics.json"));
  EXPECT_EQ(doc.at("experiment"), "simple-signal");
  EXPECT_EQ(doc.at("seed"), 4);
  EXPECT_EQ(doc.at("config").at("epochs"), 2);
  EXPECT_TRUE(doc.at("metrics").contains("final_rmse"));
  EXPECT_EQ(doc.at("config_hash").get<std::string>().size(), 16u);
  ASSERT_FALSE(doc.at("tables").empty());
  for (const auto& t : doc.at("tables")) {
    const std::string text = slurp(out / t.get<std::string>());
    EXPECT_EQ(text.rfind("# experiment=simple-signal config_hash=" + doc.at("config_hash").get<std::string>() + " seed=4", 0), 0u);
  }
  EXPECT_TRUE(fs::exists(out / "model.bin"));
  const Result i = run("inspect --model " + (out / "model.bin").string());
  EXPECT_EQ(i.code, 0);
  EXPECT_NE(i.out.find("unit model"), std::string::npos);
}

TEST_F(Cli, ConfigErrorsExitTwo) {
  EXPECT_EQ(run("run no-such-experiment --out " + (dir_ / "x").string()).code, 2);
  const auto bad_key = write("bad.json", R"({"epochz": 2})");
  EXPECT_EQ(run("run simple-signal --config " + bad_key.string() + " --out " + (dir_ / "x").string()).code, 2);
  const auto bad_json = write("broken.json", "{ not json");
  EXPECT_EQ(run("run simple-signal --config " + bad_json.string()).code, 2);
  const auto conflict = write("conflict.json", R"({"experiment": "outlier"})");
  EXPECT_EQ(run("run simple-signal --config " + conflict.string()).code, 2);
  EXPECT_EQ(run("frobnicate").code, 2);
}

TEST_F(Cli, MissingFilesExitOne) {
  EXPECT_EQ(run("run simple-signal --config " + (dir_ / "absent.json").string()).code, 1);
  EXPECT_EQ(run("inspect --model " + (dir_ / "absent.bin").string()).code, 1);
  const auto cfg = write("train.json", R"({"unit": {"K": 3, "J": 2}})");
  EXPECT_EQ(run("train --config " + cfg.string() + " --input " + (dir_ / "absent.csv").string() + " --out " +
                (dir_ / "m.bin").string())
                .code,
            1);
}

TEST_F(Cli, TrainIsDeterministicAndInferWritesOutputs) {
  const auto data = stream_csv("data.csv", 3);
  const auto cfg = write("train.json", R"({"unit": {"K": 3, "J": 2, "mca": {"eta_h": 0.01}}, "epochs": 3, "seed": 5})");
  const auto m1 = dir_ / "m1.bin", m2 = dir_ / "m2.bin";
  ASSERT_EQ(run("train --config " + cfg.string() + " --input " + data.string() + " --out " + m1.string()).code, 0);
  ASSERT_EQ(run("train --config " + cfg.string() + " --input " + data.string() + " --out " + m2.string()).code, 0);
  EXPECT_EQ(slurp(m1), slurp(m2));
  const auto m3 = dir_ / "m3.bin";
  ASSERT_EQ(run("train --config " + cfg.string() + " --seed 6 --input " + data.string() + " --out " + m3.string()).code, 0);
  EXPECT_NE(slurp(m1), slurp(m3));

  const auto y = dir_ / "y.csv";
  const Result r = run("infer --model " + m1.string() + " --input " + data.string() + " --out " + y.string());
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream lines(slurp(y));
  std::string line;
  std::getline(lines, line);
  EXPECT_EQ(line.rfind("# config_hash=", 0), 0u);
  EXPECT_NE(line.find("seed=5"), std::string::npos);
  std::getline(lines, line);
  EXPECT_EQ(line, "y0,y1");
  int rows = 0, blanks = 0;
  while (std::getline(lines, line)) (line.empty() ? blanks : rows)++;
  EXPECT_EQ(rows, 400);
  EXPECT_EQ(blanks, 1);

  const Result i = run("inspect --model " + m1.string());
  EXPECT_EQ(i.code, 0);
  EXPECT_NE(i.out.find("seed"), std::string::npos);
}

TEST_F(Cli, DataErrorsExitThree) {
  const auto cfg = write("train.json", R"({"unit": {"K": 3, "J": 2}})");
  const auto model = dir_ / "m.bin";
  ASSERT_EQ(run("train --config " + cfg.string() + " --input " + stream_csv("three.csv", 3).string() + " --out " + model.string()).code, 0);

  const Result r = run("infer --model " + model.string() + " --input " + stream_csv("two.csv", 2).string() + " --out " +
                       (dir_ / "y.csv").string());
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("expected 3 columns, got 2"), std::string::npos) << r.err;
  EXPECT_FALSE(fs::exists(dir_ / "y.csv"));

  std::string bytes = slurp(model);
  bytes[bytes.size() / 2] ^= 0x10;
  std::ofstream(dir_ / "bad.bin", std::ios::binary) << bytes;
  EXPECT_EQ(run("inspect --model " + (dir_ / "bad.bin").string()).code, 3);

  const auto nan = write("nan.csv", "1,2,3\n1,nan,3\n");
  EXPECT_EQ(run("train --config " + cfg.string() + " --input " + nan.string() + " --out " + model.string()).code, 3);
}

TEST_F(Cli, NetworkModelInspect) {
  const auto cfg = write("h.json", R"({"board": {"frames": 300}})");
  const auto out = dir_ / "h";
  ASSERT_EQ(run("run hierarchy --config " + cfg.string() + " --out " + out.string()).code, 0);
  const Result r = run("inspect --model " + (out / "model.bin").string());
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("network model"), std::string::npos);
}
