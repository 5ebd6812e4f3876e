#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

#include <json.hpp>

namespace {

namespace fs = std::filesystem;

const char* const kSmall = R"(seed: 5
scenario:
  duration_s: 0.05
  noise_power: 0.01
  geometry: {num_antennas: %ANT%}
  clutter:
    - {delay: 2, angle_deg: 60, amplitude: 0.3}
  targets:
    - {delay: 20, doppler_hz: 100, angle_deg: 75.5, amplitude: 0.2}
processing:
  meca: {q_bar: 10, p: 1}
  eca: {q: 10, p: 1, window_s: 0.045}
detector:
  max_delay: 40
  doppler_span_hz: 200
  max_passes: 2
compare:
  sidelobe_span_hz: 100
aaf:
  max_delay: 20
  doppler_span_hz: 100
  guard_delay: 5
  guard_doppler: 2
)";

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           (std::string("pbr_cli_") + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string config(int antennas, const std::string& name = "run.yaml") const {
    std::string text = kSmall;
    text.replace(text.find("%ANT%"), 5, std::to_string(antennas));
    const fs::path p = dir_ / name;
    std::ofstream(p) << text;
    return p.string();
  }

  int run(const std::string& args) const {
    const std::string cmd = std::string(PBR_CLI) + " " + args + " > " + (dir_ / "stdout.txt").string() + " 2> " +
                            (dir_ / "stderr.txt").string();
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string stderr_text() const { return read(dir_ / "stderr.txt"); }

  static std::string read(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
  }

  static std::size_t lines(const fs::path& p) {
    const std::string s = read(p);
    return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
  }

  fs::path dir_;
};

TEST_F(Cli, HelpAndUsageErrors) {
  EXPECT_EQ(run("--help"), 0);
  EXPECT_EQ(run(""), 2);
  EXPECT_EQ(run("simulate"), 2);
  EXPECT_EQ(run("simulate --config " + config(2) + " --bogus"), 2);
  EXPECT_EQ(run("process --config " + config(2) + " --canceller lms"), 2);
}

TEST_F(Cli, CorruptConfigKeyLeavesNoFiles) {
  std::ofstream(dir_ / "bad.yaml") << "seed: 1\nscenario:\n  duration_s: 0.05\n  nosie_power: 0.1\n";
  const fs::path out = dir_ / "out";
  EXPECT_EQ(run("simulate --config " + (dir_ / "bad.yaml").string() + " --out-dir " + out.string()), 2);
  EXPECT_NE(stderr_text().find("bad.yaml:4"), std::string::npos) << stderr_text();
  EXPECT_FALSE(fs::exists(out));
}

TEST_F(Cli, SimulateWritesArrayTruthAndManifest) {
  const fs::path out = dir_ / "sim";
  ASSERT_EQ(run("simulate --config " + config(3) + " --out-dir " + out.string()), 0) << stderr_text();
  EXPECT_EQ(fs::file_size(out / "array.pbriq"), 22u + 20000u * 3 * 8);
  EXPECT_EQ(lines(out / "truth.csv"), 1u + 1 + 1 + 1);

  const auto m = nlohmann::json::parse(read(out / "manifest.json"));
  EXPECT_EQ(m["command"], "simulate");
  EXPECT_EQ(m["seed"], 5);
  double total = 0.0;
  for (const auto& [name, ms] : m["timing_ms"].items()) {
    EXPECT_GT(ms.get<double>(), 0.0) << name;
    total += ms.get<double>();
  }
  EXPECT_LE(total, m["wall_ms"].get<double>());
  for (const auto& f : m["outputs"]) EXPECT_TRUE(fs::exists(out / f.get<std::string>())) << f;
  for (const auto& e : fs::directory_iterator(out)) {
    EXPECT_EQ(e.path().filename().string().find(".partial"), std::string::npos);
  }
}

TEST_F(Cli, SeedIsReproducibleAndOverridable) {
  const std::string cfg = config(2);
  ASSERT_EQ(run("simulate --config " + cfg + " --out-dir " + (dir_ / "a").string()), 0);
  ASSERT_EQ(run("simulate --config " + cfg + " --out-dir " + (dir_ / "b").string()), 0);
  ASSERT_EQ(run("simulate --config " + cfg + " --seed 6 --out-dir " + (dir_ / "c").string()), 0);
  EXPECT_EQ(read(dir_ / "a" / "array.pbriq"), read(dir_ / "b" / "array.pbriq"));
  EXPECT_NE(read(dir_ / "a" / "array.pbriq"), read(dir_ / "c" / "array.pbriq"));
  EXPECT_EQ(nlohmann::json::parse(read(dir_ / "c" / "manifest.json"))["seed"], 6);
}

TEST_F(Cli, SingleAntennaFileIsProcessed) {
  const std::string cfg = config(1);
  ASSERT_EQ(run("simulate --config " + cfg + " --out-dir " + (dir_ / "sim").string()), 0) << stderr_text();
  ASSERT_EQ(run("process --config " + cfg + " --iq " + (dir_ / "sim" / "array.pbriq").string() + " --truth " +
                (dir_ / "sim" / "truth.csv").string() + " --out-dir " + (dir_ / "proc").string()),
            0)
      << stderr_text();
  const std::string det = read(dir_ / "proc" / "detections.csv");
  EXPECT_EQ(det.substr(0, det.find('\n')), "pass,range_bin,range_m,doppler_hz,angle_deg,power_db");
  EXPECT_TRUE(fs::exists(dir_ / "proc" / "rd_map_pass1.csv"));
  EXPECT_EQ(lines(dir_ / "proc" / "rd_map_pass1.csv"), 1u + 41u * 21u);
  EXPECT_TRUE(fs::exists(dir_ / "proc" / "score.csv"));
  // With one antenna the reference is the data itself; the run flags it.
  const auto manifest = nlohmann::json::parse(read(dir_ / "proc" / "manifest.json"));
  ASSERT_FALSE(manifest["warnings"].empty());
  EXPECT_NE(manifest["warnings"][0].get<std::string>().find("single antenna"), std::string::npos);
}

TEST_F(Cli, DimensionMismatchIsReported) {
  ASSERT_EQ(run("simulate --config " + config(1) + " --out-dir " + (dir_ / "sim").string()), 0);
  const fs::path out = dir_ / "proc";
  EXPECT_EQ(run("process --config " + config(4, "four.yaml") + " --iq " + (dir_ / "sim" / "array.pbriq").string() +
                " --out-dir " + out.string()),
            2);
  EXPECT_NE(stderr_text().find("antennas"), std::string::npos) << stderr_text();
  EXPECT_FALSE(fs::exists(out / "detections.csv"));
}

TEST_F(Cli, CompareReportsBothCancellers) {
  ASSERT_EQ(run("compare-cancellers --config " + config(2) + " --out-dir " + (dir_ / "cmp").string()), 0)
      << stderr_text();
  const std::string csv = read(dir_ / "cmp" / "compare.csv");
  std::istringstream in(csv);
  std::string header, eca, meca, extra;
  std::getline(in, header);
  std::getline(in, eca);
  std::getline(in, meca);
  EXPECT_FALSE(std::getline(in, extra));
  EXPECT_EQ(header, "canceller,clutter_residual_db,sidelobe_residual_db,noise_floor_db,runtime_ms");
  EXPECT_EQ(eca.rfind("ECA,", 0), 0u);
  EXPECT_EQ(meca.rfind("MECA,", 0), 0u);
}

TEST_F(Cli, WindowFlagIsValidated) {
  EXPECT_EQ(run("compare-cancellers --config " + config(2) + " --window-s 0.2 --out-dir " + (dir_ / "o").string()),
            2);
}

TEST_F(Cli, AafGridMatchesExtents) {
  const std::string cfg = config(1);
  ASSERT_EQ(run("aaf --config " + cfg + " --out-dir " + (dir_ / "aaf").string()), 0) << stderr_text();
  // 21 delays x (2 * 100 Hz / 20 Hz + 1) Doppler bins for a 0.05 s window.
  EXPECT_EQ(lines(dir_ / "aaf" / "aaf_grid.csv"), 1u + 21u * 11u);
  EXPECT_EQ(lines(dir_ / "aaf" / "aaf_zero_range.csv"), 1u + 11u);
  EXPECT_EQ(lines(dir_ / "aaf" / "aaf_zero_doppler.csv"), 1u + 21u);
  const auto s = nlohmann::json::parse(read(dir_ / "aaf" / "aaf_summary.json"));
  EXPECT_EQ(s["delay_bins"], 21);
  EXPECT_EQ(s["doppler_bins"], 11);

  ASSERT_EQ(run("simulate --config " + config(2, "two.yaml") + " --out-dir " + (dir_ / "sim").string()), 0);
  EXPECT_EQ(run("aaf --signal " + (dir_ / "sim" / "array.pbriq").string() + " --out-dir " + (dir_ / "x").string()),
            2);
  ASSERT_EQ(run("aaf --signal " + (dir_ / "sim" / "illuminator.pbriq").string() + " --out-dir " +
                (dir_ / "y").string()),
            0)
      << stderr_text();
  EXPECT_FALSE(fs::exists(dir_ / "y" / "modulating_spectrum.csv"));
}

}  // namespace
