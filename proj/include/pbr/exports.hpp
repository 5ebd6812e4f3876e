#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "pbr/pipeline.hpp"

namespace pbr {

/// Collects output files under temporary names and renames them into place on
/// commit(). Uncommitted files are removed on destruction, so a failed run
/// leaves no partial outputs behind.
class OutputStage {
 public:
  explicit OutputStage(std::filesystem::path dir);
  ~OutputStage();
  OutputStage(const OutputStage&) = delete;
  OutputStage& operator=(const OutputStage&) = delete;

  /// Temporary path to write `name` to.
  std::filesystem::path stage(const std::string& name);
  void write_text(const std::string& name, const std::string& content);
  void commit();

  [[nodiscard]] const std::filesystem::path& dir() const { return dir_; }
  [[nodiscard]] std::vector<std::string> names() const;

 private:
  std::filesystem::path dir_;
  std::vector<std::pair<std::string, std::filesystem::path>> files_;
  bool committed_ = false;
};

std::string truth_csv(const ScenarioConfig& s);
/// Targets listed in a truth CSV.
std::vector<TargetParam> read_truth_targets(const std::string& path);

std::string detections_csv(const std::vector<Detection>& detections);
/// Magnitude in dB relative to `scale`.
std::string rd_map_csv(const RangeDopplerMap& map, double scale);
std::string compare_csv(const CompareReport& report);
std::string score_csv(const std::vector<TruthMatch>& matches);

/// Full AAF grid in dB relative to the signal energy.
std::string aaf_grid_csv(const AafReport& aaf);
/// Doppler cut at zero delay.
std::string aaf_zero_range_csv(const AafReport& aaf);
/// Delay cut at zero Doppler.
std::string aaf_zero_doppler_csv(const AafReport& aaf);
std::string spectrum_csv(const Spectrum& spectrum);
std::string aaf_summary_json(const AafReport& aaf);

struct RunManifest {
  std::string command;
  std::string config_path;
  std::uint64_t seed = 0;
  std::string version;
  std::vector<std::string> outputs;
  std::vector<std::pair<std::string, double>> timing_ms;
  double wall_ms = 0.0;
  std::vector<std::string> warnings;
};

std::string manifest_json(const RunManifest& m);

}  // namespace pbr
