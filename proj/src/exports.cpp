#include "pbr/exports.hpp"

#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace pbr {
namespace fs = std::filesystem;
namespace {

__attribute__((format(printf, 2, 3))) void append(std::string& out, const char* fmt, ...) {
  char buf[512];
  va_list args;
  va_start(args, fmt);
  const int n = std::vsnprintf(buf, sizeof buf, fmt, args);
  va_end(args);
  if (n < 0) throw std::runtime_error("formatting failed");
  if (static_cast<std::size_t>(n) < sizeof buf) {
    out.append(buf, static_cast<std::size_t>(n));
    return;
  }
  std::string big(static_cast<std::size_t>(n) + 1, '\0');
  va_start(args, fmt);
  std::vsnprintf(big.data(), big.size(), fmt, args);
  va_end(args);
  big.pop_back();
  out += big;
}

double db20(double ratio) { return 20.0 * std::log10(ratio); }

// Fixed text for non-finite values; printf spells them differently across libcs.
std::string num(double v, const char* fmt = "%.6f") {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::string s;
  append(s, fmt, v);
  return s;
}

nlohmann::ordered_json json_number(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

}  // namespace

OutputStage::OutputStage(fs::path dir) : dir_(std::move(dir)) {}

OutputStage::~OutputStage() {
  if (committed_) return;
  std::error_code ec;
  for (const auto& f : files_) fs::remove(f.second, ec);
}

fs::path OutputStage::stage(const std::string& name) {
  if (committed_) throw std::logic_error("OutputStage: already committed");
  for (const auto& f : files_) {
    if (f.first == name) return f.second;
  }
  fs::create_directories(dir_);
  fs::path tmp = dir_ / ("." + name + ".partial");
  files_.emplace_back(name, tmp);
  return tmp;
}

void OutputStage::write_text(const std::string& name, const std::string& content) {
  const fs::path tmp = stage(name);
  std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + tmp.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw std::runtime_error("write failed: " + tmp.string());
}

void OutputStage::commit() {
  for (const auto& f : files_) {
    if (!fs::exists(f.second)) throw std::runtime_error("staged output missing: " + f.second.string());
  }
  for (const auto& f : files_) fs::rename(f.second, dir_ / f.first);
  committed_ = true;
}

std::vector<std::string> OutputStage::names() const {
  std::vector<std::string> out;
  for (const auto& f : files_) out.push_back(f.first);
  return out;
}

std::string truth_csv(const ScenarioConfig& s) {
  const double m_per_bin = kSpeedOfLight / s.sample_rate;
  std::string out = "kind,delay_samples,range_m,doppler_hz,angle_deg,amplitude_re,amplitude_im\n";
  const auto row = [&](const char* kind, int delay, double doppler, double angle, cd a) {
    append(out, "%s,%d,%.3f,%.6f,%.6f,%.9g,%.9g\n", kind, delay, delay * m_per_bin, doppler, angle, a.real(),
           a.imag());
  };
  row("direct", 0, 0.0, s.direct_path_angle_deg, s.direct_path_amplitude);
  for (const auto& c : s.clutter) row("clutter", c.delay_samples, 0.0, c.angle_deg, c.amplitude);
  for (const auto& t : s.targets) row("target", t.delay_samples, t.doppler_hz, t.angle_deg, t.amplitude);
  return out;
}

std::vector<TargetParam> read_truth_targets(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open truth file " + path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("kind,", 0) != 0) {
    throw std::invalid_argument(path + ": not a truth file");
  }
  std::vector<TargetParam> out;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != 7) throw std::invalid_argument(path + ":" + std::to_string(line_no) + ": expected 7 columns");
    if (cells[0] != "target") continue;
    try {
      TargetParam t;
      t.delay_samples = std::stoi(cells[1]);
      t.doppler_hz = std::stod(cells[3]);
      t.angle_deg = std::stod(cells[4]);
      t.amplitude = cd(std::stod(cells[5]), std::stod(cells[6]));
      out.push_back(t);
    } catch (const std::logic_error&) {
      throw std::invalid_argument(path + ":" + std::to_string(line_no) + ": malformed number");
    }
  }
  return out;
}

std::string detections_csv(const std::vector<Detection>& detections) {
  std::string out = "pass,range_bin,range_m,doppler_hz,angle_deg,power_db\n";
  for (const auto& d : detections) {
    append(out, "%d,%d,%.3f,%.6f,%s,%.4f\n", d.pass, d.range_bin, d.range_m, d.doppler_hz,
           num(d.angle_deg, "%.2f").c_str(), d.power_db);
  }
  return out;
}

std::string rd_map_csv(const RangeDopplerMap& map, double scale) {
  std::string out = "range_bin,range_m,doppler_hz,magnitude_db\n";
  const double m_per_bin = map.meters_per_bin();
  for (std::size_t i = 0; i < map.num_delays(); ++i) {
    for (std::size_t j = 0; j < map.num_dopplers(); ++j) {
      const double db = db20(std::abs(map.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))) / scale);
      append(out, "%d,%.3f,%.6f,%s\n", map.delay_bins[i], map.delay_bins[i] * m_per_bin, map.doppler_hz[j],
             num(db, "%.4f").c_str());
    }
  }
  return out;
}

std::string compare_csv(const CompareReport& report) {
  std::string out = "canceller,clutter_residual_db,sidelobe_residual_db,noise_floor_db,runtime_ms\n";
  const std::string floor = report.noise_floor ? num(report.noise_floor->clutter_db, "%.4f") : "";
  for (const auto& r : report.rows) {
    append(out, "%s,%s,%s,%s,%.3f\n", canceller_name(r.canceller).c_str(), num(r.residual.clutter_db, "%.4f").c_str(),
           num(r.residual.sidelobe_db, "%.4f").c_str(), floor.c_str(), r.runtime_ms);
  }
  return out;
}

std::string score_csv(const std::vector<TruthMatch>& matches) {
  std::string out =
      "truth_range_bin,truth_doppler_hz,truth_angle_deg,pass,range_bin,doppler_hz,angle_deg,within_tolerance\n";
  for (const auto& m : matches) {
    append(out, "%d,%.6f,%.6f,", m.truth.delay_samples, m.truth.doppler_hz, m.truth.angle_deg);
    if (m.detection) {
      append(out, "%d,%d,%.6f,%s,", m.detection->pass, m.detection->range_bin, m.detection->doppler_hz,
             num(m.detection->angle_deg, "%.2f").c_str());
    } else {
      out += ",,,,";
    }
    out += m.within_tolerance ? "1\n" : "0\n";
  }
  return out;
}

std::string aaf_grid_csv(const AafReport& aaf) { return rd_map_csv(aaf.map, aaf.energy); }

std::string aaf_zero_range_csv(const AafReport& aaf) {
  std::string out = "doppler_hz,magnitude_db\n";
  for (std::size_t j = 0; j < aaf.map.num_dopplers(); ++j) {
    const double db = db20(std::abs(aaf.map.values(0, static_cast<Eigen::Index>(j))) / aaf.energy);
    append(out, "%.6f,%s\n", aaf.map.doppler_hz[j], num(db, "%.4f").c_str());
  }
  return out;
}

std::string aaf_zero_doppler_csv(const AafReport& aaf) {
  std::string out = "range_bin,range_m,magnitude_db\n";
  const auto col = static_cast<Eigen::Index>(aaf.pslr.peak_doppler_index);
  for (std::size_t i = 0; i < aaf.map.num_delays(); ++i) {
    const double db = db20(std::abs(aaf.map.values(static_cast<Eigen::Index>(i), col)) / aaf.energy);
    append(out, "%d,%.3f,%s\n", aaf.map.delay_bins[i], aaf.map.delay_bins[i] * aaf.map.meters_per_bin(),
           num(db, "%.4f").c_str());
  }
  return out;
}

std::string spectrum_csv(const Spectrum& spectrum) {
  std::string out = "frequency_hz,power_db\n";
  for (std::size_t i = 0; i < spectrum.frequency_hz.size(); ++i) {
    append(out, "%.3f,%s\n", spectrum.frequency_hz[i], num(spectrum.power_db[i], "%.4f").c_str());
  }
  return out;
}

std::string aaf_summary_json(const AafReport& aaf) {
  nlohmann::ordered_json j;
  j["energy"] = aaf.energy;
  j["pslr_db"] = json_number(aaf.pslr.db);
  j["pslr_unbounded"] = aaf.pslr.unbounded;
  j["sidelobe_range_bin"] = aaf.pslr.sidelobe_delay_bin;
  j["sidelobe_doppler_hz"] = aaf.pslr.sidelobe_doppler_hz;
  j["occupied_bandwidth_hz"] = aaf.occupied_bandwidth_hz;
  j["delay_bins"] = aaf.map.num_delays();
  j["doppler_bins"] = aaf.map.num_dopplers();
  return j.dump(2) + "\n";
}

std::string manifest_json(const RunManifest& m) {
  nlohmann::ordered_json j;
  j["command"] = m.command;
  j["config"] = m.config_path;
  j["seed"] = m.seed;
  j["version"] = m.version;
  j["outputs"] = m.outputs;
  nlohmann::ordered_json timing = nlohmann::ordered_json::object();
  for (const auto& [name, ms] : m.timing_ms) timing[name] = ms;
  j["timing_ms"] = timing;
  j["wall_ms"] = m.wall_ms;
  j["warnings"] = m.warnings;
  return j.dump(2) + "\n";
}

}  // namespace pbr
