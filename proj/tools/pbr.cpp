#include <chrono>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "pbr/exports.hpp"
#include "pbr/iq_file.hpp"

namespace {

using namespace pbr;
using Clock = std::chrono::steady_clock;

enum ExitCode { kOk = 0, kFailure = 1, kUsage = 2, kNumerical = 3 };

struct Options {
  std::string config;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::string canceller;
  std::optional<double> window_s;
  std::string iq;
  std::string signal;
  std::string truth;
};

RunConfig load(const Options& o) {
  RunConfig cfg = load_config(o.config);
  if (o.seed) apply_seed(cfg, *o.seed);
  if (!o.canceller.empty()) cfg.processing.canceller = parse_canceller(o.canceller);
  if (o.window_s) {
    if (!(*o.window_s > 0.0) || *o.window_s > cfg.scenario.duration_s) {
      throw std::invalid_argument("--window-s must lie in (0, scenario duration]");
    }
    cfg.processing.eca_window_s = *o.window_s;
  }
  return cfg;
}

ArrayData read_array(const std::string& path, const RunConfig& cfg) {
  IqMatrix m = read_iq_file(path);
  ArrayData x;
  x.matrix = std::move(m.samples);
  x.sample_rate = m.sample_rate;
  x.geometry = cfg.scenario.geometry;
  return x;
}

void write_iq(OutputStage& out, const std::string& name, const Eigen::MatrixXcd& samples, double fs) {
  write_iq_file(out.stage(name).string(), IqMatrix{samples, fs});
}

void finish(OutputStage& out, RunManifest& manifest, const StageTimer& timer, Clock::time_point start) {
  manifest.outputs = out.names();
  manifest.timing_ms = timer.stages();
  manifest.wall_ms = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
  out.write_text("manifest.json", manifest_json(manifest));
  out.commit();
}

RunManifest new_manifest(const std::string& command, const Options& o, const RunConfig& cfg) {
  RunManifest m;
  m.command = command;
  m.config_path = o.config;
  m.seed = cfg.seed;
  m.version = PBR_VERSION;
  return m;
}

int cmd_simulate(const Options& o) {
  const auto start = Clock::now();
  const RunConfig cfg = load(o);
  StageTimer timer;
  const Simulation sim = simulate(cfg, &timer);
  OutputStage out(o.out_dir);
  timer.run("write", [&] {
    write_iq(out, "array.pbriq", sim.array.matrix, sim.array.sample_rate);
    write_iq(out, "illuminator.pbriq", sim.illuminator.samples, sim.illuminator.sample_rate);
    out.write_text("truth.csv", truth_csv(cfg.scenario));
  });
  RunManifest manifest = new_manifest("simulate", o, cfg);
  finish(out, manifest, timer, start);
  return kOk;
}

int cmd_process(const Options& o) {
  const auto start = Clock::now();
  const RunConfig cfg = load(o);
  StageTimer timer;
  std::vector<TargetParam> truth;
  ArrayData x;
  if (!o.iq.empty()) {
    x = timer.run("read", [&] { return read_array(o.iq, cfg); });
    if (!o.truth.empty()) truth = read_truth_targets(o.truth);
  } else {
    x = simulate(cfg, &timer).array;
    truth = cfg.scenario.targets;
    if (!o.truth.empty()) truth = read_truth_targets(o.truth);
  }
  const ProcessResult r = process(x, cfg, &timer);

  RunManifest manifest = new_manifest("process", o, cfg);
  if (x.antennas() == 1) {
    manifest.warnings.push_back(
        "single antenna: the direct-path estimate is the surveillance channel itself, so cancellation removes echoes too");
  }
  if (!r.disturbance.warning.empty()) manifest.warnings.push_back(r.disturbance.warning);
  for (const auto& w : r.detection.warnings) manifest.warnings.push_back(w);
  if (r.detection.truncated) manifest.warnings.push_back("detection stopped at max_passes with peaks remaining");

  OutputStage out(o.out_dir);
  timer.run("write", [&] {
    out.write_text("detections.csv", detections_csv(r.detection.detections));
    const double scale = echo_scale(r.reference, x.antennas());
    for (std::size_t k = 0; k < r.detection.summed_maps.size(); ++k) {
      out.write_text("rd_map_pass" + std::to_string(k + 1) + ".csv", rd_map_csv(r.detection.summed_maps[k], scale));
    }
    if (!truth.empty() || !o.truth.empty()) {
      out.write_text("score.csv", score_csv(match_truth(truth, r.detection.detections)));
    }
  });
  finish(out, manifest, timer, start);
  return kOk;
}

int cmd_compare(const Options& o) {
  const auto start = Clock::now();
  const RunConfig cfg = load(o);
  StageTimer timer;
  CompareReport report;
  if (!o.iq.empty()) {
    const ArrayData x = timer.run("read", [&] { return read_array(o.iq, cfg); });
    report = timer.run("compare", [&] { return compare_cancellers(x, cfg, nullptr); });
  } else {
    const Simulation sim = simulate(cfg, &timer);
    const ArrayData floor = timer.run("simulate_noise", [&] { return simulate_noise_only(cfg, sim.illuminator); });
    report = timer.run("compare", [&] { return compare_cancellers(sim.array, cfg, &floor); });
  }
  OutputStage out(o.out_dir);
  timer.run("write", [&] { out.write_text("compare.csv", compare_csv(report)); });
  RunManifest manifest = new_manifest("compare-cancellers", o, cfg);
  finish(out, manifest, timer, start);
  return kOk;
}

int cmd_aaf(const Options& o) {
  const auto start = Clock::now();
  if (o.signal.empty() && o.config.empty()) throw std::invalid_argument("aaf needs --signal or --config");
  RunConfig cfg;
  if (!o.config.empty()) cfg = load(o);
  StageTimer timer;
  AafReport aaf;
  if (!o.signal.empty()) {
    const IqMatrix m = timer.run("read", [&] { return read_iq_file(o.signal); });
    if (m.samples.cols() != 1) throw std::invalid_argument(o.signal + ": expected a single-column signal");
    const ComplexSignal s{m.samples.col(0), m.sample_rate};
    aaf = timer.run("aaf", [&] { return analyse_aaf(s, cfg.aaf); });
  } else {
    const Simulation sim = timer.run("synthesize", [&] {
      Simulation s;
      s.modulating = synth_modulating_signal(cfg.seed, cfg.scenario.duration_s, cfg.scenario.sample_rate,
                                             cfg.illuminator.shape);
      s.illuminator = fm_modulate(s.modulating, cfg.illuminator.freq_deviation_hz);
      return s;
    });
    aaf = timer.run("aaf", [&] { return analyse_aaf(sim.illuminator, cfg.aaf, &sim.modulating); });
  }
  OutputStage out(o.out_dir);
  timer.run("write", [&] {
    out.write_text("aaf_grid.csv", aaf_grid_csv(aaf));
    out.write_text("aaf_zero_range.csv", aaf_zero_range_csv(aaf));
    out.write_text("aaf_zero_doppler.csv", aaf_zero_doppler_csv(aaf));
    out.write_text("spectrum.csv", spectrum_csv(aaf.spectrum));
    if (aaf.modulating_spectrum) out.write_text("modulating_spectrum.csv", spectrum_csv(*aaf.modulating_spectrum));
    out.write_text("aaf_summary.json", aaf_summary_json(aaf));
  });
  RunManifest manifest = new_manifest("aaf", o, cfg);
  finish(out, manifest, timer, start);
  return kOk;
}

void add_common(CLI::App* cmd, Options& o, bool config_required) {
  auto* c = cmd->add_option("--config", o.config, "run configuration (YAML)");
  if (config_required) c->required();
  c->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "override the configured seed");
  cmd->add_option("--out-dir", o.out_dir, "output directory")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Passive bistatic radar simulation and processing"};
  app.set_version_flag("--version", PBR_VERSION);
  app.require_subcommand(1);
  Options o;

  auto* sim = app.add_subcommand("simulate", "simulate array data and the truth sidecar");
  add_common(sim, o, true);

  auto* proc = app.add_subcommand("process", "cancel, detect and estimate angles");
  add_common(proc, o, true);
  proc->add_option("--iq", o.iq, "array data file (simulated from the config when omitted)")->check(CLI::ExistingFile);
  proc->add_option("--canceller", o.canceller, "disturbance canceller")
      ->check(CLI::IsMember({"eca", "meca"}, CLI::ignore_case));
  proc->add_option("--window-s", o.window_s, "ECA data window in seconds");
  proc->add_option("--truth", o.truth, "truth sidecar for scoring")->check(CLI::ExistingFile);

  auto* cmp = app.add_subcommand("compare-cancellers", "residual power of ECA and MECA at the clutter cells");
  add_common(cmp, o, true);
  cmp->add_option("--iq", o.iq, "array data file (simulated from the config when omitted)")->check(CLI::ExistingFile);
  cmp->add_option("--window-s", o.window_s, "ECA data window in seconds");

  auto* aaf = app.add_subcommand("aaf", "auto-ambiguity diagnostics of the illuminator");
  add_common(aaf, o, false);
  aaf->add_option("--signal", o.signal, "single-column signal file")->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (sim->parsed()) return cmd_simulate(o);
    if (proc->parsed()) return cmd_process(o);
    if (cmp->parsed()) return cmd_compare(o);
    return cmd_aaf(o);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "pbr: config error: %s\n", e.what());
    return kUsage;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "pbr: invalid input: %s\n", e.what());
    return kUsage;
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "pbr: numerical failure: %s\n", e.what());
    return kNumerical;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "pbr: error: %s\n", e.what());
    return kFailure;
  }
}
