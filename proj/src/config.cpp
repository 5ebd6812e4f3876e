#include "pbr/config.hpp"

#include <yaml-cpp/yaml.h>

#include <array>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <random>
#include <set>
#include <sstream>

namespace pbr {
namespace {

std::string located(const std::string& source, int line, const std::string& message) {
  if (line <= 0) return source + ": " + message;
  return source + ":" + std::to_string(line) + ": " + message;
}

class Reader {
 public:
  explicit Reader(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void fail(const YAML::Node& node, const std::string& message) const {
    const int line = node.IsDefined() ? node.Mark().line + 1 : 0;
    throw ConfigError(source_, line, message);
  }

  void require_map(const YAML::Node& node, const std::string& what) const {
    if (!node.IsMap()) fail(node, what + " must be a mapping");
  }

  void check_keys(const YAML::Node& map, const std::string& section,
                  std::initializer_list<const char*> allowed) const {
    const std::set<std::string> names(allowed.begin(), allowed.end());
    for (const auto& kv : map) {
      const auto key = kv.first.as<std::string>();
      if (names.count(key) == 0) fail(kv.first, "unknown key '" + key + "' in " + section);
    }
  }

  template <typename T>
  T scalar(const YAML::Node& node, const std::string& key, const char* type) const {
    if (!node.IsScalar()) fail(node, "'" + key + "' must be " + type);
    try {
      return node.as<T>();
    } catch (const YAML::BadConversion&) {
      fail(node, "'" + key + "' must be " + type);
    }
  }

  double number(const YAML::Node& map, const std::string& key, double fallback) const {
    const YAML::Node n = map[key];
    if (!n.IsDefined()) return fallback;
    const auto v = scalar<double>(n, key, "a number");
    if (!std::isfinite(v)) fail(n, "'" + key + "' must be finite");
    return v;
  }

  int integer(const YAML::Node& map, const std::string& key, int fallback) const {
    const YAML::Node n = map[key];
    if (!n.IsDefined()) return fallback;
    return scalar<int>(n, key, "an integer");
  }

  bool boolean(const YAML::Node& map, const std::string& key, bool fallback) const {
    const YAML::Node n = map[key];
    if (!n.IsDefined()) return fallback;
    return scalar<bool>(n, key, "true or false");
  }

  /// A real scalar or a [re, im] pair.
  cd complex(const YAML::Node& map, const std::string& key, cd fallback) const {
    const YAML::Node n = map[key];
    if (!n.IsDefined()) return fallback;
    if (n.IsSequence()) {
      if (n.size() != 2) fail(n, "'" + key + "' must be a number or a [re, im] pair");
      const auto re = scalar<double>(n[0], key, "a number or a [re, im] pair");
      const auto im = scalar<double>(n[1], key, "a number or a [re, im] pair");
      if (!std::isfinite(re) || !std::isfinite(im)) fail(n, "'" + key + "' must be finite");
      return {re, im};
    }
    const auto v = scalar<double>(n, key, "a number or a [re, im] pair");
    if (!std::isfinite(v)) fail(n, "'" + key + "' must be finite");
    return {v, 0.0};
  }

  template <typename Fn>
  void checked(const YAML::Node& node, Fn&& fn) const {
    try {
      fn();
    } catch (const std::invalid_argument& e) {
      fail(node, e.what());
    }
  }

 private:
  std::string source_;
};

DelayMode parse_delay_mode(const Reader& r, const YAML::Node& map, DelayMode fallback) {
  const YAML::Node n = map["delay_mode"];
  if (!n.IsDefined()) return fallback;
  const auto s = r.scalar<std::string>(n, "delay_mode", "a string");
  if (s == "circular") return DelayMode::circular;
  if (s == "linear") return DelayMode::linear;
  r.fail(n, "delay_mode must be 'circular' or 'linear'");
}

void check_angle(const Reader& r, const YAML::Node& item, double angle) {
  if (!(angle >= 0.0 && angle <= 180.0)) r.fail(item, "angle_deg must lie in [0, 180]");
}

void parse_scenario(const Reader& r, const YAML::Node& node, RunConfig& cfg) {
  r.require_map(node, "scenario");
  r.check_keys(node, "scenario",
               {"sample_rate", "duration_s", "noise_power", "delay_mode", "geometry", "direct_path",
                "clutter", "targets"});
  ScenarioConfig& s = cfg.scenario;
  s.sample_rate = r.number(node, "sample_rate", s.sample_rate);
  s.duration_s = r.number(node, "duration_s", s.duration_s);
  s.noise_power = r.number(node, "noise_power", s.noise_power);
  s.delay_mode = parse_delay_mode(r, node, s.delay_mode);
  std::size_t rows = 0;
  r.checked(node, [&] { rows = s.num_samples(); });

  if (const YAML::Node g = node["geometry"]; g.IsDefined()) {
    r.require_map(g, "scenario.geometry");
    r.check_keys(g, "scenario.geometry", {"num_antennas", "spacing_m", "wavelength_m", "allow_grating_lobes"});
    s.geometry.num_antennas = r.integer(g, "num_antennas", s.geometry.num_antennas);
    s.geometry.wavelength_m = r.number(g, "wavelength_m", s.geometry.wavelength_m);
    s.geometry.spacing_m = r.number(g, "spacing_m", 0.5 * s.geometry.wavelength_m);
    s.geometry.allow_grating_lobes = r.boolean(g, "allow_grating_lobes", s.geometry.allow_grating_lobes);
    r.checked(g, [&] { (void)s.geometry.validate(); });
  }

  if (const YAML::Node d = node["direct_path"]; d.IsDefined()) {
    r.require_map(d, "scenario.direct_path");
    r.check_keys(d, "scenario.direct_path", {"angle_deg", "amplitude"});
    s.direct_path_angle_deg = r.number(d, "angle_deg", s.direct_path_angle_deg);
    check_angle(r, d, s.direct_path_angle_deg);
    s.direct_path_amplitude = r.complex(d, "amplitude", s.direct_path_amplitude);
    cfg.processing.direct_path_angle_deg = s.direct_path_angle_deg;
  }

  auto delay_of = [&](const YAML::Node& item) {
    const int delay = r.integer(item, "delay", 0);
    if (delay < 0 || static_cast<std::size_t>(delay) >= rows) {
      r.fail(item, "delay must lie in [0, " + std::to_string(rows) + ")");
    }
    return delay;
  };

  s.clutter.clear();
  if (const YAML::Node list = node["clutter"]; list.IsDefined() && !list.IsNull()) {
    if (!list.IsSequence()) r.fail(list, "scenario.clutter must be a list");
    for (const auto& item : list) {
      r.require_map(item, "clutter entry");
      r.check_keys(item, "clutter entry", {"delay", "angle_deg", "amplitude"});
      if (!item["delay"].IsDefined()) r.fail(item, "clutter entry needs a delay");
      ClutterParam c;
      c.delay_samples = delay_of(item);
      c.angle_deg = r.number(item, "angle_deg", c.angle_deg);
      check_angle(r, item, c.angle_deg);
      c.amplitude = r.complex(item, "amplitude", c.amplitude);
      s.clutter.push_back(c);
    }
  }

  s.targets.clear();
  if (const YAML::Node list = node["targets"]; list.IsDefined() && !list.IsNull()) {
    if (!list.IsSequence()) r.fail(list, "scenario.targets must be a list");
    for (const auto& item : list) {
      r.require_map(item, "target entry");
      r.check_keys(item, "target entry", {"delay", "doppler_hz", "angle_deg", "amplitude"});
      if (!item["delay"].IsDefined()) r.fail(item, "target entry needs a delay");
      TargetParam t;
      t.delay_samples = delay_of(item);
      t.doppler_hz = r.number(item, "doppler_hz", t.doppler_hz);
      if (!(std::abs(t.doppler_hz) < 0.5 * s.sample_rate)) r.fail(item, "|doppler_hz| must be below fs/2");
      t.angle_deg = r.number(item, "angle_deg", t.angle_deg);
      check_angle(r, item, t.angle_deg);
      t.amplitude = r.complex(item, "amplitude", t.amplitude);
      s.targets.push_back(t);
    }
  }
  r.checked(node, [&] { s.validate(); });
}

void parse_illuminator(const Reader& r, const YAML::Node& node, IlluminatorConfig& il) {
  r.require_map(node, "illuminator");
  r.check_keys(node, "illuminator",
               {"freq_deviation_hz", "highpass_hz", "highpass_order", "lowpass_hz", "lowpass_order",
                "tilt_exponent"});
  il.freq_deviation_hz = r.number(node, "freq_deviation_hz", il.freq_deviation_hz);
  il.shape.highpass_hz = r.number(node, "highpass_hz", il.shape.highpass_hz);
  il.shape.highpass_order = r.integer(node, "highpass_order", il.shape.highpass_order);
  il.shape.lowpass_hz = r.number(node, "lowpass_hz", il.shape.lowpass_hz);
  il.shape.lowpass_order = r.integer(node, "lowpass_order", il.shape.lowpass_order);
  il.shape.tilt_exponent = r.number(node, "tilt_exponent", il.shape.tilt_exponent);
  if (!(il.freq_deviation_hz > 0.0)) r.fail(node, "freq_deviation_hz must be positive");
  if (!(il.shape.lowpass_hz > 0.0) || !(il.shape.highpass_hz >= 0.0)) {
    r.fail(node, "filter corners must be non-negative (low-pass positive)");
  }
  if (il.shape.highpass_order < 0 || il.shape.lowpass_order < 0) r.fail(node, "filter orders must be >= 0");
}

void parse_processing(const Reader& r, const YAML::Node& node, ProcessingConfig& p) {
  r.require_map(node, "processing");
  r.check_keys(node, "processing",
               {"canceller", "direct_path_angle_deg", "meca", "eca", "joint_projection", "ls_route",
                "rank_tolerance"});
  if (const YAML::Node c = node["canceller"]; c.IsDefined()) {
    r.checked(c, [&] { p.canceller = parse_canceller(r.scalar<std::string>(c, "canceller", "a string")); });
  }
  p.direct_path_angle_deg = r.number(node, "direct_path_angle_deg", p.direct_path_angle_deg);
  check_angle(r, node, p.direct_path_angle_deg);
  if (const YAML::Node m = node["meca"]; m.IsDefined()) {
    r.require_map(m, "processing.meca");
    r.check_keys(m, "processing.meca", {"q_bar", "p"});
    p.meca_q_bar = r.integer(m, "q_bar", p.meca_q_bar);
    p.meca_p = r.integer(m, "p", p.meca_p);
    if (p.meca_q_bar < 1 || p.meca_p < 0) r.fail(m, "meca needs q_bar >= 1 and p >= 0");
  }
  if (const YAML::Node e = node["eca"]; e.IsDefined()) {
    r.require_map(e, "processing.eca");
    r.check_keys(e, "processing.eca", {"q", "p", "window_s"});
    p.eca_q = r.integer(e, "q", p.eca_q);
    p.eca_p = r.integer(e, "p", p.eca_p);
    p.eca_window_s = r.number(e, "window_s", p.eca_window_s);
    if (p.eca_q < 1 || p.eca_p < 0) r.fail(e, "eca needs q >= 1 and p >= 0");
    if (!(p.eca_window_s > 0.0)) r.fail(e, "eca window_s must be positive");
  }
  p.joint_projection = r.boolean(node, "joint_projection", p.joint_projection);
  if (const YAML::Node n = node["ls_route"]; n.IsDefined()) {
    const auto s = r.scalar<std::string>(n, "ls_route", "a string");
    if (s == "automatic") {
      p.ls.route = LsRoute::automatic;
    } else if (s == "dense") {
      p.ls.route = LsRoute::dense;
    } else if (s == "structured") {
      p.ls.route = LsRoute::structured;
    } else {
      r.fail(n, "ls_route must be 'automatic', 'dense' or 'structured'");
    }
  }
  p.ls.gram_rank_tolerance = r.number(node, "rank_tolerance", p.ls.gram_rank_tolerance);
  if (!(p.ls.gram_rank_tolerance > 0.0 && p.ls.gram_rank_tolerance < 1.0)) {
    r.fail(node, "rank_tolerance must lie in (0, 1)");
  }
}

void parse_detector(const Reader& r, const YAML::Node& node, DetectorConfig& d) {
  r.require_map(node, "detector");
  r.check_keys(node, "detector",
               {"max_delay", "doppler_span_hz", "threshold_db", "guard_delay", "guard_doppler",
                "dynamic_range_db", "max_passes", "r0", "f0", "strong_window", "summation", "delay_mode",
                "angle_step_deg"});
  d.max_delay = r.integer(node, "max_delay", d.max_delay);
  d.doppler_span_hz = r.number(node, "doppler_span_hz", d.doppler_span_hz);
  d.threshold_db = r.number(node, "threshold_db", d.threshold_db);
  d.guard_delay = r.integer(node, "guard_delay", d.guard_delay);
  d.guard_doppler = r.integer(node, "guard_doppler", d.guard_doppler);
  d.dynamic_range_db = r.number(node, "dynamic_range_db", d.dynamic_range_db);
  d.max_passes = r.integer(node, "max_passes", d.max_passes);
  d.r0 = r.integer(node, "r0", d.r0);
  d.f0 = r.integer(node, "f0", d.f0);
  d.angle_step_deg = r.number(node, "angle_step_deg", d.angle_step_deg);
  d.delay_mode = parse_delay_mode(r, node, d.delay_mode);
  if (const YAML::Node n = node["strong_window"]; n.IsDefined()) {
    const auto s = r.scalar<std::string>(n, "strong_window", "a string");
    if (s == "literal") {
      d.strong_window = StrongTargetWindow::literal;
    } else if (s == "windowed") {
      d.strong_window = StrongTargetWindow::windowed;
    } else {
      r.fail(n, "strong_window must be 'literal' or 'windowed'");
    }
  }
  if (const YAML::Node n = node["summation"]; n.IsDefined()) {
    const auto s = r.scalar<std::string>(n, "summation", "a string");
    if (s == "incoherent") {
      d.summation = AntennaSummation::incoherent;
    } else if (s == "coherent") {
      d.summation = AntennaSummation::coherent;
    } else {
      r.fail(n, "summation must be 'incoherent' or 'coherent'");
    }
  }
  r.checked(node, [&] { d.validate(); });
}

void parse_compare(const Reader& r, const YAML::Node& node, CompareConfig& c) {
  r.require_map(node, "compare");
  r.check_keys(node, "compare", {"sidelobe_span_hz", "delays"});
  c.sidelobe_span_hz = r.number(node, "sidelobe_span_hz", c.sidelobe_span_hz);
  if (!(c.sidelobe_span_hz > 0.0)) r.fail(node, "sidelobe_span_hz must be positive");
  if (const YAML::Node list = node["delays"]; list.IsDefined()) {
    if (!list.IsSequence()) r.fail(list, "compare.delays must be a list of integers");
    c.delays.clear();
    for (const auto& item : list) {
      const int v = r.scalar<int>(item, "delays", "an integer");
      if (v < 0) r.fail(item, "compare.delays entries must be >= 0");
      c.delays.push_back(v);
    }
  }
}

void parse_aaf(const Reader& r, const YAML::Node& node, AafConfig& a) {
  r.require_map(node, "aaf");
  r.check_keys(node, "aaf", {"max_delay", "doppler_span_hz", "guard_delay", "guard_doppler"});
  a.max_delay = r.integer(node, "max_delay", a.max_delay);
  a.doppler_span_hz = r.number(node, "doppler_span_hz", a.doppler_span_hz);
  a.guard_delay = r.integer(node, "guard_delay", a.guard_delay);
  a.guard_doppler = r.integer(node, "guard_doppler", a.guard_doppler);
  if (a.max_delay < 0 || !(a.doppler_span_hz >= 0.0)) r.fail(node, "aaf extents must be non-negative");
  if (a.guard_delay < 0 || a.guard_doppler < 0) r.fail(node, "aaf guards must be non-negative");
}

}  // namespace

ConfigError::ConfigError(const std::string& source, int line, const std::string& message)
    : std::runtime_error(located(source, line, message)), line_(line) {}

Canceller parse_canceller(const std::string& name) {
  if (name == "meca") return Canceller::meca;
  if (name == "eca") return Canceller::eca;
  throw std::invalid_argument("canceller must be 'meca' or 'eca', got '" + name + "'");
}

std::string canceller_name(Canceller c) { return c == Canceller::meca ? "MECA" : "ECA"; }

EcaConfig eca_config(const ProcessingConfig& p, std::size_t total_rows, double sample_rate) {
  const double rows_f = p.eca_window_s * sample_rate;
  const auto rows = static_cast<long long>(std::llround(rows_f));
  if (std::abs(rows_f - static_cast<double>(rows)) > 1e-6 * std::max(1.0, rows_f)) {
    throw std::invalid_argument("ECA window is not a whole number of samples");
  }
  if (rows < 1 || static_cast<std::size_t>(rows) > total_rows) {
    throw std::invalid_argument("ECA window must be positive and no longer than the record");
  }
  EcaConfig e;
  e.Q = p.eca_q;
  e.P = p.eca_p;
  e.R = static_cast<int>(static_cast<long long>(total_rows) - rows + 1);
  return e;
}

RunConfig parse_config(const std::string& text, const std::string& source) {
  const Reader r(source);
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(source, e.mark.line + 1, e.msg);
  }
  RunConfig cfg;
  cfg.source = source;
  if (root.IsNull()) return cfg;
  r.require_map(root, "configuration");
  r.check_keys(root, "configuration", {"seed", "scenario", "illuminator", "processing", "detector", "compare", "aaf"});

  if (const YAML::Node n = root["seed"]; n.IsDefined()) {
    cfg.seed = r.scalar<std::uint64_t>(n, "seed", "a non-negative integer");
  }
  if (const YAML::Node n = root["scenario"]; n.IsDefined()) parse_scenario(r, n, cfg);
  if (const YAML::Node n = root["illuminator"]; n.IsDefined()) parse_illuminator(r, n, cfg.illuminator);
  if (const YAML::Node n = root["processing"]; n.IsDefined()) parse_processing(r, n, cfg.processing);
  if (const YAML::Node n = root["detector"]; n.IsDefined()) parse_detector(r, n, cfg.detector);
  if (const YAML::Node n = root["compare"]; n.IsDefined()) parse_compare(r, n, cfg.compare);
  if (const YAML::Node n = root["aaf"]; n.IsDefined()) parse_aaf(r, n, cfg.aaf);

  if (cfg.illuminator.freq_deviation_hz >= 0.5 * cfg.scenario.sample_rate) {
    throw ConfigError(source, root["illuminator"].IsDefined() ? root["illuminator"].Mark().line + 1 : 0,
                      "freq_deviation_hz must be below half the sample rate");
  }
  apply_seed(cfg, cfg.seed);
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path, 0, "cannot open configuration file");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), path);
}

void apply_seed(RunConfig& cfg, std::uint64_t seed) {
  cfg.seed = seed;
  cfg.scenario.rng_seed = noise_seed(seed);
}

std::uint64_t noise_seed(std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), 0x6e6f6973u};
  std::array<std::uint32_t, 2> words{};
  seq.generate(words.begin(), words.end());
  return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

}  // namespace pbr
