#pragma once

// Flat, strictly-typed experiment configuration. Files are YAML mappings of
// key: value; unknown or duplicate keys, wrong types and bad values are
// rejected with "source:line:" diagnostics. `--set key=value` overrides use
// the same parser.

#include "damisac/channel.hpp"
#include "damisac/common.hpp"

#include <yaml-cpp/yaml.h>

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace damisac {

enum class ParamType { Real, Integer, Text, Flag, RealList, IntList };

using ParamValue =
    std::variant<double, long long, std::string, bool, std::vector<double>, std::vector<long long>>;

struct ParamSpec {
  std::string key;
  ParamType type;
  ParamValue default_value;
  std::string help;
};

inline const char* to_string(ParamType t) {
  switch (t) {
    case ParamType::Real: return "real";
    case ParamType::Integer: return "integer";
    case ParamType::Text: return "string";
    case ParamType::Flag: return "bool";
    case ParamType::RealList: return "list of reals";
    case ParamType::IntList: return "list of integers";
  }
  return "?";
}

namespace detail {

inline double parse_real(std::string_view s) {
  std::string t(s);
  if (t == ".inf" || t == "+.inf" || t == ".Inf") t = "inf";
  if (t == "-.inf" || t == "-.Inf") t = "-inf";
  if (!t.empty() && t.front() == '+') t.erase(0, 1);
  double v = 0.0;
  const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc{} || p != t.data() + t.size() || std::isnan(v))
    throw ConfigError("expected a real number, got '" + std::string(s) + "'");
  return v;
}

inline long long parse_integer(std::string_view s) {
  long long v = 0;
  const char* b = s.data();
  if (!s.empty() && s.front() == '+') ++b;
  const auto [p, ec] = std::from_chars(b, s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size() || b == s.data() + s.size())
    throw ConfigError("expected an integer, got '" + std::string(s) + "'");
  return v;
}

inline bool parse_flag(std::string_view s) {
  if (s == "true" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "no" || s == "off") return false;
  throw ConfigError("expected true/false, got '" + std::string(s) + "'");
}

inline std::string where(const std::string& source, const YAML::Node& n) {
  return n.Mark().is_null() ? source : source + ":" + std::to_string(n.Mark().line + 1);
}

inline ParamValue convert(const YAML::Node& n, ParamType type) {
  auto scalar = [&](const YAML::Node& x) {
    if (!x.IsScalar()) throw ConfigError(std::string("expected a ") + to_string(type) + " scalar");
    return x.Scalar();
  };
  auto items = [&](const YAML::Node& x) {
    if (x.IsSequence()) return x;
    if (x.IsScalar()) {  // a bare scalar is a one-element list
      YAML::Node seq(YAML::NodeType::Sequence);
      seq.push_back(x);
      return seq;
    }
    throw ConfigError(std::string("expected a ") + to_string(type));
  };
  switch (type) {
    case ParamType::Real: return parse_real(scalar(n));
    case ParamType::Integer: return parse_integer(scalar(n));
    case ParamType::Text: return scalar(n);
    case ParamType::Flag: return parse_flag(scalar(n));
    case ParamType::RealList: {
      std::vector<double> v;
      for (const auto& x : items(n)) v.push_back(parse_real(scalar(x)));
      return v;
    }
    case ParamType::IntList: {
      std::vector<long long> v;
      for (const auto& x : items(n)) v.push_back(parse_integer(scalar(x)));
      return v;
    }
  }
  throw ConfigError("unsupported parameter type");
}

inline std::string format_real(double v) {
  if (std::isinf(v)) return v > 0 ? ".inf" : "-.inf";
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

}  // namespace detail

/// Every accepted key, its type, default (the paper-v1 preset) and meaning.
inline const std::vector<ParamSpec>& config_schema() {
  using V = std::vector<double>;
  using I = std::vector<long long>;
  static const std::vector<ParamSpec> schema = {
      {"preset", ParamType::Text, std::string("paper-v1"), "named default set; only paper-v1 exists"},
      // scenario
      {"carrier_freq_hz", ParamType::Real, 28e9, "carrier frequency fc"},
      {"bandwidth_hz", ParamType::Real, 100e6, "bandwidth B = 1/Ts"},
      {"coherence_time_s", ParamType::Real, 1e-3, "channel coherence time Tc"},
      {"guard_time_s", ParamType::Real, 4e-6, "guard interval Tp"},
      {"tx_power_dbm", ParamType::Real, 30.0, "transmit power Pt"},
      {"noise_power_dbm", ParamType::Real, -89.0, "noise power sigma^2"},
      {"num_tx_antennas", ParamType::Integer, 64LL, "ULA size M"},
      {"num_paths", ParamType::Integer, 3LL, "resolvable paths L"},
      {"comm_distance_m", ParamType::Real, 100.0, "communication distance Rc"},
      {"num_subpaths_max", ParamType::Integer, 3LL, "sub-paths per path drawn from [1, mu_max]"},
      {"aod_min_deg", ParamType::Real, -50.0, "lower AoD bound"},
      {"aod_max_deg", ParamType::Real, 50.0, "upper AoD bound"},
      {"delay_tap_min", ParamType::Integer, 0LL, "smallest drawn path delay (taps)"},
      {"delay_tap_max", ParamType::Integer, 40LL, "largest drawn path delay (taps)"},
      {"path_delays", ParamType::IntList, I{}, "fixed path delays (taps); drawn when empty"},
      {"target_range_m", ParamType::Real, 225.0, "sensing range R"},
      {"target_rcs_m2", ParamType::Real, 1.0, "radar cross-section xi"},
      {"target_angle_deg", ParamType::Real, 60.0, "target direction theta"},
      {"target_velocity_mps", ParamType::Real, 0.0, "radial velocity"},
      {"modulation", ParamType::Text, std::string("qam64"), "qpsk | qam16 | qam64"},
      // optimization
      {"gamma_th_db", ParamType::Real, 15.0, "sensing SNR threshold"},
      {"phi_th_db", ParamType::Real, -40.0, "ISR threshold"},
      {"lifting", ParamType::Text, std::string("compressed"), "SDR lifting: compressed | full"},
      {"solver_tol", ParamType::Real, 0.0, "conic solver tolerance; 0 picks the lifting default"},
      {"randomization_samples", ParamType::Integer, 200LL, "Gaussian randomization candidates"},
      // af
      {"af_cpi_lengths", ParamType::IntList, I{5000, 10000, 100000}, "CPI lengths N for the AF cuts"},
      {"af_delay_span", ParamType::Integer, 50LL, "Doppler cut covers d_tau in [-span, span]"},
      {"af_doppler_span_bins", ParamType::Integer, 20LL, "delay cut covers +-span Doppler bins of 1/(N Ts)"},
      {"af_doppler_oversample", ParamType::Integer, 16LL, "Doppler grid points per bin"},
      // beampattern
      {"beampattern_gamma_db", ParamType::RealList, V{5.0, 15.0}, "ISAC SNR thresholds to plot"},
      {"beampattern_aods_deg", ParamType::Text, std::string("-35;15,19;27"),
       "sub-path AoDs; ';' separates paths, ',' sub-paths"},
      {"beampattern_step_deg", ParamType::Real, 0.25, "angle grid step"},
      // doppler-cut-isr
      {"isr_path_delays", ParamType::IntList, I{7, 18, 11}, "path delays (taps)"},
      {"isr_phi_db", ParamType::RealList, V{-5.0, -40.0}, "ISR thresholds to compare"},
      // tradeoff
      {"tradeoff_num_seeds", ParamType::Integer, 50LL, "channel realizations"},
      {"tradeoff_gamma_fixed_db", ParamType::RealList, V{5.0, 10.0, 15.0}, "SNR thresholds of the ISR sweep"},
      {"tradeoff_phi_sweep_db", ParamType::RealList, V{-40, -35, -30, -25, -20, -15, -10, -5, 0},
       "ISR sweep"},
      {"tradeoff_phi_fixed_db", ParamType::RealList, V{0.0, -20.0, -40.0}, "ISR thresholds of the SNR sweep"},
      {"tradeoff_gamma_sweep_db", ParamType::RealList, V{-kInf, 0, 5, 10, 15, 20}, "SNR sweep; -inf = comm only"},
      // papr
      {"papr_paths", ParamType::IntList, I{5, 10, 20}, "DAM path counts"},
      {"papr_subcarriers", ParamType::Integer, 2048LL, "OFDM subcarriers K (also the window length)"},
      {"papr_samples", ParamType::Integer, 100000LL, "PAPR windows per waveform"},
      {"papr_modulation", ParamType::Text, std::string("qpsk"), "symbol alphabet"},
      // compare-ofdm
      {"ofdm_bandwidth_hz", ParamType::Real, 122.88e6, "bandwidth of the DAM/OFDM comparison"},
      {"ofdm_subcarriers", ParamType::Integer, 2048LL, "OFDM subcarriers K"},
      {"ofdm_window", ParamType::Text, std::string("hamming"), "none | hamming"},
      {"ofdm_periodogram", ParamType::Flag, false, "average profiles over all symbols/subcarriers"},
      {"compare_velocities_mps", ParamType::RealList, V{5.0, 50.0}, "target radial velocities"},
      {"compare_range_m", ParamType::Real, 122.0, "target range"},
      {"compare_snr_db", ParamType::Real, kInf, "per-sample echo SNR; inf = noiseless"},
      {"compare_doppler_span_hz", ParamType::Real, 20e3, "DAM Doppler search half-span"},
      {"compare_doppler_oversample", ParamType::Integer, 4LL, "DAM Doppler grid points per bin"},
      // snr-budget
      {"snr_mc_trials", ParamType::Integer, 1000LL, "Monte Carlo matched-filter trials"},
      {"snr_ofdm_subcarriers", ParamType::Integer, 2048LL, "K of the OFDM side of the budget"},
  };
  return schema;
}

inline const ParamSpec& param_spec(std::string_view key) {
  for (const auto& s : config_schema())
    if (s.key == key) return s;
  throw ConfigError("unknown key '" + std::string(key) + "'");
}

class Config {
 public:
  /// The paper-v1 preset.
  Config() {
    for (const auto& s : config_schema()) {
      values_[s.key] = s.default_value;
      origin_[s.key] = "default";
    }
  }

  static Config from_string(const std::string& text, const std::string& source = "<string>") {
    Config c;
    c.merge_yaml(text, source);
    return c;
  }

  static Config from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path + ": cannot open config file");
    std::stringstream ss;
    ss << in.rdbuf();
    return from_string(ss.str(), path);
  }

  /// Applies `key=value`; the value is parsed as YAML (so `[1, 2]` and `-inf` work).
  void set(std::string_view assignment) {
    const auto eq = assignment.find('=');
    const std::string src = "--set " + std::string(assignment);
    if (eq == std::string_view::npos || eq == 0) throw ConfigError(src + ": expected key=value");
    const std::string key(assignment.substr(0, eq));
    const std::string text(assignment.substr(eq + 1));
    if (!values_.contains(key)) throw ConfigError(src + ": unknown key '" + key + "'");
    YAML::Node node;
    try {
      node = text.empty() ? YAML::Node(YAML::NodeType::Sequence) : YAML::Load(text);
    } catch (const YAML::Exception& e) {
      throw ConfigError(src + ": " + e.msg);
    }
    assign(key, node, src);
  }

  double real(const std::string& key) const { return get<double>(key); }
  long long integer(const std::string& key) const { return get<long long>(key); }
  const std::string& text(const std::string& key) const { return get<std::string>(key); }
  bool flag(const std::string& key) const { return get<bool>(key); }
  const std::vector<double>& reals(const std::string& key) const { return get<std::vector<double>>(key); }
  std::vector<int> ints(const std::string& key) const {
    std::vector<int> out;
    for (long long v : get<std::vector<long long>>(key)) out.push_back(static_cast<int>(v));
    return out;
  }

  const std::map<std::string, ParamValue>& values() const { return values_; }
  /// Where the current value of `key` came from ("default", "file:line" or "--set ...").
  const std::string& origin(const std::string& key) const { return origin_.at(key); }

  /// Throws ConfigError tagged with the key's origin when cond is false.
  void check(bool cond, const std::string& key, const std::string& msg) const {
    if (!cond) throw ConfigError(origin(key) + ": " + key + ": " + msg);
  }

  /// Resolved config as YAML, in schema order; loading it back gives the same values.
  std::string to_yaml() const {
    std::ostringstream os;
    for (const auto& s : config_schema()) os << s.key << ": " << format(values_.at(s.key)) << "\n";
    return os.str();
  }

  static std::string format(const ParamValue& v) {
    return std::visit(
        [](const auto& x) -> std::string {
          using T = std::decay_t<decltype(x)>;
          if constexpr (std::is_same_v<T, double>) {
            return detail::format_real(x);
          } else if constexpr (std::is_same_v<T, long long>) {
            return std::to_string(x);
          } else if constexpr (std::is_same_v<T, bool>) {
            return x ? "true" : "false";
          } else if constexpr (std::is_same_v<T, std::string>) {
            return "\"" + x + "\"";
          } else {
            std::string s = "[";
            for (std::size_t i = 0; i < x.size(); ++i) {
              if (i) s += ", ";
              if constexpr (std::is_same_v<typename T::value_type, double>)
                s += detail::format_real(x[i]);
              else
                s += std::to_string(x[i]);
            }
            return s + "]";
          }
        },
        v);
  }

 private:
  template <typename T>
  const T& get(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("unknown key '" + key + "'");
    const T* v = std::get_if<T>(&it->second);
    if (!v) throw ConfigError("key '" + key + "' is a " + to_string(param_spec(key).type));
    return *v;
  }

  void assign(const std::string& key, const YAML::Node& node, const std::string& where) {
    const ParamSpec& spec = param_spec(key);
    try {
      values_[key] = detail::convert(node, spec.type);
    } catch (const ConfigError& e) {
      throw ConfigError(where + ": " + key + ": " + e.what());
    }
    if (key == "preset" && std::get<std::string>(values_[key]) != "paper-v1")
      throw ConfigError(where + ": preset: unknown preset '" + std::get<std::string>(values_[key]) +
                        "' (available: paper-v1)");
    origin_[key] = where;
  }

  void merge_yaml(const std::string& text, const std::string& source) {
    YAML::Node root;
    try {
      root = YAML::Load(text);
    } catch (const YAML::Exception& e) {
      throw ConfigError(source + ":" + std::to_string(e.mark.line + 1) + ": " + e.msg);
    }
    if (root.IsNull()) return;
    if (!root.IsMap()) throw ConfigError(detail::where(source, root) + ": top level must be a key: value mapping");
    std::map<std::string, std::string> seen;
    for (const auto& kv : root) {
      const std::string at = detail::where(source, kv.first);
      if (!kv.first.IsScalar()) throw ConfigError(at + ": keys must be plain strings");
      const std::string key = kv.first.Scalar();
      if (!values_.contains(key)) throw ConfigError(at + ": unknown key '" + key + "'");
      if (const auto it = seen.find(key); it != seen.end())
        throw ConfigError(at + ": duplicate key '" + key + "' (first set at " + it->second + ")");
      seen[key] = at;
      assign(key, kv.second, at);
    }
  }

  std::map<std::string, ParamValue> values_;
  std::map<std::string, std::string> origin_;
};

/// Scenario parameters with range checks reported against the offending key.
inline ScenarioConfig scenario_from(const Config& c, std::uint64_t seed) {
  ScenarioConfig s;
  auto positive = [&](const char* key) {
    const double v = c.real(key);
    c.check(std::isfinite(v) && v > 0.0, key, "must be positive and finite");
    return v;
  };
  s.carrier_freq_hz = positive("carrier_freq_hz");
  s.bandwidth_hz = positive("bandwidth_hz");
  s.coherence_time_s = positive("coherence_time_s");
  s.guard_time_s = positive("guard_time_s");
  c.check(s.guard_time_s < s.coherence_time_s, "guard_time_s", "must be shorter than coherence_time_s");
  c.check(std::isfinite(c.real("tx_power_dbm")), "tx_power_dbm", "must be finite");
  c.check(std::isfinite(c.real("noise_power_dbm")), "noise_power_dbm", "must be finite");
  s.tx_power_w = dbm_to_watt(c.real("tx_power_dbm"));
  s.noise_power_w = dbm_to_watt(c.real("noise_power_dbm"));
  c.check(c.integer("num_tx_antennas") >= 1 && c.integer("num_tx_antennas") <= 4096, "num_tx_antennas",
          "must lie in [1, 4096]");
  c.check(c.integer("num_paths") >= 1 && c.integer("num_paths") <= 64, "num_paths", "must lie in [1, 64]");
  s.num_tx_antennas = static_cast<int>(c.integer("num_tx_antennas"));
  s.num_paths = static_cast<int>(c.integer("num_paths"));
  s.rng_seed = seed;
  c.check(s.cpi_len() > 0, "coherence_time_s", "leaves no symbols after the guard interval");
  return s;
}

inline CommChannelParams channel_params_from(const Config& c, const ScenarioConfig& s) {
  CommChannelParams p;
  p.distance_m = c.real("comm_distance_m");
  c.check(std::isfinite(p.distance_m) && p.distance_m > 0, "comm_distance_m", "must be positive");
  c.check(c.integer("num_subpaths_max") >= 1, "num_subpaths_max", "must be >= 1");
  p.num_subpaths_max = static_cast<int>(c.integer("num_subpaths_max"));
  c.check(c.real("aod_min_deg") <= c.real("aod_max_deg"), "aod_max_deg", "must be >= aod_min_deg");
  p.aod_min_rad = deg_to_rad(c.real("aod_min_deg"));
  p.aod_max_rad = deg_to_rad(c.real("aod_max_deg"));
  p.delay_tap_min = static_cast<int>(c.integer("delay_tap_min"));
  p.delay_tap_max = static_cast<int>(c.integer("delay_tap_max"));
  c.check(p.delay_tap_min >= 0, "delay_tap_min", "must be nonnegative");
  c.check(p.delay_tap_max <= s.guard_len(), "delay_tap_max", "must not exceed the guard length");
  c.check(p.delay_tap_max - p.delay_tap_min + 1 >= s.num_paths, "delay_tap_max",
          "range cannot hold num_paths distinct taps");
  p.fixed_delays = c.ints("path_delays");
  if (!p.fixed_delays.empty()) {
    c.check(static_cast<int>(p.fixed_delays.size()) == s.num_paths, "path_delays", "needs one entry per path");
    for (int d : p.fixed_delays)
      c.check(d >= 0 && d <= s.guard_len(), "path_delays", "delays must lie in [0, guard length]");
  }
  return p;
}

}  // namespace damisac
