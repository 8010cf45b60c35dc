#pragma once

// System configuration: physical layout, radio parameters, solver options.
//
// Everything is stored in linear SI units (watts, hertz, seconds, meters).
// The config file accepts the conventional logarithmic units (dBm, dB) for
// power-like quantities and converts once, here, at the parse boundary.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace aoisim {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

inline double distance(const Vec2& a, const Vec2& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class TdmaOrder { input, weakest_first };

struct SolverOptions {
  std::string fdma_loop_order = "bpv";     // per-iteration pass order:
                                           // b = bandwidth, p = power, v = reflection
  TdmaOrder tdma_order = TdmaOrder::input; // slot ordering of devices
  int sdr_draws = 200;                     // randomization candidates per solve
  int sdr_max_sweeps = 5000;               // projection sweeps per feasibility call
  double sdr_feas_tol = 1e-6;              // relative constraint violation accepted
  bool round_blocklength = false;          // floor channel uses to an integer
};

struct SystemConfig {
  // Radio parameters.
  double tx_power_w = 1e-3;                // 0 dBm
  double bandwidth_hz = 1e6;
  double block_duration_s = 1e-3;
  double payload_bits = 600;
  double noise_psd_w_per_hz = std::pow(10.0, -19.8);  // -168 dBm/Hz

  // Geometry: access point, reflecting surface, device disc.
  Vec2 ap_pos{0.0, 0.0};
  Vec2 irs_pos{120.0, 30.0};
  Vec2 device_center{120.0, 0.0};
  double device_radius_m = 10.0;

  // Path loss: reference gain at 1 m and per-link exponents.
  double pathloss_ref = 1e-3;              // -30 dB
  double alpha_direct = 3.5;
  double alpha_ap_irs = 2.5;
  double alpha_irs_dev = 2.5;

  int num_devices = 5;
  int num_elements = 80;
  bool fading = true;                      // false freezes all fades at 1

  std::uint64_t seed = 1;

  SolverOptions solver;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline double parse_number(const std::string& key, const std::string& value, int line) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("trailing characters");
    return x;
  } catch (const std::exception&) {
    throw ConfigError("line " + std::to_string(line) + ": value for '" + key +
                      "' is not a number: '" + value + "'");
  }
}

inline long long parse_integer(const std::string& key, const std::string& value, int line) {
  const double x = parse_number(key, value, line);
  const long long n = static_cast<long long>(std::llround(x));
  if (std::abs(x - static_cast<double>(n)) > 0.0) {
    throw ConfigError("line " + std::to_string(line) + ": value for '" + key +
                      "' must be an integer: '" + value + "'");
  }
  return n;
}

inline bool parse_flag(const std::string& key, const std::string& value, int line) {
  if (value == "1" || value == "true" || value == "on") return true;
  if (value == "0" || value == "false" || value == "off") return false;
  throw ConfigError("line " + std::to_string(line) + ": value for '" + key +
                    "' must be a boolean (0/1/true/false): '" + value + "'");
}

inline void reject_nonpositive(const std::string& key, double x, int line) {
  if (!(x > 0.0) || !std::isfinite(x)) {
    throw ConfigError("line " + std::to_string(line) + ": '" + key +
                      "' must be positive and finite, got " + std::to_string(x));
  }
}

}  // namespace detail

// Applies one key=value pair. Exposed separately so command-line overrides
// can reuse the same parsing and validation; `line` feeds error messages.
inline void apply_config_entry(SystemConfig& cfg, const std::string& key,
                               const std::string& value, int line) {
  using detail::parse_flag;
  using detail::parse_integer;
  using detail::parse_number;
  using detail::reject_nonpositive;

  if (key == "tx_power_dbm" || key == "P") {
    cfg.tx_power_w = dbm_to_watts(parse_number(key, value, line));
  } else if (key == "tx_power_w") {
    const double x = parse_number(key, value, line);
    reject_nonpositive(key, x, line);
    cfg.tx_power_w = x;
  } else if (key == "bandwidth_hz" || key == "B") {
    const double x = parse_number(key, value, line);
    reject_nonpositive(key, x, line);
    cfg.bandwidth_hz = x;
  } else if (key == "block_duration_s" || key == "T") {
    const double x = parse_number(key, value, line);
    reject_nonpositive(key, x, line);
    cfg.block_duration_s = x;
  } else if (key == "payload_bits" || key == "D") {
    const long long n = parse_integer(key, value, line);
    if (n < 1) {
      throw ConfigError("line " + std::to_string(line) + ": '" + key +
                        "' must be at least 1, got " + std::to_string(n));
    }
    cfg.payload_bits = static_cast<double>(n);
  } else if (key == "noise_psd_dbm_hz") {
    cfg.noise_psd_w_per_hz = dbm_to_watts(parse_number(key, value, line));
  } else if (key == "noise_psd_w_per_hz") {
    const double x = parse_number(key, value, line);
    reject_nonpositive(key, x, line);
    cfg.noise_psd_w_per_hz = x;
  } else if (key == "num_devices" || key == "K") {
    const long long n = parse_integer(key, value, line);
    if (n < 1) {
      throw ConfigError("line " + std::to_string(line) + ": '" + key +
                        "' must be at least 1, got " + std::to_string(n));
    }
    cfg.num_devices = static_cast<int>(n);
  } else if (key == "num_elements" || key == "M") {
    const long long n = parse_integer(key, value, line);
    if (n < 0) {
      throw ConfigError("line " + std::to_string(line) + ": '" + key +
                        "' must be nonnegative, got " + std::to_string(n));
    }
    cfg.num_elements = static_cast<int>(n);
  } else if (key == "ap_x") {
    cfg.ap_pos.x = parse_number(key, value, line);
  } else if (key == "ap_y") {
    cfg.ap_pos.y = parse_number(key, value, line);
  } else if (key == "irs_x") {
    cfg.irs_pos.x = parse_number(key, value, line);
  } else if (key == "irs_y") {
    cfg.irs_pos.y = parse_number(key, value, line);
  } else if (key == "device_center_x") {
    cfg.device_center.x = parse_number(key, value, line);
  } else if (key == "device_center_y") {
    cfg.device_center.y = parse_number(key, value, line);
  } else if (key == "device_radius_m" || key == "R") {
    const double x = parse_number(key, value, line);
    reject_nonpositive(key, x, line);
    cfg.device_radius_m = x;
  } else if (key == "pathloss_ref_db") {
    cfg.pathloss_ref = db_to_linear(parse_number(key, value, line));
  } else if (key == "pathloss_ref") {
    const double x = parse_number(key, value, line);
    reject_nonpositive(key, x, line);
    cfg.pathloss_ref = x;
  } else if (key == "alpha_direct" || key == "alpha_ap_irs" || key == "alpha_irs_dev") {
    const double x = parse_number(key, value, line);
    reject_nonpositive(key, x, line);
    if (key == "alpha_direct") cfg.alpha_direct = x;
    else if (key == "alpha_ap_irs") cfg.alpha_ap_irs = x;
    else cfg.alpha_irs_dev = x;
  } else if (key == "fading") {
    cfg.fading = parse_flag(key, value, line);
  } else if (key == "seed") {
    const long long n = parse_integer(key, value, line);
    if (n < 0) {
      throw ConfigError("line " + std::to_string(line) + ": '" + key +
                        "' must be nonnegative, got " + std::to_string(n));
    }
    cfg.seed = static_cast<std::uint64_t>(n);
  } else if (key == "fdma_loop_order") {
    if (value.size() != 3 || value.find('b') == std::string::npos ||
        value.find('p') == std::string::npos || value.find('v') == std::string::npos) {
      throw ConfigError("line " + std::to_string(line) +
                        ": 'fdma_loop_order' must be a permutation of \"bpv\", got '" +
                        value + "'");
    }
    cfg.solver.fdma_loop_order = value;
  } else if (key == "tdma_order") {
    if (value == "input") cfg.solver.tdma_order = TdmaOrder::input;
    else if (value == "weakest_first") cfg.solver.tdma_order = TdmaOrder::weakest_first;
    else {
      throw ConfigError("line " + std::to_string(line) +
                        ": 'tdma_order' must be 'input' or 'weakest_first', got '" +
                        value + "'");
    }
  } else if (key == "sdr_draws") {
    const long long n = parse_integer(key, value, line);
    if (n < 1) {
      throw ConfigError("line " + std::to_string(line) + ": '" + key +
                        "' must be at least 1, got " + std::to_string(n));
    }
    cfg.solver.sdr_draws = static_cast<int>(n);
  } else if (key == "sdr_max_sweeps") {
    const long long n = parse_integer(key, value, line);
    if (n < 1) {
      throw ConfigError("line " + std::to_string(line) + ": '" + key +
                        "' must be at least 1, got " + std::to_string(n));
    }
    cfg.solver.sdr_max_sweeps = static_cast<int>(n);
  } else if (key == "sdr_feas_tol") {
    const double x = parse_number(key, value, line);
    reject_nonpositive(key, x, line);
    cfg.solver.sdr_feas_tol = x;
  } else if (key == "round_blocklength") {
    cfg.solver.round_blocklength = parse_flag(key, value, line);
  } else {
    throw ConfigError("line " + std::to_string(line) + ": unknown key '" + key + "'");
  }
}

// Parses key=value text. '#' starts a comment; blank lines are skipped;
// later assignments override earlier ones. Unknown keys, malformed lines,
// and out-of-range values raise ConfigError naming the offending line.
inline SystemConfig load_config_text(const std::string& text) {
  SystemConfig cfg;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    const std::string stripped = detail::trim(raw);
    if (stripped.empty()) continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line) +
                        ": expected key=value, got '" + stripped + "'");
    }
    const std::string key = detail::trim(stripped.substr(0, eq));
    const std::string value = detail::trim(stripped.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError("line " + std::to_string(line) + ": empty key");
    }
    apply_config_entry(cfg, key, value, line);
  }
  return cfg;
}

inline SystemConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_config_text(buf.str());
}

}  // namespace aoisim
