#pragma once

// Monte Carlo harness: runs the four scheme variants over common channel
// drops, sweeps one system parameter, and writes CSV outputs.
//
// Determinism contract: every random stage seeds itself from
// (root seed, stream tag, sweep value index, drop index), so results do not
// depend on thread count or completion order. All schemes within a drop
// share the same placement and fading draws, and each scheme restarts the
// solver stream from the same seed: the full solver then opens with the
// exact draws the equal baseline consumes, which keeps it at or below the
// baseline on every single drop.

#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "aoisim/channel.hpp"
#include "aoisim/config.hpp"
#include "aoisim/fdma.hpp"
#include "aoisim/rng.hpp"
#include "aoisim/tdma.hpp"

namespace aoisim {

enum class Scheme { fdma, fdma_equal, tdma, tdma_equal };

constexpr Scheme kAllSchemes[] = {Scheme::fdma, Scheme::fdma_equal, Scheme::tdma,
                                  Scheme::tdma_equal};

inline const char* scheme_name(Scheme s) {
  switch (s) {
    case Scheme::fdma: return "fdma";
    case Scheme::fdma_equal: return "fdma_equal";
    case Scheme::tdma: return "tdma";
    case Scheme::tdma_equal: return "tdma_equal";
  }
  return "?";
}

inline std::optional<Scheme> parse_scheme(const std::string& name) {
  for (Scheme s : kAllSchemes) {
    if (name == scheme_name(s)) return s;
  }
  return std::nullopt;
}

struct SchemeOutcome {
  Scheme scheme = Scheme::fdma;
  AoiReport report;
  int iterations = 0;
  std::vector<std::string> flags;
  std::vector<BisectionTraceRow> sdr_trace;  // empty for slotted schemes
};

// Solves every requested scheme on one shared channel realization.
inline std::vector<SchemeOutcome> run_drop(const SystemConfig& cfg,
                                           std::uint64_t root_seed,
                                           std::uint64_t value_index,
                                           std::uint64_t drop_index,
                                           const std::vector<Scheme>& schemes) {
  Rng placement_rng(derive_seed(root_seed, Stream::placement, value_index, drop_index));
  Rng fading_rng(derive_seed(root_seed, Stream::fading, value_index, drop_index));
  const std::vector<Vec2> positions = place_devices(cfg, placement_rng);
  const ChannelRealization ch = sample_channels(cfg, positions, fading_rng);

  std::vector<SchemeOutcome> out;
  out.reserve(schemes.size());
  for (Scheme s : schemes) {
    Rng solver_rng(derive_seed(root_seed, Stream::solver, value_index, drop_index));
    SchemeOutcome oc;
    oc.scheme = s;
    switch (s) {
      case Scheme::fdma: {
        FdmaSolution sol = solve_fdma(ch, cfg, solver_rng);
        oc.report = std::move(sol.report);
        oc.iterations = sol.iterations;
        oc.flags = std::move(sol.flags);
        oc.sdr_trace = std::move(sol.sdr_trace);
        break;
      }
      case Scheme::fdma_equal: {
        FdmaSolution sol = solve_fdma_equal_baseline(ch, cfg, solver_rng);
        oc.report = std::move(sol.report);
        oc.iterations = sol.iterations;
        oc.flags = std::move(sol.flags);
        oc.sdr_trace = std::move(sol.sdr_trace);
        break;
      }
      case Scheme::tdma: {
        TdmaSolution sol = solve_tdma(ch, cfg);
        oc.report = std::move(sol.report);
        oc.iterations = sol.iterations;
        oc.flags = std::move(sol.flags);
        break;
      }
      case Scheme::tdma_equal: {
        TdmaSolution sol = solve_tdma_equal_baseline(ch, cfg);
        oc.report = std::move(sol.report);
        oc.iterations = sol.iterations;
        oc.flags = std::move(sol.flags);
        break;
      }
    }
    out.push_back(std::move(oc));
  }
  return out;
}

struct SweepSpec {
  std::string parameter;            // "M", "bandwidth", or "payload_bits"
  std::vector<double> values;       // strictly increasing
  int drops = 1;
  std::vector<Scheme> schemes{kAllSchemes, kAllSchemes + 4};
};

inline void validate_sweep_spec(const SweepSpec& spec) {
  if (spec.parameter != "M" && spec.parameter != "bandwidth" &&
      spec.parameter != "payload_bits") {
    throw std::invalid_argument("sweep parameter must be M, bandwidth, or payload_bits; got '" +
                                spec.parameter + "'");
  }
  if (spec.values.empty()) throw std::invalid_argument("sweep needs at least one value");
  for (std::size_t i = 0; i + 1 < spec.values.size(); ++i) {
    if (!(spec.values[i] < spec.values[i + 1])) {
      throw std::invalid_argument("sweep values must be strictly increasing");
    }
  }
  if (spec.drops < 1) throw std::invalid_argument("sweep needs at least one drop");
  if (spec.schemes.empty()) throw std::invalid_argument("sweep needs at least one scheme");
}

// Applies one sweep value to a copy of the base configuration, reusing the
// config validators so out-of-range values fail with the same messages.
inline SystemConfig config_for_value(const SystemConfig& base,
                                     const std::string& parameter, double value) {
  SystemConfig cfg = base;
  std::string text = std::to_string(value);
  if (parameter == "M" || parameter == "payload_bits") {
    if (value != std::floor(value)) {
      throw std::invalid_argument("sweep parameter '" + parameter +
                                  "' needs integer values, got " + text);
    }
    text = std::to_string(static_cast<long long>(value));
  }
  const std::string key = parameter == "bandwidth" ? "bandwidth_hz" : parameter;
  apply_config_entry(cfg, key, text, 0);
  return cfg;
}

struct DropRecord {
  double sweep_value = 0.0;
  Scheme scheme = Scheme::fdma;
  int drop_index = 0;
  double max_aoi_s = 0.0;
  int iterations = 0;
  std::string flags;  // semicolon-joined
};

struct AggregateRecord {
  double sweep_value = 0.0;
  Scheme scheme = Scheme::fdma;
  double mean_max_aoi_s = 0.0;
  double std_max_aoi_s = 0.0;
  int drops = 0;
};

struct SweepResult {
  SweepSpec spec;
  std::vector<DropRecord> drops;          // value-major, then drop, then scheme
  std::vector<AggregateRecord> aggregates;
};

inline std::string join_flags(const std::vector<std::string>& flags) {
  std::string out;
  for (const auto& f : flags) {
    if (!out.empty()) out += ';';
    out += f;
  }
  return out;
}

// Runs the whole sweep. Work is split over threads at (value, drop)
// granularity; every task writes into its own preallocated slot, so the
// output is identical for any thread count.
inline SweepResult run_sweep(const SweepSpec& spec, const SystemConfig& base,
                             int threads = 0) {
  validate_sweep_spec(spec);
  const int num_values = static_cast<int>(spec.values.size());
  const int per_task = static_cast<int>(spec.schemes.size());
  const int tasks = num_values * spec.drops;

  // Fail fast on a bad sweep value before spawning workers.
  std::vector<SystemConfig> cfgs;
  cfgs.reserve(num_values);
  for (double v : spec.values) cfgs.push_back(config_for_value(base, spec.parameter, v));

  SweepResult result;
  result.spec = spec;
  result.drops.resize(static_cast<std::size_t>(tasks) * per_task);

  if (threads <= 0) {
    threads = static_cast<int>(std::thread::hardware_concurrency());
    if (threads < 1) threads = 1;
  }
  threads = std::min(threads, tasks);

  std::atomic<int> next{0};
  std::atomic<bool> failed{false};
  std::string error_message;
  std::mutex error_mutex;

  const auto worker = [&]() {
    for (;;) {
      const int task = next.fetch_add(1);
      if (task >= tasks || failed.load()) return;
      const int vi = task / spec.drops;
      const int di = task % spec.drops;
      try {
        const auto outcomes =
            run_drop(cfgs[vi], base.seed, static_cast<std::uint64_t>(vi),
                     static_cast<std::uint64_t>(di), spec.schemes);
        for (int s = 0; s < per_task; ++s) {
          DropRecord& rec = result.drops[static_cast<std::size_t>(task) * per_task + s];
          rec.sweep_value = spec.values[vi];
          rec.scheme = outcomes[s].scheme;
          rec.drop_index = di;
          rec.max_aoi_s = outcomes[s].report.max_aoi_s;
          rec.iterations = outcomes[s].iterations;
          rec.flags = join_flags(outcomes[s].flags);
        }
      } catch (const std::exception& e) {
        failed.store(true);
        std::lock_guard<std::mutex> lock(error_mutex);
        if (error_message.empty()) error_message = e.what();
      }
    }
  };

  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failed.load()) {
    throw std::runtime_error("sweep failed: " + error_message);
  }

  for (int vi = 0; vi < num_values; ++vi) {
    for (int s = 0; s < per_task; ++s) {
      AggregateRecord agg;
      agg.sweep_value = spec.values[vi];
      agg.scheme = spec.schemes[s];
      agg.drops = spec.drops;
      double sum = 0.0;
      for (int di = 0; di < spec.drops; ++di) {
        sum += result.drops[(static_cast<std::size_t>(vi) * spec.drops + di) * per_task + s]
                   .max_aoi_s;
      }
      agg.mean_max_aoi_s = sum / spec.drops;
      double sq = 0.0;
      for (int di = 0; di < spec.drops; ++di) {
        const double d =
            result.drops[(static_cast<std::size_t>(vi) * spec.drops + di) * per_task + s]
                .max_aoi_s -
            agg.mean_max_aoi_s;
        sq += d * d;
      }
      agg.std_max_aoi_s = spec.drops > 1 ? std::sqrt(sq / (spec.drops - 1)) : 0.0;
      result.aggregates.push_back(agg);
    }
  }
  return result;
}

namespace detail {

// Shortest round-trip decimal form, so written CSVs reproduce the doubles.
inline std::string format_double(double x) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

}  // namespace detail

// Writes per_drop.csv, aggregate.csv, and plot_data.csv under out_dir.
// plot_data.csv has one row per sweep value and one mean column per scheme,
// ready to plot as a single panel.
inline void write_results(const SweepResult& result, const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);

  {
    std::ofstream f(fs::path(out_dir) / "per_drop.csv");
    if (!f) throw std::runtime_error("cannot write per_drop.csv under " + out_dir);
    f << "sweep_value,scheme,drop_index,max_aoi_s,iterations,flags\n";
    for (const auto& r : result.drops) {
      f << detail::format_double(r.sweep_value) << ',' << scheme_name(r.scheme) << ','
        << r.drop_index << ',' << detail::format_double(r.max_aoi_s) << ','
        << r.iterations << ',' << r.flags << '\n';
    }
  }
  {
    std::ofstream f(fs::path(out_dir) / "aggregate.csv");
    if (!f) throw std::runtime_error("cannot write aggregate.csv under " + out_dir);
    f << "sweep_value,scheme,mean_max_aoi_s,std_max_aoi_s,drops\n";
    for (const auto& a : result.aggregates) {
      f << detail::format_double(a.sweep_value) << ',' << scheme_name(a.scheme) << ','
        << detail::format_double(a.mean_max_aoi_s) << ','
        << detail::format_double(a.std_max_aoi_s) << ',' << a.drops << '\n';
    }
  }
  {
    std::ofstream f(fs::path(out_dir) / "plot_data.csv");
    if (!f) throw std::runtime_error("cannot write plot_data.csv under " + out_dir);
    f << "sweep_value";
    for (Scheme s : result.spec.schemes) f << ',' << scheme_name(s);
    f << '\n';
    for (std::size_t vi = 0; vi < result.spec.values.size(); ++vi) {
      f << detail::format_double(result.spec.values[vi]);
      for (std::size_t s = 0; s < result.spec.schemes.size(); ++s) {
        f << ',' << detail::format_double(
                        result.aggregates[vi * result.spec.schemes.size() + s]
                            .mean_max_aoi_s);
      }
      f << '\n';
    }
  }
}

}  // namespace aoisim
