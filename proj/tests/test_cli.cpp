#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "aoisim/cli.hpp"

using namespace aoisim;
namespace fs = std::filesystem;

namespace {

// Redirects a stream into a buffer for the lifetime of the object.
class Capture {
 public:
  explicit Capture(std::ostream& os) : os_(os), old_(os.rdbuf(ss_.rdbuf())) {}
  ~Capture() { os_.rdbuf(old_); }
  std::string str() const { return ss_.str(); }

 private:
  std::ostream& os_;
  std::ostringstream ss_;
  std::streambuf* old_;
};

int cli(const std::vector<std::string>& args, std::string* out = nullptr,
        std::string* err = nullptr) {
  std::vector<const char*> argv{"aoisim"};
  for (const auto& a : args) argv.push_back(a.c_str());
  Capture cout_cap(std::cout);
  Capture cerr_cap(std::cerr);
  const int code = run_cli(static_cast<int>(argv.size()), argv.data());
  if (out) *out = cout_cap.str();
  if (err) *err = cerr_cap.str();
  return code;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

struct EnvGuard {
  EnvGuard() { unsetenv("AOISIM_OUT"); }
};

}  // namespace

TEST_CASE("run prints one report per drop", "[cli]") {
  EnvGuard env;
  std::string out;
  const int code = cli({"--set", "K=2", "--set", "M=0", "run", "--drops", "2",
                        "--schemes", "tdma", "tdma_equal"},
                       &out);
  REQUIRE(code == 0);
  REQUIRE(out.find("drop 0:") != std::string::npos);
  REQUIRE(out.find("drop 1:") != std::string::npos);
  REQUIRE(out.find("tdma_equal") != std::string::npos);
  REQUIRE(out.find("max_aoi_ms") != std::string::npos);
}

TEST_CASE("identical seeds give identical reports", "[cli]") {
  EnvGuard env;
  std::string first, second;
  const std::vector<std::string> args{"--set", "K=2", "--set", "M=0",
                                      "--seed", "5",  "run"};
  REQUIRE(cli(args, &first) == 0);
  REQUIRE(cli(args, &second) == 0);
  REQUIRE(first == second);
}

TEST_CASE("usage errors exit with 2", "[cli]") {
  EnvGuard env;
  std::string err;
  REQUIRE(cli({"frobnicate"}, nullptr, &err) == 2);
  REQUIRE(cli({"run", "--set", "nonsense=5"}, nullptr, &err) == 2);
  REQUIRE(err.find("config error") != std::string::npos);
  REQUIRE(cli({"run", "--set", "K2"}, nullptr, &err) == 2);
  REQUIRE(cli({"run", "--schemes", "csma"}, nullptr, &err) == 2);
  REQUIRE(cli({"sweep", "--values", "1", "2"}, nullptr, &err) == 2);  // no --param
  REQUIRE(cli({"--config", "/no/such/file.cfg", "run"}, nullptr, &err) == 2);
  REQUIRE(cli({"--set", "K=2", "--set", "M=0", "sweep", "--param", "M",
               "--values", "4", "2"},
              nullptr, &err) == 2);  // not increasing
}

TEST_CASE("config files feed the run", "[cli]") {
  EnvGuard env;
  const fs::path dir = fs::temp_directory_path() / "aoisim_unit_cli_cfg";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const fs::path cfg = dir / "small.cfg";
  {
    std::ofstream f(cfg);
    f << "# two devices, no surface\n";
    f << "K = 2\n";
    f << "M = 0\n";
    f << "payload_bits = 300\n";
  }
  std::string out;
  REQUIRE(cli({"--config", cfg.string(), "run", "--schemes", "tdma_equal"}, &out) == 0);
  REQUIRE(out.find("tdma_equal") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("sweep writes the three CSVs and reproduces them", "[cli]") {
  EnvGuard env;
  const fs::path dir = fs::temp_directory_path() / "aoisim_unit_cli_sweep";
  fs::remove_all(dir);
  const std::vector<std::string> args{
      "--set",  "K=2",          "--set",    "M=0",  "--out", dir.string(),
      "sweep",  "--param",      "payload_bits", "--values", "200", "400",
      "--drops", "2",           "--schemes", "tdma", "tdma_equal"};
  std::string out;
  REQUIRE(cli(args, &out) == 0);
  REQUIRE(fs::exists(dir / "per_drop.csv"));
  REQUIRE(fs::exists(dir / "aggregate.csv"));
  REQUIRE(fs::exists(dir / "plot_data.csv"));
  const std::string plot = slurp(dir / "plot_data.csv");
  REQUIRE(plot.rfind("sweep_value,tdma,tdma_equal\n", 0) == 0);

  const std::string per_drop = slurp(dir / "per_drop.csv");
  const fs::path dir2 = fs::temp_directory_path() / "aoisim_unit_cli_sweep_2";
  fs::remove_all(dir2);
  std::vector<std::string> args2 = args;
  args2[5] = dir2.string();
  REQUIRE(cli(args2, &out) == 0);
  REQUIRE(slurp(dir2 / "per_drop.csv") == per_drop);
  fs::remove_all(dir);
  fs::remove_all(dir2);
}

TEST_CASE("baseline runs only the equal splits", "[cli]") {
  EnvGuard env;
  std::string out;
  REQUIRE(cli({"--set", "K=2", "--set", "M=2", "baseline"}, &out) == 0);
  REQUIRE(out.find("fdma_equal") != std::string::npos);
  REQUIRE(out.find("tdma_equal") != std::string::npos);
  REQUIRE(out.find(" fdma ") == std::string::npos);
  REQUIRE(out.find(" tdma ") == std::string::npos);
}

TEST_CASE("reflection trace lands on disk when asked", "[cli]") {
  EnvGuard env;
  const fs::path dir = fs::temp_directory_path() / "aoisim_unit_cli_trace";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const fs::path trace = dir / "trace.csv";
  std::string out;
  REQUIRE(cli({"--set", "K=2", "--set", "M=2", "run", "--schemes", "fdma",
               "--trace", trace.string()},
              &out) == 0);
  REQUIRE(fs::exists(trace));
  REQUIRE(slurp(trace).rfind("score,feasible,residual,sweeps,screened\n", 0) == 0);
  fs::remove_all(dir);
}

TEST_CASE("quick validation suite passes", "[cli]") {
  EnvGuard env;
  std::string out;
  const int code = cli({"validate"}, &out);
  REQUIRE(code == 0);
  REQUIRE(out.find("PASS") != std::string::npos);
  REQUIRE(out.find("FAIL") == std::string::npos);
}
