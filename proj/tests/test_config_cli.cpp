#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "ctlqr/ctlqr.hpp"

namespace fs = std::filesystem;
using namespace ctlqr;
using Catch::Matchers::ContainsSubstring;

namespace {

// Minimal valid scalar config; tests mutate single entries.
std::map<std::string, std::string> base_entries() {
  return {{"n", "1"},       {"k", "1"},     {"d", "1"},
          {"T", "1.0"},     {"N", "4"},     {"tau", "1.0"},
          {"delta", "0.1"}, {"A", "0.0"},   {"B", "1.0"},
          {"Q", "0.0"},     {"R", "1.0"},   {"sigma", "1.0"},
          {"Qprime", "1.0"}, {"init.mean", "0.0"}, {"init.cov", "1.0"}};
}

std::string to_text(const std::map<std::string, std::string>& entries) {
  std::string out;
  for (const auto& [key, value] : entries) out += key + " = " + value + "\n";
  return out;
}

ParsedConfig parse(const std::string& text) { return parse_config_text(text, "test"); }

std::string config_path(const std::string& file) {
  return (fs::path(CTLQR_CONFIG_DIR) / file).string();
}

// Fresh empty scratch directory under the system temp root.
fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("ctlqr_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int run_cli(const std::string& tail) {
  const std::string cmd = std::string(CTLQR_CLI_PATH) + " " + tail;
  const int status = std::system(cmd.c_str());
  if (status == -1) return -1;
  return WIFEXITED(status) ? WEXITSTATUS(status) : -2;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool contains(const std::string& hay, const std::string& needle) {
  return hay.find(needle) != std::string::npos;
}

int line_count(const std::string& text) {
  int n = 0;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) ++n;
  return n;
}

}  // namespace

TEST_CASE("shipped configs reproduce the built-in benchmarks", "[config]") {
  SECTION("scalar") {
    const ParsedConfig cfg = parse_config_file(config_path("scalar.cfg"));
    const LQRModel ref = make_scalar_benchmark(2000);
    REQUIRE(cfg.model.grid() == ref.grid());
    REQUIRE(model_parameter_distance(cfg.model, ref) == 0.0);
    REQUIRE(cfg.model.tau() == ref.tau());  // 0.31830988618379069 is 1/pi exactly
    REQUIRE(cfg.model.deltaFloor() == 0.5);
    REQUIRE(cfg.model.init().mean == ref.init().mean);
    REQUIRE(cfg.model.init().cov == ref.init().cov);
    REQUIRE(cfg.delta1 == 1e-8);
  }
  SECTION("planar") {
    const ParsedConfig cfg = parse_config_file(config_path("lq2d.cfg"));
    const LQRModel ref = make_lq2d_benchmark(2000);
    REQUIRE(cfg.model.grid() == ref.grid());
    REQUIRE(model_parameter_distance(cfg.model, ref) == 0.0);
    REQUIRE(cfg.model.tau() == 0.5);
    REQUIRE(cfg.model.init().mean == ref.init().mean);
    REQUIRE(cfg.model.init().cov == ref.init().cov);
  }
}

TEST_CASE("per-node entries build time-varying paths", "[config]") {
  auto entries = base_entries();
  entries.erase("A");
  entries["N"] = "2";
  entries["A[0]"] = "0.0";
  entries["A[1]"] = "0.25";
  entries["A[2]"] = "0.5";
  const ParsedConfig cfg = parse(to_text(entries));
  REQUIRE(cfg.model.grid().nodes() == 3);
  REQUIRE(cfg.model.A().value(0)(0, 0) == 0.0);
  REQUIRE(cfg.model.A().value(1)(0, 0) == 0.25);
  REQUIRE(cfg.model.A().value(2)(0, 0) == 0.5);
  REQUIRE(cfg.model.B().value(2)(0, 0) == 1.0);
}

TEST_CASE("comments, blank lines, and commas are accepted", "[config]") {
  const std::string text =
      "# leading comment\n"
      "n = 2\nk = 1\nd = 2\n\n"
      "T = 0.5   # horizon\n"
      "N = 3\ntau = 0.7\ndelta = 0.2\n"
      "A = 1.0, 0.0, 0.0, 1.0\n"
      "B = 0.0 1.0\n"
      "Q = 0, 0, 0, 0\n"
      "R = 2.0\n"
      "sigma = 1 0 0 1\n"
      "Qprime = 1 0 0 2\n"
      "init.mean = 0.1 -0.2\n"
      "init.cov = 1 0 0 1\n";
  const ParsedConfig cfg = parse(text);
  REQUIRE(cfg.model.n() == 2);
  REQUIRE(cfg.model.grid().horizon() == 0.5);
  REQUIRE(cfg.model.A().value(0) == Eigen::MatrixXd::Identity(2, 2));
  REQUIRE(cfg.model.Qprime()(1, 1) == 2.0);
  REQUIRE(cfg.model.init().mean(1) == -0.2);
}

TEST_CASE("scalar entries are checked", "[config]") {
  auto entries = base_entries();
  SECTION("missing key") {
    entries.erase("R");
    REQUIRE_THROWS_MATCHES(parse(to_text(entries)), ConfigError,
                           Catch::Matchers::MessageMatches(ContainsSubstring(
                               "missing required key 'R'")));
  }
  SECTION("nonpositive horizon") {
    entries["T"] = "0.0";
    REQUIRE_THROWS_MATCHES(
        parse(to_text(entries)), ConfigError,
        Catch::Matchers::MessageMatches(ContainsSubstring("T must be positive")));
  }
  SECTION("zero steps") {
    entries["N"] = "0";
    REQUIRE_THROWS_AS(parse(to_text(entries)), ConfigError);
  }
  SECTION("fractional steps") {
    entries["N"] = "2.5";
    REQUIRE_THROWS_MATCHES(
        parse(to_text(entries)), ConfigError,
        Catch::Matchers::MessageMatches(ContainsSubstring("must be an integer")));
  }
  SECTION("nonpositive floors") {
    entries["delta"] = "0.0";
    REQUIRE_THROWS_AS(parse(to_text(entries)), ConfigError);
    entries["delta"] = "0.1";
    entries["delta1"] = "-1e-8";
    REQUIRE_THROWS_AS(parse(to_text(entries)), ConfigError);
  }
  SECTION("zero dimension") {
    entries["n"] = "0";
    REQUIRE_THROWS_MATCHES(parse(to_text(entries)), ConfigError,
                           Catch::Matchers::MessageMatches(
                               ContainsSubstring("n, k, d must be at least 1")));
  }
  SECTION("delta1 override") {
    entries["delta1"] = "1e-3";
    REQUIRE(parse(to_text(entries)).delta1 == 1e-3);
  }
}

TEST_CASE("matrix entries and keys are checked", "[config]") {
  auto entries = base_entries();
  SECTION("wrong entry count") {
    entries["A"] = "1.0 2.0";
    REQUIRE_THROWS_MATCHES(
        parse(to_text(entries)), ConfigError,
        Catch::Matchers::MessageMatches(ContainsSubstring("needs 1 entries")));
  }
  SECTION("unknown key") {
    entries["alpha"] = "3.0";
    REQUIRE_THROWS_MATCHES(
        parse(to_text(entries)), ConfigError,
        Catch::Matchers::MessageMatches(ContainsSubstring("unknown key 'alpha'")));
  }
  SECTION("duplicate key") {
    const std::string text = to_text(entries) + "tau = 2.0\n";
    REQUIRE_THROWS_MATCHES(
        parse(text), ConfigError,
        Catch::Matchers::MessageMatches(ContainsSubstring("duplicate key 'tau'")));
  }
  SECTION("constant and per-node forms conflict") {
    const std::string text = to_text(entries) + "A[0] = 1.0\n";
    REQUIRE_THROWS_MATCHES(parse(text), ConfigError,
                           Catch::Matchers::MessageMatches(ContainsSubstring(
                               "given both constant and per-node")));
  }
  SECTION("per-node key missing a node") {
    entries.erase("A");
    entries["A[0]"] = "0.0";
    entries["A[4]"] = "1.0";
    REQUIRE_THROWS_MATCHES(
        parse(to_text(entries)), ConfigError,
        Catch::Matchers::MessageMatches(ContainsSubstring("missing node 1")));
  }
  SECTION("per-node key with extra nodes") {
    entries.erase("A");
    for (int j = 0; j <= 5; ++j) entries["A[" + std::to_string(j) + "]"] = "0.0";
    REQUIRE_THROWS_MATCHES(
        parse(to_text(entries)), ConfigError,
        Catch::Matchers::MessageMatches(ContainsSubstring("extra node entries")));
  }
  SECTION("unknown per-node key") {
    entries["Z[0]"] = "1.0";
    REQUIRE_THROWS_MATCHES(parse(to_text(entries)), ConfigError,
                           Catch::Matchers::MessageMatches(
                               ContainsSubstring("unknown per-node key 'Z'")));
  }
  SECTION("non-numeric token") {
    entries["Q"] = "abc";
    REQUIRE_THROWS_MATCHES(
        parse(to_text(entries)), ConfigError,
        Catch::Matchers::MessageMatches(ContainsSubstring("is not a number")));
  }
  SECTION("line without an equals sign") {
    const std::string text = to_text(entries) + "just some words\n";
    REQUIRE_THROWS_MATCHES(parse(text), ConfigError,
                           Catch::Matchers::MessageMatches(
                               ContainsSubstring("expected 'key = values'")));
  }
}

TEST_CASE("unopenable config files are reported", "[config]") {
  REQUIRE_THROWS_MATCHES(
      parse_config_file("/nonexistent/dir/model.cfg"), ConfigError,
      Catch::Matchers::MessageMatches(ContainsSubstring("cannot open config file")));
}

TEST_CASE("solve writes the value and policy tables", "[cli]") {
  const fs::path dir = scratch_dir("solve");
  const int rc = run_cli("solve " + config_path("scalar.cfg") + " -o " + dir.string() +
                         " > " + (dir / "out.txt").string());
  REQUIRE(rc == 0);
  for (const char* f : {"value_P.csv", "value_r.csv", "gain_K.csv", "covariance_Sigma.csv"})
    REQUIRE(fs::exists(dir / f));
  const std::string out = slurp(dir / "out.txt");
  REQUIRE(contains(out, "optimal cost 1.19314"));
  REQUIRE(contains(out, "P(0) first entry "));

  // %.17g columns round-trip bit-exactly against an in-process solve.
  const LQRModel m = parse_config_file(config_path("scalar.cfg")).model;
  const ValueSolution sol = solve_optimal_riccati(m);
  const MatrixPath P = read_path_csv_file((dir / "value_P.csv").string(), 1, 1);
  REQUIRE(P.grid() == m.grid());
  for (int j : {0, 1000, 2000}) REQUIRE(P.value(j) == sol.P.value(j));
  REQUIRE(std::abs(P.value(0)(0, 0) - 0.5) < 1e-9);

  const MatrixPath K = read_path_csv_file((dir / "gain_K.csv").string(), 1, 1);
  const GaussianPolicy pol = optimal_policy(m);
  for (int j : {0, 500, 2000}) REQUIRE(K.value(j) == pol.K().value(j));
}

TEST_CASE("solve reruns are byte-identical", "[cli]") {
  const fs::path a = scratch_dir("solve_a");
  const fs::path b = scratch_dir("solve_b");
  const std::string cfg = config_path("scalar.cfg");
  REQUIRE(run_cli("solve " + cfg + " -o " + a.string() + " > /dev/null") == 0);
  REQUIRE(run_cli("solve " + cfg + " -o " + b.string() + " > /dev/null") == 0);
  REQUIRE(slurp(a / "value_P.csv") == slurp(b / "value_P.csv"));
  REQUIRE(slurp(a / "gain_K.csv") == slurp(b / "gain_K.csv"));
}

TEST_CASE("ipo from the optimal gain stops immediately", "[cli]") {
  const fs::path dir = scratch_dir("ipo_opt");
  const int rc = run_cli("ipo " + config_path("scalar.cfg") + " --k0 optimal -o " +
                         dir.string() + " > " + (dir / "out.txt").string());
  REQUIRE(rc == 0);
  const std::string out = slurp(dir / "out.txt");
  REQUIRE(contains(out, "stopped after 0 step(s): tolerance"));
  REQUIRE(line_count(slurp(dir / "trace.csv")) == 2);  // header + the start row
  REQUIRE(fs::exists(dir / "final_K.csv"));
}

TEST_CASE("ipo accepts a gain file as the starting point", "[cli]") {
  const fs::path dir = scratch_dir("ipo_file");
  const std::string cfg = config_path("scalar.cfg");
  REQUIRE(run_cli("solve " + cfg + " -o " + dir.string() + " > /dev/null") == 0);
  const int rc = run_cli("ipo " + cfg + " --k0 file --k0-file " +
                         (dir / "gain_K.csv").string() + " -o " + dir.string() + " > " +
                         (dir / "out.txt").string());
  REQUIRE(rc == 0);
  // The written gain round-trips exactly, so the gap at the start is zero.
  REQUIRE(contains(slurp(dir / "out.txt"), "stopped after 0 step(s): tolerance"));
}

TEST_CASE("ipo rejects bad starting-point arguments", "[cli]") {
  const fs::path dir = scratch_dir("ipo_bad");
  const std::string cfg = config_path("scalar.cfg");
  REQUIRE(run_cli("ipo " + cfg + " --k0 bogus -o " + dir.string() + " 2> /dev/null") == 2);
  REQUIRE(run_cli("ipo " + cfg + " --k0 file -o " + dir.string() + " 2> /dev/null") == 2);
  REQUIRE(run_cli("ipo " + cfg + " --k0 file --k0-file /nonexistent.csv -o " +
                  dir.string() + " 2> /dev/null") == 2);
  REQUIRE(run_cli("ipo " + cfg + " --tol -1 -o " + dir.string() + " 2> /dev/null") == 2);
  REQUIRE(run_cli("ipo " + cfg + " --max-iter 0 -o " + dir.string() + " 2> /dev/null") ==
          2);

  // A syntactically valid gain file on the wrong grid is a validation failure.
  const TimeGrid g(1.0, 50);
  const MatrixPath small = MatrixPath::constant(g, Eigen::MatrixXd::Zero(1, 1));
  write_path_csv_file((dir / "small_K.csv").string(), "K", small);
  REQUIRE(run_cli("ipo " + cfg + " --k0 file --k0-file " + (dir / "small_K.csv").string() +
                  " -o " + dir.string() + " 2> " + (dir / "err.txt").string()) == 3);
  REQUIRE(contains(slurp(dir / "err.txt"), "grid does not match"));
}

TEST_CASE("usage and config errors exit with the usage code", "[cli]") {
  const fs::path dir = scratch_dir("usage");
  REQUIRE(run_cli("2> /dev/null") == 2);
  REQUIRE(run_cli("frobnicate 2> /dev/null") == 2);
  REQUIRE(run_cli("solve 2> /dev/null") == 2);
  REQUIRE(run_cli("solve /nonexistent/model.cfg 2> /dev/null") == 2);
  REQUIRE(run_cli("--help > /dev/null") == 0);
  REQUIRE(run_cli("solve --help > /dev/null") == 0);

  std::ofstream(dir / "broken.cfg") << "n == 1\nnot a config\n";
  REQUIRE(run_cli("solve " + (dir / "broken.cfg").string() + " 2> " +
                  (dir / "err.txt").string()) == 2);
  REQUIRE(contains(slurp(dir / "err.txt"), "error:"));
}

TEST_CASE("inadmissible models exit with the validation code", "[cli]") {
  const fs::path dir = scratch_dir("invalid");
  auto entries = base_entries();
  entries["R"] = "0.05";
  entries["delta"] = "0.5";  // R - delta I is negative definite
  std::ofstream(dir / "bad.cfg") << to_text(entries);
  const int rc = run_cli("solve " + (dir / "bad.cfg").string() + " -o " + dir.string() +
                         " 2> " + (dir / "err.txt").string());
  REQUIRE(rc == 3);
  const std::string err = slurp(dir / "err.txt");
  REQUIRE(contains(err, "violated: R_t - delta*I >= 0"));
  REQUIRE(contains(err, "model violates standing assumptions"));
}

TEST_CASE("numerical blow-ups exit with the numerical code", "[cli]") {
  const fs::path dir = scratch_dir("blowup");
  auto entries = base_entries();
  entries["A"] = "1.0e8";  // admissible but far too stiff for the grid
  entries["Q"] = "1.0";
  std::ofstream(dir / "stiff.cfg") << to_text(entries);
  const int rc = run_cli("solve " + (dir / "stiff.cfg").string() + " -o " + dir.string() +
                         " 2> " + (dir / "err.txt").string());
  REQUIRE(rc == 4);
  REQUIRE(contains(slurp(dir / "err.txt"), "error:"));
}

TEST_CASE("transfer writes the sweep table", "[cli]") {
  const fs::path dir = scratch_dir("transfer");
  const int rc = run_cli("transfer " + config_path("scalar.cfg") +
                         " --rhos 0.02 --replicates 2 --seed 5 -o " + dir.string() +
                         " > " + (dir / "out.txt").string());
  REQUIRE(rc == 0);
  const std::string csv = slurp(dir / "transfer_sweep.csv");
  REQUIRE(line_count(csv) == 3);  // header + one row per replicate
  REQUIRE(csv.rfind("rho,seed,perturbSize,warmIters,coldIters", 0) == 0);
  const std::string out = slurp(dir / "out.txt");
  REQUIRE(contains(out, "rho 0.02: feasible 2/2"));
  REQUIRE(contains(out, "wrote transfer_sweep.csv"));
}

TEST_CASE("transfer rejects nonpositive replicate counts", "[cli]") {
  REQUIRE(run_cli("transfer " + config_path("scalar.cfg") +
                  " --replicates 0 2> /dev/null") == 2);
}

TEST_CASE("diffusion rejects models outside the structural family", "[cli]") {
  const fs::path dir = scratch_dir("diff_reject");
  const int rc = run_cli("diffusion " + config_path("lq2d.cfg") + " -o " + dir.string() +
                         " 2> " + (dir / "err.txt").string());
  REQUIRE(rc == 3);
  REQUIRE(contains(slurp(dir / "err.txt"), "structural condition violated"));
}

TEST_CASE("diffusion sweep runs on the scalar benchmark", "[cli]") {
  const fs::path dir = scratch_dir("diffusion");
  const int rc = run_cli("diffusion " + config_path("scalar.cfg") +
                         " --m-scales 1.0 2.0 --noise-inflation 1.0 --seed 3 -o " +
                         dir.string() + " > " + (dir / "out.txt").string());
  REQUIRE(rc == 0);
  const std::string csv = slurp(dir / "diffusion_sweep.csv");
  REQUIRE(line_count(csv) == 3);  // header + one row per score scale
  REQUIRE(csv.rfind("mNorm,noiseW2,terminalW2,terminalTVBound,gridN,seed", 0) == 0);
  REQUIRE(contains(slurp(dir / "out.txt"), "wrote diffusion_sweep.csv"));
}

TEST_CASE("verify passes on the scalar benchmark", "[cli]") {
  const fs::path dir = scratch_dir("verify");
  const int rc = run_cli("verify " + config_path("scalar.cfg") +
                         " --paths 2000 --seed 1 > " + (dir / "out.txt").string());
  REQUIRE(rc == 0);
  const std::string out = slurp(dir / "out.txt");
  REQUIRE(contains(out, "[ OK ] optimal gain fixed point"));
  REQUIRE(contains(out, "[ OK ] closed-form value agreement"));
  REQUIRE(contains(out, "[ OK ] simulated cost agreement"));
  REQUIRE(contains(out, "generative-sampling structural conditions: satisfied"));
  REQUIRE(contains(out, "all checks passed"));
}

TEST_CASE("verify reports the structural mismatch of the planar benchmark", "[cli]") {
  const fs::path dir = scratch_dir("verify_planar");
  const int rc = run_cli("verify " + config_path("lq2d.cfg") + " --paths 400 --seed 1 > " +
                         (dir / "out.txt").string());
  REQUIRE(rc == 0);
  const std::string out = slurp(dir / "out.txt");
  REQUIRE(contains(out, "[ OK ] optimal gain fixed point"));
  REQUIRE(contains(out, "[ OK ] simulated cost agreement"));
  REQUIRE(contains(out, "structural conditions: not satisfied ("));
  REQUIRE(contains(out, "all checks passed"));
}
