// Command-line front end.
//
// Subcommands:
//   solve      optimal value pair and optimal policy -> CSV paths + summary
//   ipo        run the policy iteration, write the trace and final gain
//   transfer   replicated warm/cold restart experiments across rho values
//   diffusion  reverse-process accuracy sweep (score scale x noise inflation)
//   verify     self-checks of a config against the independent oracles
//
// Exit codes: 0 success, 2 usage or config parse error, 3 validation error,
// 4 numerical failure.

#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "ctlqr/ctlqr.hpp"

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitValidation = 3;
constexpr int kExitNumerical = 4;

std::string join_path(const std::string& dir, const std::string& file) {
  return (std::filesystem::path(dir) / file).string();
}

void ensure_out_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ctlqr::ConfigError("cannot create output directory '" + dir + "'");
}

// Prints all violations and throws if the model is inadmissible.
void require_valid(const ctlqr::LQRModel& model) {
  const auto issues = ctlqr::validate_model(model);
  if (issues.empty()) return;
  std::cerr << "model validation failed (" << issues.size() << " issue(s)):\n";
  std::size_t shown = 0;
  for (const auto& issue : issues) {
    if (shown++ == 12) {
      std::cerr << "  ... " << issues.size() - 12 << " more\n";
      break;
    }
    std::cerr << "  violated: " << issue.condition;
    if (issue.node >= 0) std::cerr << " at node " << issue.node;
    std::cerr << " (evidence " << issue.evidence << ")\n";
  }
  throw ctlqr::ValidationError("model violates standing assumptions");
}

struct CommonArgs {
  std::string configPath;
  std::string outDir = ".";
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("config", args.configPath, "model config file")->required();
  cmd->add_option("-o,--out-dir", args.outDir, "directory for CSV outputs");
}

int cmd_solve(const CommonArgs& args) {
  const ctlqr::ParsedConfig cfg = ctlqr::parse_config_file(args.configPath);
  require_valid(cfg.model);
  ensure_out_dir(args.outDir);

  const ctlqr::ValueSolution sol = ctlqr::solve_optimal_riccati(cfg.model);
  const ctlqr::GaussianPolicy pol = ctlqr::optimal_policy(cfg.model);
  const double optCost = ctlqr::cost(cfg.model, pol);

  ctlqr::write_path_csv_file(join_path(args.outDir, "value_P.csv"), "P", sol.P);
  ctlqr::write_path_csv_file(join_path(args.outDir, "value_r.csv"), "r", sol.r);
  ctlqr::write_path_csv_file(join_path(args.outDir, "gain_K.csv"), "K", pol.K());
  ctlqr::write_path_csv_file(join_path(args.outDir, "covariance_Sigma.csv"), "Sigma",
                             pol.Sigma());

  std::cout << "optimal cost " << ctlqr::csv_num(optCost) << "\n";
  std::cout << "P(0) first entry " << ctlqr::csv_num(sol.P.value(0)(0, 0)) << ", r(0) "
            << ctlqr::csv_num(sol.r.value(0)(0, 0)) << "\n";
  std::cout << "wrote value_P.csv, value_r.csv, gain_K.csv, covariance_Sigma.csv to "
            << args.outDir << "\n";
  return 0;
}

int cmd_ipo(const CommonArgs& args, const std::string& k0Mode, const std::string& k0File,
            double tol, int maxIter) {
  const ctlqr::ParsedConfig cfg = ctlqr::parse_config_file(args.configPath);
  require_valid(cfg.model);
  ensure_out_dir(args.outDir);
  const ctlqr::LQRModel& m = cfg.model;

  ctlqr::MatrixPath K0 =
      ctlqr::MatrixPath::constant(m.grid(), Eigen::MatrixXd::Zero(m.k(), m.n()));
  if (k0Mode == "optimal") {
    K0 = ctlqr::optimal_policy(m).K();
  } else if (k0Mode == "file") {
    if (k0File.empty())
      throw ctlqr::ConfigError("--k0 file requires --k0-file PATH");
    K0 = ctlqr::read_path_csv_file(k0File, m.k(), m.n());
    if (K0.grid() != m.grid())
      throw ctlqr::ValidationError("--k0-file grid does not match the model grid");
  } else if (k0Mode != "zero") {
    throw ctlqr::ConfigError("--k0 must be zero, optimal, or file");
  }

  const ctlqr::IPOTrace trace = ctlqr::run_ipo(m, K0, tol, maxIter);
  ctlqr::write_trace_csv_file(join_path(args.outDir, "trace.csv"), trace);
  ctlqr::write_path_csv_file(join_path(args.outDir, "final_K.csv"), "K",
                             trace.iterates.back());

  for (std::size_t i = 0; i < trace.costs.size(); ++i)
    std::cout << "iter " << i << " cost " << ctlqr::csv_num(trace.costs[i]) << " gap "
              << ctlqr::csv_num(trace.gaps[i]) << " l2dist "
              << ctlqr::csv_num(trace.l2dists[i]) << "\n";
  std::cout << "stopped after " << trace.iterations() << " step(s): "
            << ctlqr::to_string(trace.stopReason) << "\n";
  std::cout << "wrote trace.csv, final_K.csv to " << args.outDir << "\n";
  return 0;
}

int cmd_transfer(const CommonArgs& args, const std::vector<double>& rhos, int replicates,
                 std::uint64_t seed, double tol, int maxIter) {
  const ctlqr::ParsedConfig cfg = ctlqr::parse_config_file(args.configPath);
  require_valid(cfg.model);
  ensure_out_dir(args.outDir);

  const ctlqr::SweepResult sweep =
      ctlqr::epsilon_sweep(cfg.model, rhos, replicates, seed, tol, maxIter);
  ctlqr::write_sweep_csv_file(join_path(args.outDir, "transfer_sweep.csv"), sweep.rows);

  for (const ctlqr::SweepStat& st : sweep.stats) {
    std::cout << "rho " << ctlqr::csv_num(st.rho) << ": feasible " << st.feasibleCount
              << "/" << st.replicates;
    if (st.feasibleCount > 0) {
      std::cout << ", warm mean " << ctlqr::csv_num(st.meanWarmIters) << " max "
                << st.maxWarmIters << ", cold mean " << ctlqr::csv_num(st.meanColdIters)
                << " max " << st.maxColdIters << ", mean perturb size "
                << ctlqr::csv_num(st.meanPerturbSize);
      if (std::isfinite(st.warmSuperlinearFraction))
        std::cout << ", warm superlinear fraction "
                  << ctlqr::csv_num(st.warmSuperlinearFraction);
    } else {
      std::cout << ", statistics absent (no feasible replicate)";
    }
    std::cout << "\n";
  }
  std::cout << "wrote transfer_sweep.csv to " << args.outDir << "\n";
  return 0;
}

int cmd_diffusion(const CommonArgs& args, const std::vector<double>& mScales,
                  const std::vector<double>& noiseInflation, std::uint64_t seed) {
  const ctlqr::ParsedConfig cfg = ctlqr::parse_config_file(args.configPath);
  require_valid(cfg.model);
  ensure_out_dir(args.outDir);
  const ctlqr::LQRModel& m = cfg.model;

  const ctlqr::StructuralConditionsReport rep = ctlqr::check_structural_conditions(m);
  if (!rep.passes())
    throw ctlqr::ValidationError("structural condition violated: " + rep.violation());

  std::vector<Eigen::MatrixXd> Ms;
  for (double s : mScales) {
    if (!(s > 0.0))
      throw ctlqr::ConfigError("--m-scales entries must be positive");
    Ms.push_back(s * m.Qprime());
  }
  const ctlqr::ScoreSpec trueSpec = ctlqr::make_score_spec(m, m.Qprime());
  const ctlqr::GaussianState exactNoise =
      ctlqr::density_params(trueSpec, m.grid().horizon());
  std::vector<ctlqr::GaussianState> starts;
  for (double f : noiseInflation) {
    if (!(f > 0.0))
      throw ctlqr::ConfigError("--noise-inflation entries must be positive");
    starts.emplace_back(exactNoise.mean, f * exactNoise.cov);
  }

  const std::vector<ctlqr::ErrorBoundRecord> recs =
      ctlqr::error_bound_sweep(m, Ms, starts, seed);
  ctlqr::write_diffusion_csv_file(join_path(args.outDir, "diffusion_sweep.csv"), recs);

  for (const auto& r : recs)
    std::cout << "mNorm " << ctlqr::csv_num(r.mNorm) << " noiseW2 "
              << ctlqr::csv_num(r.noiseW2) << " terminalW2 "
              << ctlqr::csv_num(r.terminalW2) << " tvBound "
              << ctlqr::csv_num(r.terminalTVBound) << "\n";
  std::cout << "wrote diffusion_sweep.csv to " << args.outDir << "\n";
  return 0;
}

int cmd_verify(const CommonArgs& args, int paths, std::uint64_t seed) {
  const ctlqr::ParsedConfig cfg = ctlqr::parse_config_file(args.configPath);
  require_valid(cfg.model);
  const ctlqr::LQRModel& m = cfg.model;
  bool ok = true;
  auto report = [&ok](const std::string& name, bool pass, const std::string& detail) {
    std::cout << (pass ? "[ OK ] " : "[FAIL] ") << name << ": " << detail << "\n";
    ok = ok && pass;
  };

  // Fixed point: one iteration step away from the optimal gain must not move.
  const ctlqr::GaussianPolicy pol = ctlqr::optimal_policy(m);
  const ctlqr::MatrixPath stepped = ctlqr::ipo_step(m, pol.K());
  double fpResid = 0.0;
  for (int j = 0; j < m.grid().nodes(); ++j)
    fpResid = std::max(fpResid,
                       ctlqr::spectral_norm(stepped.value(j) - pol.K().value(j)));
  report("optimal gain fixed point", fpResid <= 1e-8,
         "sup-node residual " + ctlqr::csv_num(fpResid));

  // Closed form, when the problem is scalar with constant coefficients.
  if (m.n() == 1 && m.k() == 1) {
    bool constant = true;
    for (const auto* p : {&m.A(), &m.B(), &m.Q(), &m.R()})
      for (int j = 1; j < m.grid().nodes(); ++j)
        if (p->value(j) != p->value(0)) constant = false;
    if (constant) {
      const ctlqr::ValueSolution sol = ctlqr::solve_optimal_riccati(m);
      double maxRel = 0.0;
      for (int j = 0; j < m.grid().nodes(); ++j) {
        const double exact = ctlqr::analytic_scalar_riccati(
            m.A().value(0)(0, 0), m.B().value(0)(0, 0), m.Q().value(0)(0, 0),
            m.R().value(0)(0, 0), m.Qprime()(0, 0), m.grid().horizon(),
            m.grid().node(j));
        maxRel = std::max(maxRel, std::abs(sol.P.value(j)(0, 0) - exact) /
                                      std::max(1.0, std::abs(exact)));
      }
      report("closed-form value agreement", maxRel <= 1e-6,
             "max relative error " + ctlqr::csv_num(maxRel));
    }
  }

  // Monte Carlo estimate of the optimal cost against the value equations.
  const double analytic = ctlqr::cost(m, pol);
  const ctlqr::MCCostEstimate mc = ctlqr::mc_cost(m, pol, paths, seed);
  const double dev = std::abs(mc.estimate - analytic);
  report("simulated cost agreement", dev <= 4.0 * mc.stdError,
         "analytic " + ctlqr::csv_num(analytic) + ", simulated " +
             ctlqr::csv_num(mc.estimate) + " +- " + ctlqr::csv_num(mc.stdError));

  // Informational: does the config admit the generative-sampling layer?
  const ctlqr::StructuralConditionsReport rep = ctlqr::check_structural_conditions(m);
  std::cout << "[info] generative-sampling structural conditions: "
            << (rep.passes() ? "satisfied" : "not satisfied (" + rep.violation() + ")")
            << "\n";

  if (!ok) throw ctlqr::NumericalError("verification checks failed");
  std::cout << "all checks passed\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"entropy-regularized LQR policy learning toolkit"};
  app.require_subcommand(1);

  CommonArgs solveArgs;
  CLI::App* solve = app.add_subcommand("solve", "solve the optimal control problem");
  add_common(solve, solveArgs);

  CommonArgs ipoArgs;
  std::string k0Mode = "zero";
  std::string k0File;
  double ipoTol = 1e-10;
  int ipoMaxIter = 100;
  CLI::App* ipo = app.add_subcommand("ipo", "run the policy iteration");
  add_common(ipo, ipoArgs);
  ipo->add_option("--k0", k0Mode, "initial gain: zero, optimal, or file");
  ipo->add_option("--k0-file", k0File, "gain path CSV for --k0 file");
  ipo->add_option("--tol", ipoTol, "stopping gap")->check(CLI::PositiveNumber);
  ipo->add_option("--max-iter", ipoMaxIter, "iteration cap")->check(CLI::PositiveNumber);

  CommonArgs transferArgs;
  std::vector<double> rhos{0.01, 0.02, 0.05};
  int replicates = 20;
  std::uint64_t transferSeed = 1;
  double transferTol = 1e-8;
  int transferMaxIter = 60;
  CLI::App* transfer = app.add_subcommand("transfer", "warm/cold restart experiments");
  add_common(transfer, transferArgs);
  transfer->add_option("--rhos", rhos, "perturbation sizes")->expected(-1);
  transfer->add_option("--replicates", replicates, "replicates per rho")
      ->check(CLI::PositiveNumber);
  transfer->add_option("--seed", transferSeed, "base seed");
  transfer->add_option("--tol", transferTol, "stopping gap")->check(CLI::PositiveNumber);
  transfer->add_option("--max-iter", transferMaxIter, "iteration cap")
      ->check(CLI::PositiveNumber);

  CommonArgs diffusionArgs;
  std::vector<double> mScales{1.0, 1.1, 1.5, 2.0};
  std::vector<double> noiseInflation{1.0};
  std::uint64_t diffusionSeed = 1;
  CLI::App* diffusion = app.add_subcommand("diffusion", "reverse-process accuracy sweep");
  add_common(diffusion, diffusionArgs);
  diffusion->add_option("--m-scales", mScales, "terminal weight scale factors")
      ->expected(-1);
  diffusion->add_option("--noise-inflation", noiseInflation,
                        "start covariance inflation factors")
      ->expected(-1);
  diffusion->add_option("--seed", diffusionSeed, "seed recorded in the CSV");

  CommonArgs verifyArgs;
  int verifyPaths = 10000;
  std::uint64_t verifySeed = 1;
  CLI::App* verify = app.add_subcommand("verify", "oracle self-checks");
  add_common(verify, verifyArgs);
  verify->add_option("--paths", verifyPaths, "Monte Carlo paths")
      ->check(CLI::Range(100, 100000000));
  verify->add_option("--seed", verifySeed, "Monte Carlo seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (solve->parsed()) return cmd_solve(solveArgs);
    if (ipo->parsed()) return cmd_ipo(ipoArgs, k0Mode, k0File, ipoTol, ipoMaxIter);
    if (transfer->parsed())
      return cmd_transfer(transferArgs, rhos, replicates, transferSeed, transferTol,
                          transferMaxIter);
    if (diffusion->parsed())
      return cmd_diffusion(diffusionArgs, mScales, noiseInflation, diffusionSeed);
    if (verify->parsed()) return cmd_verify(verifyArgs, verifyPaths, verifySeed);
  } catch (const ctlqr::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ctlqr::ShapeError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ctlqr::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const ctlqr::NumericalError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << "\n";
    return 1;
  }
  return kExitUsage;
}
