#include "bdris/harness.hpp"
#include "bdris/siso.hpp"

#include "CLI11.hpp"

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>

namespace fs = std::filesystem;
using namespace bdris;

namespace {

void print_summary(const harness::RunResult& r) {
  std::printf("%-22s %12s %-12s %14s %12s %6s\n", "arch", "sweep", "metric", "mean", "std", "n");
  for (const auto& s : r.summary) {
    std::printf("%-22s %12g %-12s %14.6g %12.4g %6d\n", s.arch.c_str(), s.sweep, s.metric.c_str(),
                s.mean, s.std, s.count);
  }
  if (r.failed_trials > 0) {
    std::printf("failed solves: %d of %d\n", r.failed_trials, r.total_trials);
  }
}

int cmd_run(const std::string& path, std::optional<std::uint64_t> seed, std::optional<int> threads,
            std::optional<std::string> out_dir, bool timing) {
  harness::ExperimentConfig cfg;
  try {
    cfg = harness::ExperimentConfig::load(path);
  } catch (const Error& e) {
    std::cerr << e.what() << '\n';
    return 2;
  }
  if (seed) cfg.master_seed = *seed;
  if (out_dir) cfg.output = *out_dir;
  if (timing) cfg.timing = true;

  const int workers = harness::resolve_threads(threads);
  const auto result = harness::run_experiment(cfg, workers);

  fs::create_directories(cfg.output);
  const fs::path rows_path = fs::path(cfg.output) / (cfg.experiment + ".csv");
  const fs::path summary_path = fs::path(cfg.output) / (cfg.experiment + "_summary.csv");
  harness::emit_csv(result.rows, rows_path.string());
  harness::emit_summary_csv(result.summary, summary_path.string());

  print_summary(result);
  std::printf("wrote %s and %s\n", rows_path.c_str(), summary_path.c_str());
  if (result.failed()) {
    std::cerr << "run failed: more than 10% of trials errored\n";
    return 1;
  }
  return 0;
}

int cmd_validate(int reps, std::uint64_t seed) {
  harness::ValidateOptions vo;
  vo.repetitions = reps;
  vo.seed = seed;
  const auto report = harness::validate_suite(vo);
  std::cout << report.to_text();
  return report.all_passed() ? 0 : 1;
}

int cmd_crossover(double pt, double pa, double pt_passive, double noise_dbm, double pathloss_db) {
  const double noise = dbm_to_watts(noise_dbm);
  const double zeta = db_to_linear(pathloss_db);
  const siso::ScalingParams params{pt, pa, pt_passive, noise, noise, zeta, zeta};
  const auto c = siso::crossover_elements(params);
  std::printf("N_bar   = %.6e\n", c.n_bar);
  std::printf("N_tilde = %.6e\n", c.n_tilde);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Active BD-RIS link-level lab"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "run an experiment config");
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<std::string> out_dir;
  bool timing = false;
  run->add_option("config", config_path, "JSON config")->required();
  run->add_option("--seed", seed, "master seed override");
  run->add_option("--threads", threads, "worker threads (default: BDRIS_THREADS or all cores)");
  run->add_option("--out", out_dir, "output directory");
  run->add_flag("--timing", timing, "record wall time per solve in the ms column");

  auto* validate = app.add_subcommand("validate", "run the invariant suite");
  int reps = 20;
  std::uint64_t vseed = 7;
  validate->add_option("--reps", reps, "instances per check");
  validate->add_option("--seed", vseed, "seed");

  auto* cross = app.add_subcommand("crossover", "element counts where passive RIS catches up");
  double pt = 1.9, pa = 0.1, ptp = 2.0, noise_dbm = -90.0, pl_db = -70.0;
  cross->add_option("--pt", pt, "active transmit power [W]")->required();
  cross->add_option("--pa", pa, "RIS radiated power [W]")->required();
  cross->add_option("--pt-passive", ptp, "passive transmit power [W]")->required();
  cross->add_option("--noise-dbm", noise_dbm, "sigma_R^2 = sigma_I^2 [dBm]")->required();
  cross->add_option("--pathloss-db", pl_db, "zeta_RI^2 = zeta_IT^2 [dB], e.g. -70")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*run) return cmd_run(config_path, seed, threads, out_dir, timing);
    if (*validate) return cmd_validate(reps, vseed);
    if (*cross) return cmd_crossover(pt, pa, ptp, noise_dbm, pl_db);
  } catch (const Error& e) {
    std::cerr << e.what() << '\n';
    return e.code() == ErrorCode::config_error ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << e.what() << '\n';
    return 1;
  }
  return 0;
}
