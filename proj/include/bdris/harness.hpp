#pragma once

#include "bdris/channel.hpp"
#include "bdris/common.hpp"
#include "bdris/netcore.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace bdris::harness {

/// Parsed architecture label:
///   direct | {active,passive}-drs | {active,passive}-full-{nr,r}
///   | {active,passive}-group<N>-{nr,r}
struct ArchSpec {
  enum class Kind { direct, active, passive };
  Kind kind = Kind::direct;
  int group_size = 1;  // 0 means fully-connected (resolved against N_I)
  bool reciprocal = true;
  std::string label;

  static ArchSpec parse(const std::string& label);
  netcore::Architecture resolve(int elements) const;
};

struct ExperimentConfig {
  std::string experiment;  // siso-scaling | siso-asymptotic | mimo-power-sweep | mimo-element-sweep | validate
  channel::Geometry geometry = channel::Geometry::reference();
  int n_t = 2;
  int n_r = 2;
  int streams = 2;
  int n_i = 32;            // fixed N_I for power sweeps
  double kappa = 1.0;
  std::vector<std::string> archs;
  double p_total_dbm = 20.0;        // fixed P^tot for element sweeps
  double tx_fraction = 0.99;        // active: P_T = tx_fraction P^tot
  double ris_fraction = 0.01;       // active: P_A = ris_fraction P^tot
  double noise_dbm = -90.0;         // σ_R^2 = σ_I^2
  // SISO experiments use explicit budgets and i.i.d. link gains.
  double p_t = 1.9;
  double p_a = 0.1;
  double p_t_passive = 2.0;
  double zeta_ri_db = -70.0;
  double zeta_it_db = -70.0;
  std::vector<double> sweep;
  int trials = 1;
  std::uint64_t master_seed = 1;
  std::string output = "results";
  int max_iters = 200;
  double tol = 1e-5;
  bool timing = false;  // fill the ms column; off keeps output byte-stable

  // Throws Error(config_error) with the offending key.
  static ExperimentConfig from_json_text(const std::string& text);
  static ExperimentConfig load(const std::string& path);
  void validate() const;
};

struct ResultRow {
  std::string experiment;
  std::string arch;
  double sweep = 0.0;
  std::int64_t trial = 0;  // -1 for analytic rows
  std::string metric;      // "error:<code>" for a failed solve
  double value = 0.0;
  std::uint64_t seed = 0;
  double ms = 0.0;

  bool operator==(const ResultRow&) const = default;
};

struct SummaryRow {
  std::string arch;
  double sweep = 0.0;
  std::string metric;
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation, 0 for a single value
  int count = 0;
};

struct RunResult {
  std::vector<ResultRow> rows;
  std::vector<SummaryRow> summary;
  int failed_trials = 0;
  int total_trials = 0;
  bool failed() const { return total_trials > 0 && failed_trials * 10 > total_trials; }
};

/// Worker count: explicit > BDRIS_THREADS > hardware concurrency.
int resolve_threads(std::optional<int> requested);

RunResult run_experiment(const ExperimentConfig& config, int threads = 1);

std::vector<SummaryRow> summarize(const std::vector<ResultRow>& rows);

std::string format_double(double v);

void emit_csv(const std::vector<ResultRow>& rows, const std::string& path);
std::vector<ResultRow> parse_csv(const std::string& path);
void emit_summary_csv(const std::vector<SummaryRow>& rows, const std::string& path);

struct Check {
  std::string name;
  double residual = 0.0;
  double tolerance = 0.0;
  bool passed = false;
  std::string detail;
};

struct ValidationReport {
  std::vector<Check> checks;
  bool all_passed() const;
  std::string to_text() const;
};

struct ValidateOptions {
  int repetitions = 20;
  std::uint64_t seed = 7;
  bool perturb_symmetry = false;  // negative control for the reciprocal feasibility check
};

ValidationReport validate_suite(const ValidateOptions& options = {});

}  // namespace bdris::harness
