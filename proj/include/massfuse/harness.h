// Monte Carlo driver for the simulation studies: replicates run on a pool
// of worker threads and are reduced in replicate order, so results do not
// depend on the number of workers.

#ifndef MASSFUSE_HARNESS_H_
#define MASSFUSE_HARNESS_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "massfuse/report.h"
#include "massfuse/scenarios.h"

namespace massfuse {

struct HarnessConfig {
  Experiment experiment = Experiment::kFactorial;
  std::vector<std::string> scenarios = {"I", "II", "III", "IV"};
  // Factorial only; the stratified experiment takes its sizes from the
  // stratum table and `scale`.
  std::size_t population_size = 100000;
  std::size_t sample_size = 1000;
  std::size_t replicates = 1000;
  std::uint64_t master_seed = 20190101;
  std::size_t k = 5;
  // Population-size multiplier for the stratified experiment.
  double scale = 0.125;
  std::size_t workers = 1;
  std::size_t gam_basis_size = 10;
  // Fixed shared smoothing parameter; GCV when unset.
  std::optional<double> gam_lambda;
  // Largest tolerated fraction of failed replicates in any cell.
  double max_error_rate = 0.05;
  std::vector<Method> methods = {std::begin(kAllMethods), std::end(kAllMethods)};
  // Empty means every target of the experiment.
  std::vector<std::string> targets;
};

// Strict JSON schema: unknown keys, wrong types and out-of-range values
// raise ConfigError.
HarnessConfig parse_harness_config(const std::string& json_text);
HarnessConfig read_harness_config(const std::filesystem::path& path);
// Every field, defaults included.
std::string harness_config_to_json(const HarnessConfig& config);

// "mean_y1", "mean_y2", "cond_mean_y1_given_y2" or "mean_y".
std::vector<std::string> experiment_targets(Experiment experiment);

struct CellSummary {
  std::string scenario;
  std::string target;
  Method method = Method::kHt;
  std::size_t replicates = 0;
  std::size_t errors = 0;
  double bias = 0.0;
  double mc_se = 0.0;
  double coverage = 0.0;
  double mean_est_se = 0.0;
  // Per-replicate values in replicate order (NaN where the estimator
  // failed).
  std::vector<double> estimates;
  std::vector<double> std_errors;
  std::vector<double> truths;
  std::string first_error;

  std::size_t successes() const { return replicates - errors; }
  double error_rate() const {
    return replicates == 0 ? 0.0
                           : static_cast<double>(errors) /
                                 static_cast<double>(replicates);
  }
};

struct RunReport {
  HarnessConfig config;
  std::vector<CellSummary> cells;
  double wall_seconds = 0.0;

  const CellSummary* find(const std::string& scenario, const std::string& target,
                          Method method) const;
  double max_error_rate() const;
};

// Called after each finished replicate with (done, total); may be empty.
using ProgressFn = std::function<void(std::size_t, std::size_t)>;

RunReport run_experiment(const HarnessConfig& config, ProgressFn progress = {});
RunReport run_factorial(const HarnessConfig& config, ProgressFn progress = {});
RunReport run_mrts(const HarnessConfig& config, ProgressFn progress = {});

// Long-format CSV, one row per cell in (scenario, target, method) order.
std::string format_report_csv(const RunReport& report);
// Aligned table with bias, SE and coverage scaled by 100.
std::string format_report_text(const RunReport& report);
// Writes results.csv, results.txt and config.json into `dir` (created if
// missing). Throws IOError.
void write_report(const RunReport& report, const std::filesystem::path& dir);

}  // namespace massfuse

#endif  // MASSFUSE_HARNESS_H_
