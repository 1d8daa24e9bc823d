#pragma once

#include <optional>
#include <string>
#include <vector>

#include "perc/estimators.hpp"

namespace perc {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  std::string experiment;
  ModelSpec model = BooleanModel{};
  std::optional<EventSpec> event;
  std::uint64_t n = 1000;
  std::uint64_t master_seed = 1;
  int threads = 0;
  bool oracle_crosscheck = false;
  DetectorPolicy policy;
  double theta = 0.01;

  std::vector<double> levels;
  double kappa = 3.0;
  std::vector<double> r_list;
  Phase curve_phase = Phase::occupied;

  std::vector<double> r_schedule;
  struct {
    double lo = 0.0, hi = 0.0;
    double rel_tolerance = 0.1;
    int max_classify_calls = 40;
    int extensions = 2;
  } bracket;

  std::vector<double> radii;
  Phase arm_phase = Phase::occupied;

  struct {
    double r = 8.0, s = 8.0;
  } corr;

  struct {
    double lambda_target = 0.1, r = 8.0, dp = 0.05;
    int m = 4;
  } russo;

  struct {
    std::vector<double> levels;
    std::vector<double> r_list;
    std::vector<int> pixel_list;
  } duality;

  struct {
    double r_pad = 160.0;
    std::vector<double> lambdas;
  } coverage;

  struct {
    std::vector<double> caps;
  } truncation;

  std::string out_dir = ".";
  std::string echo;  // canonical JSON echo of the parsed config
};

// Parses and validates a config file; unknown fields are rejected.
ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config_json(const std::string& text);

// Runs the experiment, writing <out>/results.csv and <out>/summary.json.
// Returns 0 on success, 3 on runtime errors (which are also recorded in the
// summary).
int run_experiment(const ExperimentConfig& cfg);

// Re-executes the selected rows of a summary (selector: "all" or a comma
// list of row indices) and verifies outcome digests bitwise.  Returns 0 when
// everything matches, 4 on any mismatch.
int replay_summary(const std::string& summary_path, const std::string& rows,
                   int threads_override);

// Fixed CSV header (the golden-file tests pin it).
extern const char* const kCsvHeader;

}  // namespace perc
