#ifndef SEQTRAIN_EXPERIMENT_HPP_
#define SEQTRAIN_EXPERIMENT_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "seqtrain/generator.hpp"
#include "seqtrain/train.hpp"

namespace seqtrain {

/// per_stage: every sequential stage and the full run get train.epochs.
/// matched_total: the full run gets depth * train.epochs.
enum class BudgetMode { per_stage, matched_total };

inline std::string_view to_string(BudgetMode m) { return m == BudgetMode::per_stage ? "per_stage" : "matched_total"; }

struct ExperimentConfig {
  Architecture arch;
  GeneratorConfig data;
  double val_fraction = 0.2;
  bool standardize = true;
  Hyperparams train;
  std::vector<Strategy> strategies{Strategy::full, Strategy::sequential};
  std::size_t seeds = 5;
  BudgetMode budget = BudgetMode::per_stage;
  std::filesystem::path out_dir = "results";
  std::size_t threads = 1;

  /// Run seeds are train.seed, train.seed + 1, ...
  std::vector<std::uint64_t> run_seeds() const;
};

/// Parses the flat `section.key = value` grammar (`#` starts a comment,
/// blank lines ignored). Unset keys keep their defaults. Throws ParseError
/// naming the key and line for unknown keys, malformed values, and
/// violated invariants.
ExperimentConfig parse_config(std::string_view contents);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Every key with its effective value, one `key = value` per line, in a
/// fixed order. The output parses back to an equal configuration.
std::string echo_config(const ExperimentConfig& cfg);

/// Checks cross-key invariants; throws ContractViolation.
void validate(const ExperimentConfig& cfg);

struct RunOutcome {
  Strategy strategy = Strategy::full;
  std::uint64_t seed = 0;
  std::optional<TrainReport<double>> report;
  std::string divergence;  // empty unless the run diverged

  bool diverged() const { return !report.has_value(); }
  double final_val_error() const { return report->stages.back().val_error.back(); }
};

struct PreparedData {
  Datasetd train;
  Datasetd val;
};

/// Generate, split and (optionally) standardize with training statistics.
PreparedData prepare_data(const ExperimentConfig& cfg);

struct ExperimentResult {
  std::vector<RunOutcome> runs;  // strategy-major in config order, seeds ascending
  Index full_problem_size = 0;
  std::vector<Index> stage_problem_sizes;
  double wall_clock_seconds = 0.0;

  std::size_t divergence_count() const;
};

/// Trains every (strategy, seed) pair, in parallel when cfg.threads > 1.
/// Results do not depend on the thread count.
ExperimentResult run_all(const ExperimentConfig& cfg);

/// Signed full-minus-sequential final validation errors.
struct Comparison {
  std::map<std::uint64_t, double> per_seed;  // seeds where both runs completed
  double median_full = 0.0;
  double median_sequential = 0.0;
  double median_difference = 0.0;  // median_full - median_sequential
};

/// Inputs are final validation errors keyed by seed. Returns nullopt when
/// either side is empty.
std::optional<Comparison> compare(const std::map<std::uint64_t, double>& full,
                                  const std::map<std::uint64_t, double>& sequential);

std::string format_comparison(const std::optional<Comparison>& cmp);

double median(std::vector<double> values);

std::string curves_csv(const ExperimentResult& result);
std::string summary_text(const ExperimentConfig& cfg, const ExperimentResult& result);

/// Writes curves.csv, summary.txt and models/<strategy>_seed<seed>.model
/// under cfg.out_dir, after all runs finish.
void write_outputs(const ExperimentConfig& cfg, const ExperimentResult& result);

/// run_all + write_outputs. Returns 0 on a clean run, 2 if any run diverged.
int run_experiment(const ExperimentConfig& cfg);

}  // namespace seqtrain

#endif  // SEQTRAIN_EXPERIMENT_HPP_
