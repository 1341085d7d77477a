#include "seqtrain/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <fstream>
#include <sstream>
#include <thread>

#include "seqtrain/serialize.hpp"

namespace seqtrain {

namespace {

// The split uses its own stream so changing data.n does not shift it.
constexpr std::uint64_t kSplitStream = 0x3000;

RunOutcome run_one(const ExperimentConfig& cfg, const PreparedData& data, Strategy strategy, std::uint64_t seed) {
  RunOutcome out;
  out.strategy = strategy;
  out.seed = seed;
  Hyperparams hp = cfg.train;
  hp.seed = seed;
  try {
    if (strategy == Strategy::full) {
      if (cfg.budget == BudgetMode::matched_total) hp.epochs *= cfg.arch.depth();
      out.report = train_full(cfg.arch, data.train, data.val, hp);
    } else {
      out.report = train_sequential(cfg.arch, data.train, data.val, hp);
    }
  } catch (const DivergenceError& e) {
    out.divergence = e.what();
  }
  return out;
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << contents;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace

PreparedData prepare_data(const ExperimentConfig& cfg) {
  const auto all = generate(cfg.data);
  auto [train, val] = split(all, cfg.val_fraction, Rng::stream(cfg.data.seed, kSplitStream).next());
  if (cfg.standardize) {
    const auto stats = standardize_fit(train);
    train = standardize_apply(train, stats);
    val = standardize_apply(val, stats);
  }
  return {std::move(train), std::move(val)};
}

std::size_t ExperimentResult::divergence_count() const {
  return static_cast<std::size_t>(std::count_if(runs.begin(), runs.end(), [](auto& r) { return r.diverged(); }));
}

ExperimentResult run_all(const ExperimentConfig& cfg) {
  validate(cfg);
  const auto started = std::chrono::steady_clock::now();
  const auto data = prepare_data(cfg);

  std::vector<std::pair<Strategy, std::uint64_t>> jobs;
  for (Strategy s : cfg.strategies)
    for (std::uint64_t seed : cfg.run_seeds()) jobs.emplace_back(s, seed);

  ExperimentResult result;
  result.runs.resize(jobs.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++)
      result.runs[i] = run_one(cfg, data, jobs[i].first, jobs[i].second);
  };
  const std::size_t n_threads = std::min(cfg.threads, jobs.size());
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }

  result.full_problem_size = param_count_full(cfg.arch);
  for (std::size_t k = 1; k <= cfg.arch.depth(); ++k) result.stage_problem_sizes.push_back(param_count_stage(cfg.arch, k));
  result.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return result;
}

double median(std::vector<double> values) {
  require(!values.empty(), "median: empty input");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

std::optional<Comparison> compare(const std::map<std::uint64_t, double>& full,
                                  const std::map<std::uint64_t, double>& sequential) {
  if (full.empty() || sequential.empty()) return std::nullopt;
  Comparison cmp;
  std::vector<double> f, s;
  for (const auto& [seed, err] : full) {
    f.push_back(err);
    if (auto it = sequential.find(seed); it != sequential.end()) cmp.per_seed[seed] = err - it->second;
  }
  for (const auto& [seed, err] : sequential) s.push_back(err);
  cmp.median_full = median(f);
  cmp.median_sequential = median(s);
  cmp.median_difference = cmp.median_full - cmp.median_sequential;
  return cmp;
}

namespace {

std::string verdict(double diff) {
  if (diff > 0) return "sequential lower by " + format_real(diff);
  if (diff < 0) return "full lower by " + format_real(-diff);
  return "equal";
}

}  // namespace

std::string format_comparison(const std::optional<Comparison>& cmp) {
  std::ostringstream out;
  out << "[comparison]\n";
  if (!cmp) {
    out << "note = omitted: both strategies need at least one completed run\n";
    return out.str();
  }
  for (const auto& [seed, diff] : cmp->per_seed)
    out << "seed." << seed << ".full_minus_sequential = " << format_real(diff) << "  # " << verdict(diff) << '\n';
  out << "median.full = " << format_real(cmp->median_full) << '\n';
  out << "median.sequential = " << format_real(cmp->median_sequential) << '\n';
  out << "median.full_minus_sequential = " << format_real(cmp->median_difference) << '\n';
  out << "result = " << verdict(cmp->median_difference) << '\n';
  return out.str();
}

std::string curves_csv(const ExperimentResult& result) {
  std::ostringstream out;
  out << "strategy,seed,stage,epoch,train_loss,val_error\n";
  for (const auto& run : result.runs) {
    if (run.diverged()) continue;
    for (const auto& stage : run.report->stages)
      for (std::size_t e = 0; e < stage.val_error.size(); ++e)
        out << to_string(run.strategy) << ',' << run.seed << ',' << stage.stage_index << ',' << e + 1 << ','
            << format_real(stage.train_loss[e]) << ',' << format_real(stage.val_error[e]) << '\n';
  }
  return out.str();
}

std::string summary_text(const ExperimentConfig& cfg, const ExperimentResult& result) {
  std::ostringstream out;
  out << "seqtrain experiment summary\n";
  out << "format = 1\n\n";
  out << "[config]\n" << echo_config(cfg) << '\n';

  out << "[problem_sizes]\n";
  out << "full = " << result.full_problem_size << '\n';
  out << "sequential =";
  for (std::size_t k = 0; k < result.stage_problem_sizes.size(); ++k)
    out << (k ? "," : " ") << result.stage_problem_sizes[k];
  out << "\n\n";

  std::map<std::uint64_t, double> finals[2];
  for (Strategy s : {Strategy::full, Strategy::sequential}) {
    if (std::find(cfg.strategies.begin(), cfg.strategies.end(), s) == cfg.strategies.end()) continue;
    std::vector<double> errs;
    std::size_t runs = 0;
    std::vector<std::vector<double>> per_stage;
    for (const auto& run : result.runs) {
      if (run.strategy != s) continue;
      ++runs;
      if (run.diverged()) continue;
      errs.push_back(run.final_val_error());
      finals[static_cast<int>(s)][run.seed] = run.final_val_error();
      per_stage.resize(run.report->stages.size());
      for (std::size_t k = 0; k < run.report->stages.size(); ++k)
        per_stage[k].push_back(run.report->stages[k].val_error.back());
    }
    out << "[strategy " << to_string(s) << "]\n";
    out << "runs = " << runs << '\n';
    out << "completed = " << errs.size() << '\n';
    out << "diverged = " << runs - errs.size() << '\n';
    if (!errs.empty()) {
      out << "final_val_error.median = " << format_real(median(errs)) << '\n';
      out << "final_val_error.min = " << format_real(*std::min_element(errs.begin(), errs.end())) << '\n';
      out << "final_val_error.max = " << format_real(*std::max_element(errs.begin(), errs.end())) << '\n';
      if (s == Strategy::sequential)
        for (std::size_t k = 0; k < per_stage.size(); ++k)
          out << "stage." << k + 1 << ".final_val_error.median = " << format_real(median(per_stage[k])) << '\n';
    }
    out << '\n';
  }

  out << "[divergences]\n";
  if (result.divergence_count() == 0) out << "none\n";
  for (const auto& run : result.runs)
    if (run.diverged()) out << to_string(run.strategy) << ".seed." << run.seed << " = " << run.divergence << '\n';
  out << '\n';

  out << format_comparison(compare(finals[0], finals[1])) << '\n';

  out << "[timing]\n";
  out << "wall_clock_seconds = " << format_real(result.wall_clock_seconds) << '\n';
  return out.str();
}

void write_outputs(const ExperimentConfig& cfg, const ExperimentResult& result) {
  std::filesystem::create_directories(cfg.out_dir / "models");
  write_file(cfg.out_dir / "curves.csv", curves_csv(result));
  write_file(cfg.out_dir / "summary.txt", summary_text(cfg, result));
  for (const auto& run : result.runs) {
    if (run.diverged()) continue;
    save_model(cfg.out_dir / "models" / (std::string(to_string(run.strategy)) + "_seed" + std::to_string(run.seed) + ".model"),
               run.report->final_model);
  }
}

int run_experiment(const ExperimentConfig& cfg) {
  const auto result = run_all(cfg);
  write_outputs(cfg, result);
  return result.divergence_count() == 0 ? 0 : 2;
}

}  // namespace seqtrain
