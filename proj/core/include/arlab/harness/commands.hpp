#pragma once

// Experiment orchestration behind the CLI subcommands. Each command reads a
// validated ExperimentConfig, writes its artifacts under cfg.output.dir and
// returns the numbers the acceptance checks need.
//
// Output files (all CSVs carry a header row):
//   pretrain   ckpt_<step>.bin, teacher.bin, config.ini, error.csv, train.csv
//   posttrain  ckpt_<step>.bin, config.ini, error.csv, error_greedy.csv,
//              centers.csv, train.csv
//   lq         lq.csv, cdf.csv
//   guessing   guessing.csv
//   verify     verify.csv
//   lowerbound lowerbound.csv, lowerbound_summary.csv

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "arlab/harness/config.hpp"
#include "arlab/oracles.hpp"

namespace arlab::harness {

struct CheckLine {
  std::string name;
  bool passed = false;
  std::string detail;
};

bool all_passed(const std::vector<CheckLine>& checks);

struct TaskBundle {
  Task task;
  std::shared_ptr<const Policy> base;  // fixed base policy of a hard instance
  std::optional<HardInstance> hard;
};

// Builds the task named by cfg.task. A given teacher overrides the seeded draw.
TaskBundle make_task(const ExperimentConfig& cfg, std::shared_ptr<const Teacher> teacher = nullptr);

// Outcome-reward best-of-m budget: min(ceil(1 / Q((1 - slack) eps)), k^N).
std::int64_t derive_m_outcome(std::span<const double> base_log_likelihoods, double eps,
                              double slack, int k, int length);
// Token-level budget: ceil(2 (ln N + 1) min(1 / Q_TL((1 - slack) eps), k)).
std::int64_t derive_m_process(std::span<const double> base_token_log_likelihoods, double eps,
                              double slack, int k, int length);

struct PretrainResult {
  std::vector<std::filesystem::path> checkpoints;
  std::vector<std::int64_t> steps;
  double final_error = 1.0;
};
PretrainResult cmd_pretrain(const ExperimentConfig& cfg);

struct EvalRow {
  std::int64_t step = 0;
  double expected_error = 1.0;
  double greedy_error = 1.0;
  double offsupport = 0.0;  // NaN when there are no off-support centers
  double onsupport = 0.0;
};

struct PosttrainResult {
  std::vector<EvalRow> evals;
  std::vector<int> offsupport_centers;
  std::vector<int> tracked_centers;
  std::vector<std::uint64_t> cumulative_queries;  // after each step
  std::int64_t m = 0;
  std::filesystem::path final_checkpoint;
};
PosttrainResult cmd_posttrain(const ExperimentConfig& cfg);

struct LqRow {
  std::int64_t checkpoint_step = 0;
  double epsilon = 0.0;
  double q_log10 = 0.0;
};
// Empty list: every checkpoint in cfg.output.dir.
std::vector<LqRow> cmd_lq(const ExperimentConfig& cfg,
                          std::vector<std::filesystem::path> checkpoints = {});

struct GuessRow {
  int m = 0;
  int l = 0;
  std::string strategy;
  double miss = 0.0;
  double exact = 0.0;
  double sigma = 0.0;
};
std::vector<GuessRow> cmd_guessing(const ExperimentConfig& cfg);

std::vector<OracleCheck> cmd_verify(const ExperimentConfig& cfg);

struct LowerBoundRow {
  int repeat = 0;
  std::string algorithm;
  double target = 0.0;
  std::int64_t m = 0;
  std::int64_t steps = 0;
  std::uint64_t queries = 0;
  bool reached = false;
  double final_error = 1.0;
};
struct LowerBoundSummary {
  std::string algorithm;
  double target = 0.0;
  std::int64_t m = 0;
  double mean_queries = 0.0;
  int reached = 0;
  int runs = 0;
};
struct LowerBoundResult {
  std::vector<LowerBoundRow> runs;
  std::vector<LowerBoundSummary> summary;

  const LowerBoundSummary* find(const std::string& algorithm, double target) const;
};
LowerBoundResult cmd_lowerbound(const ExperimentConfig& cfg);

struct ReproResult {
  std::vector<CheckLine> checks;
};
// pretrain -> out/pretrain, ORM -> out/orm, PRM -> out/prm; checks written to
// fig1_checks.csv.
ReproResult cmd_reproduce_fig1(const ExperimentConfig& cfg);
// pretrain with checkpoints {0, 250, 500, 1000} then lq; checks in fig2_checks.csv.
ReproResult cmd_reproduce_fig2(const ExperimentConfig& cfg);

}  // namespace arlab::harness
