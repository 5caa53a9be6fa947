#pragma once

// Experiment configuration. On disk this is an INI file:
//
//   # comment
//   [section]
//   key = value
//
// Sections: task, pretrain, posttrain, eval, lowerbound, guessing, output.
// Lines starting with '#' or ';' are comments. Unknown sections or keys are
// validation errors. Lists are comma-separated.
// Every key has a default; see README for the full table.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "arlab/algorithms.hpp"
#include "arlab/optimizers.hpp"
#include "arlab/tasks.hpp"

namespace arlab::harness {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& what, std::vector<std::string> keys)
      : std::runtime_error(what), keys_(std::move(keys)) {}
  const std::vector<std::string>& keys() const noexcept { return keys_; }

 private:
  std::vector<std::string> keys_;
};

struct OptimizerConfig {
  std::string kind = "adagrad";  // adagrad | constant | adaptive
  double lr = 0.1;
  double adaptive_a = 2.0;
  double adaptive_b = 4.0;
  double adagrad_delta = 1e-10;

  LrRule rule() const;

  bool operator==(const OptimizerConfig&) const = default;
};

struct TaskConfig {
  std::string kind = "mixture";  // mixture | hypercube | constant | hard
  int d = 32;
  int k = 32;
  int length = 128;
  std::optional<std::uint64_t> teacher_seed;  // defaults to the master seed
  double noise_std_scale = 0.05;
  double noise_norm_clip = 0.05;
  // hard instance
  double gamma = 0.25;
  double alpha = 0.125;
  double eps_star = 0.25;
  double delta = 0.5;

  bool operator==(const TaskConfig&) const = default;
};

struct PretrainConfig {
  OptimizerConfig optimizer{};
  std::int64_t steps = 1000;
  int batch = 256;
  std::int64_t checkpoint_every = 0;
  std::vector<std::int64_t> checkpoints;  // extra checkpoint steps

  bool operator==(const PretrainConfig&) const = default;
};

struct PosttrainConfig {
  std::string algorithm = "on_policy";  // on_policy | pg_or | pg_or_clipped | pg_pr
  std::string reward = "outcome";       // outcome | process
  std::string behavior = "on_policy";   // see BehaviorKind
  std::string advantage = "simple";     // simple | return
  double zeta = 1.0;
  std::int64_t m = 0;       // best-of-m budget; 0 derives it from the base model's LQ
  double target_eps = 0.2;  // error level used to derive m
  double lq_slack = 0.1;
  OptimizerConfig optimizer{"adagrad", 0.1, 4.0, 2.0, 1e-10};
  std::int64_t steps = 4000;
  int batch = 1024;
  std::string init = "base";  // base | zero
  std::string base_checkpoint;

  bool operator==(const PosttrainConfig&) const = default;
};

struct EvalConfig {
  std::int64_t test_size = 4096;
  std::int64_t error_test_size = 1024;
  std::vector<double> eps_grid;  // empty: 0.01, 0.02, ..., 0.5
  int cdf_points = 200;
  std::int64_t eval_every = 100;
  std::int64_t checkpoint_every = 1000;
  double offsupport_threshold = 1e-12;
  int tracked_centers = 16;

  std::vector<double> grid() const;

  bool operator==(const EvalConfig&) const = default;
};

struct LowerBoundConfig {
  std::vector<double> targets{0.3, 0.2};
  int repeats = 3;
  std::int64_t max_steps = 400000;
  std::int64_t lq_samples = 4096;
  std::vector<std::string> algorithms{"pg_or_best_of_m", "pg_pr"};

  bool operator==(const LowerBoundConfig&) const = default;
};

struct GuessingConfig {
  std::vector<int> m_grid{2, 4, 8, 16};
  std::int64_t trials = 100000;

  bool operator==(const GuessingConfig&) const = default;
};

struct OutputConfig {
  std::string dir = "out";
  std::uint64_t seed = 0;
  unsigned threads = 1;

  bool operator==(const OutputConfig&) const = default;
};

struct ExperimentConfig {
  TaskConfig task;
  PretrainConfig pretrain;
  PosttrainConfig posttrain;
  EvalConfig eval;
  LowerBoundConfig lowerbound;
  GuessingConfig guessing;
  OutputConfig output;

  void validate() const;  // throws ConfigError listing offending keys
  bool operator==(const ExperimentConfig&) const = default;
};

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);
// Every key, doubles in round-trip form: parse_config(to_ini(c)) == c.
std::string to_ini(const ExperimentConfig& cfg);

// Full-scale presets for the two figure reproductions and the query study.
ExperimentConfig fig1_preset();
ExperimentConfig fig2_preset();
ExperimentConfig lowerbound_preset();  // hard instance, k = 4, N = 6

BehaviorKind parse_behavior(const std::string& name);
AdvantageKind parse_advantage(const std::string& name);
RewardKind parse_reward(const std::string& name);

}  // namespace arlab::harness
