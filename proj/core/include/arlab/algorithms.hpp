#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "arlab/optimizers.hpp"
#include "arlab/policy.hpp"
#include "arlab/rewards.hpp"
#include "arlab/tasks.hpp"

namespace arlab {

enum class BehaviorKind {
  ground_truth,          // Dirac on y*(x); needs label access (pre-training as PG)
  uniform,               // Unif(Y^N)
  mixture_base_uniform,  // 1/2 q0 + 1/2 Unif, sequence level
  on_policy,             // p_{w_t}
  best_of_m_or,          // p_w, then fallbacks from 1/2 q0 + 1/2 Unif
  best_of_m_pr,          // token-by-token rebuild with prefix rewards
};

struct BehaviorPolicy {
  BehaviorKind kind = BehaviorKind::on_policy;
  std::shared_ptr<const Policy> base;  // q0, for the mixture and best-of-m kinds
  std::int64_t m = 1;

  void validate(int vocab, int length) const;
};

enum class AdvantageKind { simple, returns };

// Per-step log. queries is the reward-query delta of the step.
struct StepRecord {
  std::int64_t step = 0;
  double eta = 0.0;
  double reward = 0.0;
  std::uint64_t queries = 0;
  double correct = 0.0;  // fraction of sampled responses equal to y*
  double grad_norm = 0.0;
};

using TrainRecord = std::vector<StepRecord>;

struct Checkpoint {
  std::int64_t step = 0;
  Weights w;
};

struct Trajectory {
  Weights final;
  Weights averaged;  // (1/T) sum_{t<T} w_t; equals the init for T = 0
  std::vector<Checkpoint> checkpoints;
  TrainRecord records;
};

// Called with (t, w_t) after step t-1 has been applied, for t = 1..T.
using StepObserver = std::function<void(std::int64_t, std::span<const double>)>;

struct RunOptions {
  std::int64_t steps = 0;
  int batch = 1;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  // Checkpoints at t = 0, every, 2*every, ... and T. 0 keeps only t = 0 and T.
  std::int64_t checkpoint_every = 0;
  std::vector<std::int64_t> checkpoint_at;  // extra explicit steps
  StepObserver observer;
};

// Supervised SGD on log p_w(y*(x) | x) with fresh contexts each step; batch
// gradients are averaged.
Trajectory sgd_run(const Task& task, const LrRule& rule, const Weights& w0,
                   const RunOptions& opts);

// Result of a single post-training step.
struct StepOutcome {
  StepRecord row;
  Context x;
  Sequence y;
  Weights direction;  // the ascent direction applied (zero if no update)
  double rho = 1.0;
};

StepOutcome pg_or_step(Weights& w, const Task& task, const BehaviorPolicy& behavior,
                       const RewardModel& rm, Optimizer& opt, Rng& rng);

// Importance-weighted PG-OR with rho = Clip(p_w(y|x) / q_t(y|x), 1/zeta, zeta).
StepOutcome pg_or_clipped_step(Weights& w, const Task& task, const BehaviorPolicy& behavior,
                               const RewardModel& rm, Optimizer& opt, double zeta, Rng& rng);

StepOutcome pg_pr_step(Weights& w, const Task& task, const BehaviorPolicy& behavior,
                       const RewardModel& rm, AdvantageKind advantage, Optimizer& opt, Rng& rng);

double clip(double v, double lo, double hi);

struct OrExploration {
  Sequence y;
  int reward = 0;
  std::uint64_t queries = 0;
};

// Outcome best-of-m: one draw from p_w, then up to m fallback draws from
// 1/2 q0 + 1/2 Unif while the outcome reward is 0.
OrExploration best_of_m_or(const Context& x, const Policy& current, const Policy& base,
                           std::int64_t m, const RewardModel::Session& reward, Rng& rng);

struct PrExploration {
  Sequence y;
  std::vector<int> prefix_reward;  // r*(x, y_{1:i+1}) when known, -1 otherwise
  std::uint64_t queries = 0;
};

// Process best-of-m: a full-sequence check on a draw from p_w; on failure the
// response is rebuilt token by token, each position trying one draw from p_w
// and up to m fallback draws from the token-level 1/2 q0 + 1/2 Unif.
PrExploration best_of_m_pr(const Context& x, const Policy& current, const Policy& base,
                           std::int64_t m, const RewardModel::Session& reward, Rng& rng);

// Per-position advantages from prefix rewards. Unknown entries (-1) are
// queried left to right; nothing is queried after the first 0.
struct Advantages {
  std::vector<double> a;
  std::vector<int> prefix_reward;
  std::uint64_t queries = 0;
};
Advantages compute_advantages(std::span<const Token> y, std::vector<int> known,
                              AdvantageKind kind, const RewardModel::Session& reward);

enum class PgAlgorithm { or_plain, or_clipped, pr };

struct PgConfig {
  PgAlgorithm algorithm = PgAlgorithm::or_plain;
  BehaviorPolicy behavior;
  AdvantageKind advantage = AdvantageKind::simple;
  double zeta = 1.0;
};

// Single-sample PG, one fresh context per step.
Trajectory pg_run(const Task& task, const PgConfig& cfg, const RewardModel& rm,
                  const LrRule& rule, const Weights& w0, const RunOptions& opts);

// Fully on-policy batched PG: per step, opts.batch rollouts from p_{w_t}; the
// per-sample ORM or PRM policy gradients are averaged and the optimizer steps.
Trajectory on_policy_pg_run(const Task& task, const RewardModel& rm, AdvantageKind advantage,
                            const LrRule& rule, const Weights& w0, const RunOptions& opts);

}  // namespace arlab
