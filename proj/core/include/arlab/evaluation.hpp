#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "arlab/algorithms.hpp"
#include "arlab/policy.hpp"
#include "arlab/tasks.hpp"

namespace arlab {

// log p(y*(x) | x).
double likelihood(const Policy& policy, const Task& task, const Context& x);
double likelihood(std::span<const double> w, const Task& task, const Context& x);

// min_i log p(y*_i | x, y*_{<i}).
double min_token_likelihood(const Policy& policy, const Task& task, const Context& x);

// Fresh i.i.d. test contexts: the j-th context comes from stream (seed, tag, j).
std::vector<Context> draw_contexts(const Task& task, std::size_t count, std::uint64_t seed,
                                   std::uint64_t tag = tags::test_context);

std::vector<double> likelihood_sample(const Policy& policy, const Task& task,
                                      std::span<const Context> xs, unsigned threads = 1);
std::vector<double> token_likelihood_sample(const Policy& policy, const Task& task,
                                            std::span<const Context> xs, unsigned threads = 1);

// 1 - mean exp(likelihood) over M fresh contexts from rng.
double expected_error(const Policy& policy, const Task& task, std::size_t samples, Rng& rng);
double expected_error(const Policy& policy, const Task& task, std::span<const Context> xs,
                      unsigned threads = 1);
// Exact 1 - E[p(y*|x)] over a finite context law.
double expected_error_exact(const Policy& policy, const Task& task);

// Q_hat(eps) = L_(floor(eps M) + 1) on the sorted log-likelihoods.
double lq_estimate(std::span<const double> log_likelihoods, double eps);

struct LQCurve {
  std::vector<double> sorted;  // ascending log-likelihoods
  bool token_level = false;

  static LQCurve from_sample(std::vector<double> log_likelihoods, bool token_level = false);
  double quantile(double eps) const;
  // Fraction of the sample with log-likelihood < log_alpha.
  double cdf_below(double log_alpha) const;
};

double token_lq_estimate(const Policy& policy, const Task& task, std::size_t samples, double eps,
                         Rng& rng);

// Predict-then-update interface for the mistake-bound protocol.
class OnlineLearner {
 public:
  virtual ~OnlineLearner() = default;
  virtual Sequence predict(const Context& x, Rng& rng) = 0;
  virtual void update(const Context& x, Rng& rng) = 0;
};

struct MistakeTally {
  std::int64_t total = 0;
  std::vector<std::int64_t> cumulative;  // after each round
};

MistakeTally mistake_count(OnlineLearner& learner,
                           const std::function<Context(std::int64_t, Rng&)>& stream,
                           const std::function<Sequence(const Context&)>& labeler,
                           std::int64_t rounds, Rng& rng);

// Single-sample PG-OR as an online learner: predicts a draw from p_{w_t},
// then takes one pg_or_step on the same context.
class PgOrLearner final : public OnlineLearner {
 public:
  PgOrLearner(const Task& task, BehaviorPolicy behavior, const RewardModel& rm, LrRule rule,
              Weights w0);

  Sequence predict(const Context& x, Rng& rng) override;
  void update(const Context& x, Rng& rng) override;
  const Weights& weights() const noexcept { return w_; }

 private:
  Task task_;
  BehaviorPolicy behavior_;
  const RewardModel* rm_;
  Optimizer opt_;
  Weights w_;
};

enum class IterateRule { averaged, uniform_tau };

Weights select_iterate(std::span<const Checkpoint> trajectory, IterateRule rule, Rng& rng);

// Arithmetic mean of metric over all checkpoints: the expectation of the
// metric at a uniformly drawn iterate.
double expected_over_iterates(std::span<const Checkpoint> trajectory,
                              const std::function<double(std::span<const double>)>& metric);

struct FloorPoint {
  std::int64_t step = 0;
  double running_mean_likelihood = 0.0;  // mean over checkpoints so far of E_hat[p_w]
  double base_likelihood = 0.0;          // E_hat[q0]
  double difference = 0.0;
};

// Running average of E_hat[p_{w_t}] minus E_hat[q0] along the checkpoints,
// on one fixed set of test contexts.
std::vector<FloorPoint> likelihood_floor_monitor(std::span<const Checkpoint> trajectory,
                                                 const Task& task, const Policy& base,
                                                 std::span<const Context> xs,
                                                 unsigned threads = 1);

}  // namespace arlab
