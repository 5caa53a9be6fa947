#include "arlab/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "arlab/parallel.hpp"

namespace arlab {

double likelihood(const Policy& policy, const Task& task, const Context& x) {
  return policy.seq_logprob(x, task.label(x));
}

double likelihood(std::span<const double> w, const Task& task, const Context& x) {
  return seq_logprob(w, *task.features, x, task.label(x));
}

double min_token_likelihood(const Policy& policy, const Task& task, const Context& x) {
  const auto lp = policy.token_logprobs(x, task.label(x));
  return *std::min_element(lp.begin(), lp.end());
}

std::vector<Context> draw_contexts(const Task& task, std::size_t count, std::uint64_t seed,
                                   std::uint64_t tag) {
  std::vector<Context> xs;
  xs.reserve(count);
  for (std::size_t j = 0; j < count; ++j) {
    Rng rng = make_stream(seed, tag, j);
    xs.push_back(task.sample(rng));
  }
  return xs;
}

std::vector<double> likelihood_sample(const Policy& policy, const Task& task,
                                      std::span<const Context> xs, unsigned threads) {
  std::vector<double> out(xs.size());
  parallel_for(xs.size(), threads, [&](std::size_t j) { out[j] = likelihood(policy, task, xs[j]); });
  return out;
}

std::vector<double> token_likelihood_sample(const Policy& policy, const Task& task,
                                            std::span<const Context> xs, unsigned threads) {
  std::vector<double> out(xs.size());
  parallel_for(xs.size(), threads,
               [&](std::size_t j) { out[j] = min_token_likelihood(policy, task, xs[j]); });
  return out;
}

double expected_error(const Policy& policy, const Task& task, std::span<const Context> xs,
                      unsigned threads) {
  if (xs.empty()) throw std::invalid_argument("expected_error needs M >= 1");
  const auto ll = likelihood_sample(policy, task, xs, threads);
  double s = 0.0;
  for (double l : ll) s += std::exp(l);
  return std::clamp(1.0 - s / static_cast<double>(ll.size()), 0.0, 1.0);
}

double expected_error(const Policy& policy, const Task& task, std::size_t samples, Rng& rng) {
  if (samples < 1) throw std::invalid_argument("expected_error needs M >= 1");
  std::vector<Context> xs;
  xs.reserve(samples);
  for (std::size_t j = 0; j < samples; ++j) xs.push_back(task.sample(rng));
  return expected_error(policy, task, xs);
}

double expected_error_exact(const Policy& policy, const Task& task) {
  if (!task.support) throw std::invalid_argument("task has no finite context law");
  double s = 0.0;
  const auto& sup = *task.support;
  for (std::size_t i = 0; i < sup.contexts.size(); ++i) {
    s += sup.prob[i] * std::exp(likelihood(policy, task, sup.contexts[i]));
  }
  return std::clamp(1.0 - s, 0.0, 1.0);
}

double lq_estimate(std::span<const double> log_likelihoods, double eps) {
  if (log_likelihoods.empty()) throw std::invalid_argument("LQ estimate needs M >= 1");
  if (!(eps >= 0.0 && eps < 1.0)) throw std::invalid_argument("LQ level must be in [0, 1)");
  std::vector<double> v(log_likelihoods.begin(), log_likelihoods.end());
  const auto idx = static_cast<std::size_t>(std::floor(eps * static_cast<double>(v.size())));
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(idx), v.end());
  return v[idx];
}

LQCurve LQCurve::from_sample(std::vector<double> log_likelihoods, bool token_level) {
  if (log_likelihoods.empty()) throw std::invalid_argument("LQ curve needs M >= 1");
  std::sort(log_likelihoods.begin(), log_likelihoods.end());
  return LQCurve{std::move(log_likelihoods), token_level};
}

double LQCurve::quantile(double eps) const {
  if (!(eps >= 0.0 && eps < 1.0)) throw std::invalid_argument("LQ level must be in [0, 1)");
  const auto idx = static_cast<std::size_t>(std::floor(eps * static_cast<double>(sorted.size())));
  return sorted[idx];
}

double LQCurve::cdf_below(double log_alpha) const {
  const auto it = std::lower_bound(sorted.begin(), sorted.end(), log_alpha);
  return static_cast<double>(it - sorted.begin()) / static_cast<double>(sorted.size());
}

double token_lq_estimate(const Policy& policy, const Task& task, std::size_t samples, double eps,
                         Rng& rng) {
  if (samples < 1) throw std::invalid_argument("LQ estimate needs M >= 1");
  std::vector<double> v;
  v.reserve(samples);
  for (std::size_t j = 0; j < samples; ++j) v.push_back(min_token_likelihood(policy, task, task.sample(rng)));
  return lq_estimate(v, eps);
}

MistakeTally mistake_count(OnlineLearner& learner,
                           const std::function<Context(std::int64_t, Rng&)>& stream,
                           const std::function<Sequence(const Context&)>& labeler,
                           std::int64_t rounds, Rng& rng) {
  MistakeTally tally;
  tally.cumulative.reserve(static_cast<std::size_t>(std::max<std::int64_t>(rounds, 0)));
  for (std::int64_t t = 0; t < rounds; ++t) {
    const Context x = stream(t, rng);
    const Sequence guess = learner.predict(x, rng);
    if (guess != labeler(x)) ++tally.total;
    tally.cumulative.push_back(tally.total);
    learner.update(x, rng);
  }
  return tally;
}

PgOrLearner::PgOrLearner(const Task& task, BehaviorPolicy behavior, const RewardModel& rm,
                         LrRule rule, Weights w0)
    : task_(task), behavior_(std::move(behavior)), rm_(&rm), opt_(rule, w0.size()),
      w_(std::move(w0)) {}

Sequence PgOrLearner::predict(const Context& x, Rng& rng) {
  return LinearPolicy{w_, *task_.features}.sample(x, rng);
}

void PgOrLearner::update(const Context& x, Rng& rng) {
  // Route the step through pg_or_step with the round's context pinned.
  Task pinned = task_;
  pinned.sample = [&x](Rng&) { return x; };
  pg_or_step(w_, pinned, behavior_, *rm_, opt_, rng);
}

Weights select_iterate(std::span<const Checkpoint> trajectory, IterateRule rule, Rng& rng) {
  if (trajectory.empty()) throw std::invalid_argument("empty trajectory");
  if (rule == IterateRule::uniform_tau) {
    return trajectory[static_cast<std::size_t>(
                          uniform_index(rng, static_cast<std::int64_t>(trajectory.size())))]
        .w;
  }
  Weights avg(trajectory.front().w.size(), 0.0);
  for (const auto& c : trajectory) axpy(1.0, c.w, avg);
  for (double& v : avg) v /= static_cast<double>(trajectory.size());
  return avg;
}

double expected_over_iterates(std::span<const Checkpoint> trajectory,
                              const std::function<double(std::span<const double>)>& metric) {
  if (trajectory.empty()) throw std::invalid_argument("empty trajectory");
  double s = 0.0;
  for (const auto& c : trajectory) s += metric(c.w);
  return s / static_cast<double>(trajectory.size());
}

std::vector<FloorPoint> likelihood_floor_monitor(std::span<const Checkpoint> trajectory,
                                                 const Task& task, const Policy& base,
                                                 std::span<const Context> xs, unsigned threads) {
  if (xs.empty()) throw std::invalid_argument("monitor needs M >= 1");
  auto mean_lik = [&](const Policy& p) {
    const auto ll = likelihood_sample(p, task, xs, threads);
    double s = 0.0;
    for (double l : ll) s += std::exp(l);
    return s / static_cast<double>(ll.size());
  };
  const double q0 = mean_lik(base);
  std::vector<FloorPoint> out;
  double running = 0.0;
  for (std::size_t i = 0; i < trajectory.size(); ++i) {
    running += mean_lik(LinearPolicy{trajectory[i].w, *task.features});
    FloorPoint p;
    p.step = trajectory[i].step;
    p.running_mean_likelihood = running / static_cast<double>(i + 1);
    p.base_likelihood = q0;
    p.difference = p.running_mean_likelihood - q0;
    out.push_back(p);
  }
  return out;
}

}  // namespace arlab
