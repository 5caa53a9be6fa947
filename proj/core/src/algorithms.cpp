#include "arlab/algorithms.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "arlab/parallel.hpp"

namespace arlab {

namespace {

Sequence uniform_sequence(int k, int length, Rng& rng) {
  Sequence y(static_cast<std::size_t>(length));
  for (Token& t : y) t = static_cast<Token>(uniform_index(rng, k));
  return y;
}

// One draw from the sequence-level 1/2 q0 + 1/2 Unif.
Sequence fallback_sequence(const Context& x, const Policy& base, Rng& rng) {
  if (uniform01(rng) < 0.5) return base.sample(x, rng);
  return uniform_sequence(base.vocab(), base.length(), rng);
}

// One draw from the token-level 1/2 q0(.|x, prefix) + 1/2 Unif.
Token fallback_token(const Context& x, std::span<const Token> prefix, const Policy& base,
                     std::vector<double>& row, Rng& rng) {
  if (uniform01(rng) < 0.5) {
    base.next_token_logprobs(x, prefix, row);
    return sample_token(row, rng);
  }
  return static_cast<Token>(uniform_index(rng, base.vocab()));
}

// grad += sum_i a_i grad log p_w(y_i | x, y_{<i}).
void policy_gradient(std::span<const double> w, const FeatureMap& fm, const Context& x,
                     std::span<const Token> y, std::span<const double> a,
                     std::span<double> grad) {
  const auto bound = fm.bind(w, x);
  const Rollout r = score_rollout(*bound, fm.vocab(), y);
  accumulate_policy_gradient(*bound, r, a, grad);
}

Sequence behavior_sample(const BehaviorPolicy& b, const LinearPolicy& current, const Task& task,
                         const Context& x, Rng& rng) {
  switch (b.kind) {
    case BehaviorKind::ground_truth:
      return task.label(x);
    case BehaviorKind::uniform:
      return uniform_sequence(task.k, task.length, rng);
    case BehaviorKind::mixture_base_uniform:
      return fallback_sequence(x, *b.base, rng);
    case BehaviorKind::on_policy:
      return current.sample(x, rng);
    case BehaviorKind::best_of_m_or:
    case BehaviorKind::best_of_m_pr:
      break;
  }
  throw std::logic_error("best-of-m behaviors are sampled by their own routine");
}

// log q_t(y | x) for behaviors with a closed form.
double behavior_logprob(const BehaviorPolicy& b, const LinearPolicy& current, const Task& task,
                        const Context& x, std::span<const Token> y) {
  switch (b.kind) {
    case BehaviorKind::ground_truth: {
      const Sequence truth = task.label(x);
      return std::equal(y.begin(), y.end(), truth.begin(), truth.end())
                 ? 0.0
                 : -std::numeric_limits<double>::infinity();
    }
    case BehaviorKind::uniform:
      return -static_cast<double>(y.size()) * std::log(static_cast<double>(task.k));
    case BehaviorKind::mixture_base_uniform:
      return log_add_exp(std::log(0.5) + b.base->seq_logprob(x, y),
                         std::log(0.5) - static_cast<double>(y.size()) *
                                             std::log(static_cast<double>(task.k)));
    case BehaviorKind::on_policy:
      return current.seq_logprob(x, y);
    case BehaviorKind::best_of_m_or:
    case BehaviorKind::best_of_m_pr:
      break;
  }
  throw std::invalid_argument("importance weights need a behavior policy with a closed-form q_t");
}

void check_reward(const RewardModel& rm, RewardKind want, const Task& task) {
  if (rm.kind() != want) {
    throw std::invalid_argument(want == RewardKind::outcome
                                    ? "PG-OR needs an outcome reward model"
                                    : "PG-PR needs a process reward model");
  }
  if (rm.length() != task.length) throw std::invalid_argument("reward model length != N");
}

StepOutcome or_step(Weights& w, const Task& task, const BehaviorPolicy& behavior,
                    const RewardModel& rm, Optimizer& opt, std::optional<double> zeta, Rng& rng) {
  check_reward(rm, RewardKind::outcome, task);
  behavior.validate(task.k, task.length);
  if (behavior.kind == BehaviorKind::best_of_m_pr) {
    throw std::invalid_argument("token-level best-of-m needs a process reward model");
  }
  if (zeta && behavior.kind == BehaviorKind::best_of_m_or) {
    throw std::invalid_argument("clipped PG needs a behavior policy with a closed-form q_t");
  }
  const FeatureMap& fm = *task.features;
  StepOutcome out;
  out.x = task.sample(rng);
  const auto session = rm.session(out.x);
  const LinearPolicy current{w, fm};
  int r = 0;
  if (behavior.kind == BehaviorKind::best_of_m_or) {
    OrExploration e = best_of_m_or(out.x, current, *behavior.base, behavior.m, session, rng);
    out.y = std::move(e.y);
    r = e.reward;
    out.row.queries = e.queries;
  } else {
    out.y = behavior_sample(behavior, current, task, out.x, rng);
    r = session.outcome(out.y);
    out.row.queries = 1;
  }
  out.row.reward = r;
  out.row.correct = r;
  out.direction.assign(fm.dim(), 0.0);
  if (r == 1) {
    const std::vector<double> ones(static_cast<std::size_t>(task.length), 1.0);
    policy_gradient(w, fm, out.x, out.y, ones, out.direction);
    double z = 1.0;
    if (zeta) {
      z = *zeta;
      if (behavior.kind != BehaviorKind::on_policy) {
        const double log_ratio = current.seq_logprob(out.x, out.y) -
                                 behavior_logprob(behavior, current, task, out.x, out.y);
        out.rho = clip(std::exp(log_ratio), 1.0 / z, z);
      }
      if (out.rho != 1.0) {
        for (double& v : out.direction) v *= out.rho;
      }
    }
    out.row.grad_norm = norm2(out.direction);
    out.row.eta = opt.ascend(w, out.direction, z);
  } else {
    out.row.eta = lr_step(zeta ? clipped_rule(opt.rule(), *zeta) : opt.rule(), 0.0);
  }
  return out;
}

template <class StepFn>
Trajectory drive(const Weights& w0, const RunOptions& opts, StepFn&& step) {
  if (opts.steps < 0) throw std::invalid_argument("steps must be >= 0");
  Trajectory tr;
  Weights w = w0;
  Weights sum(w.size(), 0.0);
  auto wanted = [&](std::int64_t t) {
    if (t == 0 || t == opts.steps) return true;
    if (opts.checkpoint_every > 0 && t % opts.checkpoint_every == 0) return true;
    return std::find(opts.checkpoint_at.begin(), opts.checkpoint_at.end(), t) !=
           opts.checkpoint_at.end();
  };
  tr.checkpoints.push_back({0, w});
  tr.records.reserve(static_cast<std::size_t>(opts.steps));
  for (std::int64_t t = 0; t < opts.steps; ++t) {
    axpy(1.0, w, sum);
    StepRecord row = step(t, w);
    row.step = t;
    tr.records.push_back(row);
    if (!all_finite(w)) throw std::runtime_error("non-finite weights after step " + std::to_string(t));
    if (opts.observer) opts.observer(t + 1, w);
    if (wanted(t + 1)) tr.checkpoints.push_back({t + 1, w});
  }
  if (opts.steps > 0) {
    for (double& v : sum) v /= static_cast<double>(opts.steps);
    tr.averaged = std::move(sum);
  } else {
    tr.averaged = w0;
  }
  tr.final = std::move(w);
  return tr;
}

// Reduces per-sample gradient slots in index order into their mean.
void reduce_mean(const std::vector<std::vector<double>>& slots, const std::vector<char>& used,
                 std::span<double> out) {
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t b = 0; b < slots.size(); ++b) {
    if (used[b]) axpy(1.0, slots[b], out);
  }
  const double inv = 1.0 / static_cast<double>(slots.size());
  for (double& v : out) v *= inv;
}

}  // namespace

void BehaviorPolicy::validate(int vocab, int length) const {
  const bool needs_base = kind == BehaviorKind::mixture_base_uniform ||
                          kind == BehaviorKind::best_of_m_or ||
                          kind == BehaviorKind::best_of_m_pr;
  if (needs_base) {
    if (!base) throw std::invalid_argument("behavior policy needs a base policy q0");
    if (base->vocab() != vocab || base->length() != length) {
      throw std::invalid_argument("base policy disagrees with the task on (k, N)");
    }
  }
  if ((kind == BehaviorKind::best_of_m_or || kind == BehaviorKind::best_of_m_pr) && m < 1) {
    throw std::invalid_argument("best-of-m needs m >= 1");
  }
}

double clip(double v, double lo, double hi) { return std::min(std::max(v, lo), hi); }

OrExploration best_of_m_or(const Context& x, const Policy& current, const Policy& base,
                           std::int64_t m, const RewardModel::Session& reward, Rng& rng) {
  if (m < 1) throw std::invalid_argument("best-of-m needs m >= 1");
  OrExploration e;
  e.y = current.sample(x, rng);
  e.reward = reward.outcome(e.y);
  e.queries = 1;
  for (std::int64_t j = 0; j < m && e.reward == 0; ++j) {
    e.y = fallback_sequence(x, base, rng);
    e.reward = reward.outcome(e.y);
    ++e.queries;
  }
  return e;
}

PrExploration best_of_m_pr(const Context& x, const Policy& current, const Policy& base,
                           std::int64_t m, const RewardModel::Session& reward, Rng& rng) {
  if (m < 1) throw std::invalid_argument("best-of-m needs m >= 1");
  const auto n = static_cast<std::size_t>(current.length());
  PrExploration e;
  e.y = current.sample(x, rng);
  e.queries = 1;
  if (reward.process(e.y) == 1) {
    e.prefix_reward.assign(n, 1);
    return e;
  }
  e.y.clear();
  e.prefix_reward.assign(n, -1);
  std::vector<double> row(static_cast<std::size_t>(current.vocab()));
  bool failed = false;
  for (std::size_t i = 0; i < n; ++i) {
    if (failed) {
      // Every longer prefix has reward 0; no queries needed.
      e.y.push_back(fallback_token(x, e.y, base, row, rng));
      e.prefix_reward[i] = 0;
      continue;
    }
    current.next_token_logprobs(x, e.y, row);
    e.y.push_back(sample_token(row, rng));
    int r = reward.process(e.y);
    ++e.queries;
    for (std::int64_t j = 0; j < m && r == 0; ++j) {
      e.y.pop_back();
      const Token t = fallback_token(x, e.y, base, row, rng);
      e.y.push_back(t);
      r = reward.process(e.y);
      ++e.queries;
    }
    e.prefix_reward[i] = r;
    failed = r == 0;
  }
  return e;
}

Advantages compute_advantages(std::span<const Token> y, std::vector<int> known,
                              AdvantageKind kind, const RewardModel::Session& reward) {
  const std::size_t n = y.size();
  if (known.empty()) known.assign(n, -1);
  if (known.size() != n) throw std::invalid_argument("known rewards must have one entry per token");
  Advantages adv;
  for (std::size_t i = 0; i < n; ++i) {
    if (known[i] == -1) {
      known[i] = reward.process(y.first(i + 1));
      ++adv.queries;
    }
    if (known[i] == 0) {
      std::fill(known.begin() + static_cast<std::ptrdiff_t>(i), known.end(), 0);
      break;
    }
  }
  adv.a.assign(n, 0.0);
  if (kind == AdvantageKind::simple) {
    for (std::size_t i = 0; i < n; ++i) adv.a[i] = known[i];
  } else {
    double tail = 0.0;
    for (std::size_t i = n; i-- > 0;) {
      tail += known[i];
      adv.a[i] = tail;
    }
  }
  adv.prefix_reward = std::move(known);
  return adv;
}

StepOutcome pg_or_step(Weights& w, const Task& task, const BehaviorPolicy& behavior,
                       const RewardModel& rm, Optimizer& opt, Rng& rng) {
  return or_step(w, task, behavior, rm, opt, std::nullopt, rng);
}

StepOutcome pg_or_clipped_step(Weights& w, const Task& task, const BehaviorPolicy& behavior,
                               const RewardModel& rm, Optimizer& opt, double zeta, Rng& rng) {
  if (!(zeta >= 1.0)) throw std::invalid_argument("clip level zeta must be >= 1");
  return or_step(w, task, behavior, rm, opt, zeta, rng);
}

StepOutcome pg_pr_step(Weights& w, const Task& task, const BehaviorPolicy& behavior,
                       const RewardModel& rm, AdvantageKind advantage, Optimizer& opt,
                       Rng& rng) {
  check_reward(rm, RewardKind::process, task);
  behavior.validate(task.k, task.length);
  if (behavior.kind == BehaviorKind::best_of_m_or) {
    throw std::invalid_argument("best-of-m needs an outcome reward model");
  }
  const FeatureMap& fm = *task.features;
  StepOutcome out;
  out.x = task.sample(rng);
  const auto session = rm.session(out.x);
  const LinearPolicy current{w, fm};
  std::vector<int> known;
  if (behavior.kind == BehaviorKind::best_of_m_pr) {
    PrExploration e = best_of_m_pr(out.x, current, *behavior.base, behavior.m, session, rng);
    out.y = std::move(e.y);
    known = std::move(e.prefix_reward);
    out.row.queries = e.queries;
  } else {
    out.y = behavior_sample(behavior, current, task, out.x, rng);
  }
  const Advantages adv = compute_advantages(out.y, std::move(known), advantage, session);
  out.row.queries += adv.queries;
  const int full = adv.prefix_reward.back();
  out.row.reward = full;
  out.row.correct = full;
  out.direction.assign(fm.dim(), 0.0);
  policy_gradient(w, fm, out.x, out.y, adv.a, out.direction);
  out.row.grad_norm = norm2(out.direction);
  out.row.eta = opt.ascend(w, out.direction);
  return out;
}

Trajectory sgd_run(const Task& task, const LrRule& rule, const Weights& w0,
                   const RunOptions& opts) {
  const FeatureMap& fm = *task.features;
  if (w0.size() != fm.dim()) throw std::invalid_argument("init weights have the wrong dimension");
  if (opts.batch < 1) throw std::invalid_argument("batch must be >= 1");
  Optimizer opt{rule, fm.dim()};
  const auto batch = static_cast<std::size_t>(opts.batch);
  std::vector<std::vector<double>> slots(batch, std::vector<double>(fm.dim()));
  std::vector<char> used(batch, 1);
  std::vector<double> lik(batch);
  std::vector<double> direction(fm.dim());
  const std::vector<double> ones(static_cast<std::size_t>(task.length), 1.0);

  return drive(w0, opts, [&](std::int64_t t, Weights& w) {
    parallel_for(batch, opts.threads, [&](std::size_t b) {
      Rng rng = make_stream(opts.seed, tags::train_context, static_cast<std::uint64_t>(t), b);
      const Context x = task.sample(rng);
      const Sequence y = task.label(x);
      auto& g = slots[b];
      std::fill(g.begin(), g.end(), 0.0);
      const auto bound = fm.bind(w, x);
      const Rollout r = score_rollout(*bound, fm.vocab(), y);
      lik[b] = std::exp(r.seq_logprob());
      accumulate_policy_gradient(*bound, r, ones, g);
    });
    reduce_mean(slots, used, direction);
    StepRecord row;
    row.grad_norm = norm2(direction);
    row.eta = opt.ascend(w, direction);
    double mean_lik = 0.0;
    for (double v : lik) mean_lik += v;
    row.reward = mean_lik / static_cast<double>(batch);
    row.correct = row.reward;
    return row;
  });
}

Trajectory pg_run(const Task& task, const PgConfig& cfg, const RewardModel& rm,
                  const LrRule& rule, const Weights& w0, const RunOptions& opts) {
  const FeatureMap& fm = *task.features;
  if (w0.size() != fm.dim()) throw std::invalid_argument("init weights have the wrong dimension");
  Optimizer opt{rule, fm.dim()};
  return drive(w0, opts, [&](std::int64_t t, Weights& w) {
    Rng rng = make_stream(opts.seed, tags::rollout, static_cast<std::uint64_t>(t));
    switch (cfg.algorithm) {
      case PgAlgorithm::or_plain:
        return pg_or_step(w, task, cfg.behavior, rm, opt, rng).row;
      case PgAlgorithm::or_clipped:
        return pg_or_clipped_step(w, task, cfg.behavior, rm, opt, cfg.zeta, rng).row;
      case PgAlgorithm::pr:
        return pg_pr_step(w, task, cfg.behavior, rm, cfg.advantage, opt, rng).row;
    }
    throw std::logic_error("unknown PG algorithm");
  });
}

Trajectory on_policy_pg_run(const Task& task, const RewardModel& rm, AdvantageKind advantage,
                            const LrRule& rule, const Weights& w0, const RunOptions& opts) {
  const FeatureMap& fm = *task.features;
  if (w0.size() != fm.dim()) throw std::invalid_argument("init weights have the wrong dimension");
  if (opts.batch < 1) throw std::invalid_argument("batch must be >= 1");
  if (rm.length() != task.length) throw std::invalid_argument("reward model length != N");
  Optimizer opt{rule, fm.dim()};
  const auto batch = static_cast<std::size_t>(opts.batch);
  const auto n = static_cast<std::size_t>(task.length);
  std::vector<std::vector<double>> slots(batch);
  std::vector<char> used(batch, 0);
  std::vector<double> reward(batch);
  std::vector<double> correct(batch);
  std::vector<double> direction(fm.dim());

  return drive(w0, opts, [&](std::int64_t t, Weights& w) {
    const std::uint64_t before = rm.query_count();
    parallel_for(batch, opts.threads, [&](std::size_t b) {
      Rng rng = make_stream(opts.seed, tags::rollout, static_cast<std::uint64_t>(t), b);
      const Context x = task.sample(rng);
      const auto session = rm.session(x);
      const auto bound = fm.bind(w, x);
      const Rollout r = sample_rollout(*bound, fm.vocab(), task.length, rng);
      std::vector<double> a;
      if (rm.kind() == RewardKind::outcome) {
        const int full = session.outcome(r.tokens);
        a.assign(n, static_cast<double>(full));
        reward[b] = full;
        correct[b] = full;
      } else {
        Advantages adv = compute_advantages(r.tokens, {}, advantage, session);
        int depth = 0;
        while (depth < task.length && adv.prefix_reward[static_cast<std::size_t>(depth)] == 1) {
          ++depth;
        }
        reward[b] = static_cast<double>(depth) / task.length;
        correct[b] = depth == task.length ? 1.0 : 0.0;
        a = std::move(adv.a);
      }
      used[b] = std::any_of(a.begin(), a.end(), [](double v) { return v != 0.0; }) ? 1 : 0;
      if (used[b]) {
        auto& g = slots[b];
        g.assign(fm.dim(), 0.0);
        accumulate_policy_gradient(*bound, r, a, g);
      }
    });
    reduce_mean(slots, used, direction);
    StepRecord row;
    row.queries = rm.query_count() - before;
    row.grad_norm = norm2(direction);
    row.eta = opt.ascend(w, direction);
    double rs = 0.0;
    double cs = 0.0;
    for (std::size_t b = 0; b < batch; ++b) {
      rs += reward[b];
      cs += correct[b];
    }
    row.reward = rs / static_cast<double>(batch);
    row.correct = cs / static_cast<double>(batch);
    return row;
  });
}

}  // namespace arlab
