#include <doctest.h>

#include <cmath>
#include <numeric>

#include "arlab/evaluation.hpp"

using namespace arlab;

TEST_CASE("lq_estimate picks the floor(eps M) + 1 order statistic") {
  const std::vector<double> l{-5.0, -1.0, -3.0, -2.0, -4.0};  // sorted: -5 -4 -3 -2 -1
  CHECK(lq_estimate(l, 0.0) == -5.0);
  CHECK(lq_estimate(l, 0.19) == -5.0);
  CHECK(lq_estimate(l, 0.2) == -4.0);
  CHECK(lq_estimate(l, 0.5) == -3.0);
  CHECK(lq_estimate(l, 0.99) == -1.0);
  CHECK_THROWS(lq_estimate(l, 1.0));
  CHECK_THROWS(lq_estimate(std::vector<double>{}, 0.1));

  const auto curve = LQCurve::from_sample(l);
  CHECK(curve.quantile(0.5) == -3.0);
  CHECK(curve.cdf_below(-3.0) == doctest::Approx(0.4));
  CHECK(curve.cdf_below(-10.0) == 0.0);
}

TEST_CASE("Q_hat is a generalized inverse of the empirical CDF") {
  Rng rng(1);
  std::vector<double> l(1000);
  for (double& v : l) v = -std::abs(standard_normal(rng)) * 10.0;
  const auto curve = LQCurve::from_sample(l);
  for (int j = 1; j < 100; ++j) {
    const double eps = j / 100.0;
    const double q = curve.quantile(eps);
    // At most eps M samples lie strictly below Q_hat(eps); more than eps M lie at or below.
    CHECK(curve.cdf_below(q) <= eps + 1e-12);
    const auto at_or_below = std::count_if(l.begin(), l.end(), [&](double v) { return v <= q; });
    CHECK(at_or_below > eps * 1000.0);
  }
}

TEST_CASE("uniform policy: Q = k^-N and error 1 - k^-N") {
  MixtureTaskConfig cfg;
  cfg.d = 4;
  cfg.k = 3;
  cfg.length = 5;
  cfg.teacher_seed = 2;
  const Task t = make_mixture_task(cfg);
  const Weights w(t.features->dim(), 0.0);
  const LinearPolicy p(w, *t.features);
  const auto xs = draw_contexts(t, 64, 5);
  const auto l = likelihood_sample(p, t, xs);
  for (double v : l) CHECK(v == doctest::Approx(-5.0 * std::log(3.0)).epsilon(1e-12));
  CHECK(lq_estimate(l, 0.3) == doctest::Approx(-5.0 * std::log(3.0)).epsilon(1e-12));
  CHECK(expected_error(p, t, xs) == doctest::Approx(1.0 - std::pow(3.0, -5.0)).epsilon(1e-12));
  const auto tl = token_likelihood_sample(p, t, xs);
  for (double v : tl) CHECK(v == doctest::Approx(-std::log(3.0)).epsilon(1e-12));
}

TEST_CASE("exact error over a finite law") {
  HardInstanceConfig cfg;
  Rng rng(4);
  const auto hi = build_hard_instance(cfg, rng);
  const Weights w0(hi.task.features->dim(), 0.0);
  CHECK(expected_error_exact(LinearPolicy(w0, *hi.task.features), hi.task) ==
        doctest::Approx(1.0 - std::pow(4.0, -4.0)).epsilon(1e-12));
  // The base puts 1/8 on y* for three quarters of the mass and 4^-4 on the rest.
  const double base_err = expected_error_exact(*hi.base, hi.task);
  CHECK(base_err == doctest::Approx(1.0 - (0.75 / 8.0 + 0.25 / 256.0)).epsilon(1e-12));

  Rng wr(2);
  Weights w(w0.size());
  for (double& v : w) v = 2.0 * standard_normal(wr);
  const double e = expected_error_exact(LinearPolicy(w, *hi.task.features), hi.task);
  CHECK(e >= 0.0);
  CHECK(e <= 1.0);
}

TEST_CASE("draw_contexts is index-addressed") {
  const Task t = make_hypercube_task(6, 3, 2, 1);
  const auto a = draw_contexts(t, 10, 7);
  const auto b = draw_contexts(t, 20, 7);
  for (std::size_t i = 0; i < 10; ++i) CHECK(a[i].x == b[i].x);
  const auto c = draw_contexts(t, 10, 8);
  CHECK(a[0].x != c[0].x);
}

TEST_CASE("thread count does not change likelihood samples") {
  const Task t = make_hypercube_task(8, 4, 6, 3);
  Rng rng(1);
  Weights w(t.features->dim());
  for (double& v : w) v = standard_normal(rng);
  const LinearPolicy p(w, *t.features);
  const auto xs = draw_contexts(t, 101, 3);
  CHECK(likelihood_sample(p, t, xs, 1) == likelihood_sample(p, t, xs, 4));
}

TEST_CASE("iterates: expectation is the checkpoint mean") {
  std::vector<Checkpoint> traj{{0, {1.0}}, {1, {2.0}}, {2, {6.0}}};
  const double mean = expected_over_iterates(traj, [](std::span<const double> w) { return w[0]; });
  CHECK(mean == doctest::Approx(3.0));
  Rng rng(1);
  CHECK(select_iterate(traj, IterateRule::averaged, rng) == Weights{3.0});
  int hits[3] = {0, 0, 0};
  for (int i = 0; i < 3000; ++i) {
    const double v = select_iterate(traj, IterateRule::uniform_tau, rng)[0];
    hits[v == 1.0 ? 0 : v == 2.0 ? 1 : 2]++;
  }
  for (int h : hits) CHECK(std::abs(h / 3000.0 - 1.0 / 3.0) < 0.05);
}

TEST_CASE("likelihood floor monitor along an SGD run") {
  HardInstanceConfig cfg;
  Rng rng(6);
  const auto hi = build_hard_instance(cfg, rng);
  RunOptions o;
  o.steps = 50;
  o.batch = 4;
  o.checkpoint_every = 10;
  const auto traj = sgd_run(hi.task, LrRule::adaptive(2.0, 4.0),
                            Weights(hi.task.features->dim(), 0.0), o);
  const auto xs = draw_contexts(hi.task, 200, 1);
  const auto pts = likelihood_floor_monitor(traj.checkpoints, hi.task, *hi.base, xs);
  REQUIRE(pts.size() == traj.checkpoints.size());
  for (const auto& pt : pts) {
    CHECK(std::isfinite(pt.difference));
    CHECK(pt.difference == doctest::Approx(pt.running_mean_likelihood - pt.base_likelihood));
  }
  CHECK(pts.back().running_mean_likelihood > pts.front().running_mean_likelihood);
}

namespace {

// Predicts a fixed answer until told the label, then memorizes it.
class Memorizer final : public OnlineLearner {
 public:
  explicit Memorizer(std::function<Sequence(const Context&)> truth) : truth_(std::move(truth)) {}
  Sequence predict(const Context& x, Rng&) override {
    return known_[static_cast<std::size_t>(x.id)] ? truth_(x) : Sequence{-1};
  }
  void update(const Context& x, Rng&) override { known_[static_cast<std::size_t>(x.id)] = true; }

 private:
  std::function<Sequence(const Context&)> truth_;
  bool known_[5] = {false, false, false, false, false};
};

}  // namespace

TEST_CASE("mistake_count tallies wrong predictions") {
  const auto truth = [](const Context& x) { return Sequence{static_cast<Token>(x.id)}; };
  Memorizer learner(truth);
  Rng rng(2);
  const auto tally = mistake_count(
      learner, [](std::int64_t t, Rng&) { return Context{{}, t % 5}; }, truth, 20, rng);
  CHECK(tally.total == 5);
  REQUIRE(tally.cumulative.size() == 20);
  CHECK(tally.cumulative[4] == 5);
  CHECK(tally.cumulative.back() == 5);
}

TEST_CASE("PG-OR learner mistakes thin out") {
  HardInstanceConfig cfg;
  Rng rng(3);
  const auto hi = build_hard_instance(cfg, rng);
  const RewardModel rm(RewardKind::outcome, hi.task.label, 4);
  PgOrLearner learner(hi.task, BehaviorPolicy{BehaviorKind::uniform, nullptr, 1}, rm,
                      LrRule::adaptive(4.0, 2.0), Weights(hi.task.features->dim(), 0.0));
  const std::int64_t rounds = 40000;
  const auto tally = mistake_count(
      learner, [&](std::int64_t, Rng& r) { return hi.task.sample(r); }, hi.task.label, rounds, rng);
  const auto half = tally.cumulative[rounds / 2 - 1];
  CHECK(tally.total - half < half);
  CHECK(rm.query_count() == static_cast<std::uint64_t>(rounds));
}

TEST_CASE("token-level LQ of a uniform policy") {
  const Task t = make_hypercube_task(5, 7, 3, 2);
  const Weights w(t.features->dim(), 0.0);
  Rng rng(1);
  CHECK(token_lq_estimate(LinearPolicy(w, *t.features), t, 50, 0.2, rng) ==
        doctest::Approx(-std::log(7.0)).epsilon(1e-12));
}
