#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "arlab/evaluation.hpp"
#include "arlab/tasks.hpp"

using namespace arlab;

TEST_CASE("labels follow the argmax recurrence with lowest-index ties") {
  Teacher t;
  t.d = 2;
  t.k = 3;
  // W1 x = (x0, x1, x0 + x1); W2 routes token j to a bonus on token (j + 1) mod 3.
  t.w1 = {1, 0, 0, 1, 1, 1};
  t.w2 = {0, 0, 5, 5, 0, 0, 0, 5, 0};
  const std::vector<double> x{1.0, 1.0};
  // Step 1: (1, 1, 2) -> 2. Then bonus on 0: (6, 1, 2) -> 0, bonus on 1: (1, 6, 2) -> 1, ...
  CHECK(label(t, x, 5) == Sequence{2, 0, 1, 2, 0});

  Teacher zero{2, 3, std::vector<double>(6, 0.0), std::vector<double>(9, 0.0)};
  CHECK(label(zero, x, 4) == Sequence{0, 0, 0, 0});
}

TEST_CASE("teacher draws are seed-determined") {
  const auto a = Teacher::draw(4, 3, 9);
  const auto b = Teacher::draw(4, 3, 9);
  const auto c = Teacher::draw(4, 3, 10);
  CHECK(a.w1 == b.w1);
  CHECK(a.w2 == b.w2);
  CHECK(a.w1 != c.w1);
  CHECK(a.w1.size() == 12);
  CHECK(a.w2.size() == 9);
}

TEST_CASE("mixture contexts sit near a scaled basis vector") {
  MixtureTaskConfig cfg;
  cfg.d = 16;
  cfg.k = 4;
  cfg.length = 3;
  Rng rng(1);
  std::set<std::int64_t> seen;
  for (int i = 0; i < 500; ++i) {
    const Context c = sample_mixture_context(cfg, rng);
    REQUIRE(c.id >= 0);
    REQUIRE(c.id < 16);
    seen.insert(c.id);
    CHECK(norm2(c.x) == doctest::Approx(4.0).epsilon(1e-12));
    // The center coordinate dominates: noise norm is clipped at 0.05 before rescaling.
    CHECK(c.x[static_cast<std::size_t>(c.id)] > 3.9);
  }
  CHECK(seen.size() == 16);
}

TEST_CASE("mixture task centers and features") {
  MixtureTaskConfig cfg;
  cfg.d = 8;
  cfg.k = 5;
  cfg.length = 4;
  cfg.teacher_seed = 2;
  const Task t = make_mixture_task(cfg);
  CHECK(t.centers.size() == 8);
  CHECK(t.features->dim() == 8u * 5 + 25);
  CHECK(t.features->norm_bound() == doctest::Approx(std::sqrt(9.0)));
  Rng rng(4);
  const auto audit = audit_feature_norms(t, 200, rng);
  CHECK(audit.max_all <= t.features->norm_bound() + 1e-12);

  // Reusing the same teacher reproduces the labels.
  const Task t2 = make_mixture_task(cfg, t.teacher);
  for (const auto& c : t.centers) CHECK(t.label(c) == t2.label(c));
  MixtureTaskConfig wrong = cfg;
  wrong.d = 9;
  CHECK_THROWS_AS(make_mixture_task(wrong, t.teacher), std::invalid_argument);
}

TEST_CASE("hypercube contexts have +-1 entries") {
  Rng rng(8);
  const Context c = sample_hypercube_context(32, rng);
  for (double v : c.x) CHECK(std::abs(v) == 1.0);
}

TEST_CASE("constant-feature task gives equal token likelihoods along the label") {
  Rng rng(6);
  const Task t = constant_feature_task(5, 4, 6, rng);
  Weights w(t.features->dim());
  for (double& v : w) v = standard_normal(rng);
  const LinearPolicy p(w, *t.features);
  for (int i = 0; i < 20; ++i) {
    const Context x = t.sample(rng);
    const Sequence y = t.label(x);
    CHECK(std::all_of(y.begin(), y.end(), [&](Token v) { return v == y.front(); }));
    const auto lp = p.token_logprobs(x, y);
    for (double v : lp) CHECK(v == doctest::Approx(lp.front()).epsilon(1e-12));
  }
}

TEST_CASE("hard instance sizes") {
  HardInstanceConfig cfg;
  CHECK(cfg.contexts() == 16);
  CHECK(cfg.m() == 8);
  cfg.gamma = 0.3;  // floor(11.1) = 11 -> 12
  CHECK(cfg.contexts() == 12);
  cfg.gamma = 0.25;
  cfg.alpha = 1.0 / 300.0;
  cfg.k = 2;
  cfg.length = 4;  // 1/alpha > k^N
  CHECK_THROWS(cfg.validate());
  CHECK(sequence_count(4, 3) == 64);
  CHECK(nth_sequence(5, 4, 3) == Sequence{0, 1, 1});
  CHECK(nth_sequence(63, 4, 3) == Sequence{3, 3, 3});
}

TEST_CASE("hard instance law, labels, base policy and margin") {
  HardInstanceConfig cfg;
  cfg.k = 4;
  cfg.length = 4;
  Rng rng(21);
  const HardInstance hi = build_hard_instance(cfg, rng);
  const Task& t = hi.task;
  REQUIRE(t.support);
  const auto& sup = *t.support;
  CHECK(sup.contexts.size() == 16);
  double total = 0.0;
  double block_mass[4] = {0, 0, 0, 0};
  for (std::size_t i = 0; i < sup.contexts.size(); ++i) {
    total += sup.prob[i];
    block_mass[hi.block[i]] += sup.prob[i];
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-15));
  // (1 - eps*)(1 - delta), (1 - eps*) delta, eps* (1 - delta), eps* delta with eps* = 1/4, delta = 1/2.
  CHECK(block_mass[0] == doctest::Approx(0.375));
  CHECK(block_mass[1] == doctest::Approx(0.375));
  CHECK(block_mass[2] == doctest::Approx(0.125));
  CHECK(block_mass[3] == doctest::Approx(0.125));

  CHECK(hi.y_m.size() == 8);
  for (std::size_t i = 0; i < sup.contexts.size(); ++i) {
    const Sequence y = t.label(sup.contexts[i]);
    const double lp = hi.base->seq_logprob(sup.contexts[i], y);
    if (hi.block[i] < 2) {
      CHECK(std::find(hi.y_m.begin(), hi.y_m.end(), y) != hi.y_m.end());
      CHECK(lp == doctest::Approx(std::log(1.0 / 8.0)).epsilon(1e-12));
    } else {
      CHECK(lp == doctest::Approx(-4.0 * std::log(4.0)).epsilon(1e-12));
    }
  }

  REQUIRE(t.separator);
  CHECK(norm2(t.separator->w_star) == doctest::Approx(1.0).epsilon(1e-12));
  const double declared = *t.separator->margin;
  CHECK(declared == doctest::Approx(1.0 / std::sqrt(16.0 * 4.0)));
  Rng mrng(2);
  CHECK(measure_margin(t, t.separator->w_star, 200, mrng) == doctest::Approx(declared).epsilon(1e-12));

  // Empirical block frequencies of the sampler.
  Rng srng(3);
  int low = 0;
  const int draws = 40000;
  for (int i = 0; i < draws; ++i) low += hi.block[static_cast<std::size_t>(t.sample(srng).id)] >= 2;
  CHECK(std::abs(low / static_cast<double>(draws) - 0.25) < 0.01);
}

TEST_CASE("hard-instance features reject a dimension below I N k") {
  CHECK_THROWS_AS(HardInstanceFeatureMap(16, 4, 4, 100), std::invalid_argument);
  HardInstanceFeatureMap fm(16, 4, 4, 300);
  CHECK(fm.dim() == 300);
  CHECK(fm.index(1, 2, 3) == (1u * 4 + 2) * 4 + 3);
}

TEST_CASE("mixture separator has a positive measured margin") {
  MixtureTaskConfig cfg;
  cfg.d = 8;
  cfg.k = 4;
  cfg.length = 5;
  cfg.teacher_seed = 13;
  const Task t = make_mixture_task(cfg);
  Rng rng(5);
  CHECK(measure_margin(t, t.separator->w_star, 200, rng) >= 0.0);
}
