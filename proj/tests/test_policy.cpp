#include <doctest.h>

#include <cmath>
#include <map>

#include "arlab/oracles.hpp"
#include "arlab/policy.hpp"
#include "arlab/tasks.hpp"

using namespace arlab;

namespace {

// Sum of exp(seq_logprob) over all k^N sequences.
double total_mass(const Policy& p, const Context& x) {
  const auto n = sequence_count(p.vocab(), p.length());
  double s = 0.0;
  for (std::int64_t i = 0; i < n; ++i) s += std::exp(p.seq_logprob(x, nth_sequence(i, p.vocab(), p.length())));
  return s;
}

// Chain rule from next_token_logprobs, independent of seq_logprob overrides.
double chained(const Policy& p, const Context& x, const Sequence& y) {
  std::vector<double> row(static_cast<std::size_t>(p.vocab()));
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    p.next_token_logprobs(x, std::span<const Token>(y).first(i), row);
    s += row[static_cast<std::size_t>(y[i])];
  }
  return s;
}

}  // namespace

TEST_CASE("uniform policy") {
  const UniformPolicy u(3, 4);
  const Context x{};
  CHECK(u.seq_logprob(x, Sequence{0, 1, 2, 0}) == doctest::Approx(-4.0 * std::log(3.0)));
  CHECK(total_mass(u, x) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("subset-uniform policy: count-ratio conditionals") {
  const std::vector<Sequence> support{{0, 0, 1}, {0, 1, 0}, {0, 1, 1}, {2, 2, 2}};
  const SubsetUniformPolicy p(3, 3, support);
  const Context x{};
  for (const auto& y : support) {
    CHECK(p.seq_logprob(x, y) == doctest::Approx(std::log(0.25)).epsilon(1e-12));
    CHECK(chained(p, x, y) == doctest::Approx(std::log(0.25)).epsilon(1e-12));
  }
  std::vector<double> row(3);
  p.next_token_logprobs(x, Sequence{}, row);
  CHECK(std::exp(row[0]) == doctest::Approx(0.75));
  CHECK(std::exp(row[2]) == doctest::Approx(0.25));
  // Off-support prefix falls back to uniform.
  p.next_token_logprobs(x, Sequence{1}, row);
  CHECK(std::exp(row[1]) == doctest::Approx(1.0 / 3.0));
  CHECK(std::isinf(p.seq_logprob(x, Sequence{1, 1, 1})));

  Rng rng(1);
  std::map<Sequence, int> counts;
  for (int i = 0; i < 20000; ++i) ++counts[p.sample(x, rng)];
  CHECK(counts.size() == 4);
  for (const auto& [y, c] : counts) CHECK(std::abs(c / 20000.0 - 0.25) < 0.02);
}

TEST_CASE("sequence mixture: exact conditionals and sampling") {
  auto a = std::make_shared<SubsetUniformPolicy>(2, 3, std::vector<Sequence>{{0, 0, 0}, {1, 1, 1}});
  auto b = std::make_shared<UniformPolicy>(2, 3);
  const SequenceMixturePolicy mix(a, b, 0.5);
  const Context x{};
  CHECK(total_mass(mix, x) == doctest::Approx(1.0).epsilon(1e-12));
  const Sequence y0{0, 0, 0};
  CHECK(std::exp(mix.seq_logprob(x, y0)) == doctest::Approx(0.5 * 0.5 + 0.5 / 8.0));
  CHECK(chained(mix, x, y0) == doctest::Approx(mix.seq_logprob(x, y0)).epsilon(1e-12));
  const Sequence y1{0, 1, 0};
  CHECK(std::exp(mix.seq_logprob(x, y1)) == doctest::Approx(0.5 / 8.0));
  CHECK(chained(mix, x, y1) == doctest::Approx(mix.seq_logprob(x, y1)).epsilon(1e-12));

  Rng rng(2);
  int hits = 0;
  for (int i = 0; i < 40000; ++i) hits += mix.sample(x, rng) == y0;
  CHECK(std::abs(hits / 40000.0 - (0.25 + 1.0 / 16.0)) < 0.01);
}

TEST_CASE("token mixture mixes each conditional") {
  auto a = std::make_shared<SubsetUniformPolicy>(2, 2, std::vector<Sequence>{{0, 0}});
  auto b = std::make_shared<UniformPolicy>(2, 2);
  const TokenMixturePolicy mix(a, b, 0.5);
  const Context x{};
  // Each position: 0.5 * 1 + 0.5 * 0.5 = 0.75.
  CHECK(std::exp(mix.seq_logprob(x, Sequence{0, 0})) == doctest::Approx(0.75 * 0.75));
  CHECK(std::exp(mix.seq_logprob(x, Sequence{1, 1})) == doctest::Approx(0.25 * 0.5));
  CHECK(total_mass(mix, x) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("linear policy agrees with the model functions") {
  Rng rng(4);
  ExperimentFeatureMap fm(3, 3, 3, 2.0);
  Weights w(fm.dim());
  for (double& v : w) v = standard_normal(rng);
  const LinearPolicy p(w, fm);
  const Context x{{0.5, -0.5, 1.0}, -1};
  CHECK(total_mass(p, x) == doctest::Approx(1.0).epsilon(1e-12));
  const Sequence y{2, 0, 1};
  CHECK(p.seq_logprob(x, y) == doctest::Approx(naive_seq_logprob(w, fm, x, y)).epsilon(1e-12));
  const auto lp = p.token_logprobs(x, y);
  double s = 0.0;
  for (double v : lp) s += v;
  CHECK(s == doctest::Approx(p.seq_logprob(x, y)).epsilon(1e-12));
}

TEST_CASE("log_add_exp") {
  CHECK(log_add_exp(std::log(2.0), std::log(3.0)) == doctest::Approx(std::log(5.0)));
  CHECK(log_add_exp(-INFINITY, 1.0) == 1.0);
  CHECK(log_add_exp(1000.0, 1000.0) == doctest::Approx(1000.0 + std::log(2.0)));
}
