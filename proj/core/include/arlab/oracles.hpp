#pragma once

// Independent brute-force checks. Nothing here calls the bound-context fast
// path of the model: features are materialized densely and log-probabilities
// are recomputed from scratch.

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "arlab/model.hpp"

namespace arlab {

class ResourceLimitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SeqTable {
  std::vector<Sequence> seqs;  // lexicographic order
  std::vector<double> prob;
};

// Exact p_w(y | x) for all k^N sequences; k^N must be <= 2^20.
SeqTable enumerate_seq_distribution(std::span<const double> w, const FeatureMap& fm,
                                    const Context& x);

// log p_w(y | x) from dense features and a direct log-sum-exp.
double naive_seq_logprob(std::span<const double> w, const FeatureMap& fm, const Context& x,
                         std::span<const Token> y);

// Central differences of naive_seq_logprob, coordinate-wise.
std::vector<double> finite_diff_gradient(std::span<const double> w, const FeatureMap& fm,
                                         const Context& x, std::span<const Token> y,
                                         double h = 1e-5);

// ||a - b|| / max(||a||, 1e-8)
double relative_error(std::span<const double> analytic, std::span<const double> reference);

// -Hessian of log p_w(y | x) as sum_i Cov_{p_i}(phi), dense row-major D x D.
std::vector<double> nll_hessian(std::span<const double> w, const FeatureMap& fm, const Context& x,
                                std::span<const Token> y);

// Largest |eigenvalue| of a symmetric D x D matrix by power iteration.
double power_iteration_norm(std::span<const double> matrix, std::size_t dim, Rng& rng,
                            int iterations = 30, double tol = 1e-8);

// ||grad_w^2 p_w(y | x)|| from finite differences of the analytic gradient of p.
double prob_hessian_norm(std::span<const double> w, const FeatureMap& fm, const Context& x,
                         std::span<const Token> y, Rng& rng, double h = 1e-5);

// A feature map with one random vector per (prefix, token), context ignored.
// Norms are drawn in (0, norm_bound].
std::shared_ptr<DenseFeatureMap> random_feature_map(std::size_t dim, int k, int length,
                                                    double norm_bound, Rng& rng);

// optimal: uniform over the candidates not yet ruled out. repeat: independent
// uniform guesses that ignore the feedback.
enum class GuessStrategy { optimal, repeat };

// y ~ Unif{1..m}; the guesser makes l guesses with 0/1 feedback. A miss is a
// final guess different from y.
struct GuessingGame {
  int m = 2;
  int l = 1;
  GuessStrategy strategy = GuessStrategy::optimal;

  double run(std::int64_t trials, Rng& rng) const;
  double exact_optimal_miss() const { return static_cast<double>(m - l) / m; }
};

enum class RegretCase { constant, adaptive };

struct RegretReport {
  bool passed = true;
  double min_slack = 0.0;  // min over instances and comparators of rhs - lhs
  int instances = 0;
};

// Online GD on random convex non-negative losses (quadratics on rays and
// log-losses for the smooth case; log-losses and softplus rays for the
// gradient-dominated case), checked against the regret inequality for a grid
// of comparators.
RegretReport online_gd_regret_check(RegretCase lr_case, int instances, std::int64_t rounds,
                                    Rng& rng);

struct OracleCheck {
  std::string name;
  bool passed = false;
  double observed = 0.0;
  double threshold = 0.0;
  std::string detail;
};

// The full oracle battery used by `verify` and the acceptance suite.
std::vector<OracleCheck> run_oracle_suite(std::uint64_t seed, int instances = 100);

}  // namespace arlab
