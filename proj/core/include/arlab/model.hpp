#pragma once

// Linear autoregressive softmax model:
//   p_w(y_i | x, y_{1:i-1}) = softmax_y <w, phi(x, y_{1:i-1}, y)>
// All likelihood arithmetic stays in log space; sequences of length 128 over
// 32 tokens reach probabilities far below the double range otherwise.

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "arlab/rng.hpp"
#include "arlab/types.hpp"

namespace arlab {

// A feature map evaluated against fixed (w, x). Structured maps cache
// per-context work here (e.g. W1 x) so per-token cost is O(k).
class BoundContext {
 public:
  virtual ~BoundContext() = default;

  // out[y] = <w, phi(x, prefix, y)> for every token y.
  virtual void logits(std::span<const Token> prefix, std::span<double> out) const = 0;

  // grad += sum_y coeffs[y] * phi(x, prefix, y). Structured maps may defer
  // part of the sum until flush().
  virtual void accumulate(std::span<const Token> prefix, std::span<const double> coeffs,
                          std::span<double> grad) = 0;

  virtual void flush(std::span<double> /*grad*/) {}
};

class FeatureMap {
 public:
  FeatureMap(std::size_t dim, int vocab, int length, double norm_bound);
  virtual ~FeatureMap() = default;

  std::size_t dim() const noexcept { return dim_; }
  int vocab() const noexcept { return vocab_; }
  int length() const noexcept { return length_; }
  // Declared R >= ||phi|| for every emitted feature.
  double norm_bound() const noexcept { return norm_bound_; }

  virtual std::string_view kind() const = 0;

  // Dense phi(x, prefix, y) into out (size dim()).
  virtual void feature(const Context& x, std::span<const Token> prefix, Token y,
                       std::span<double> out) const = 0;

  // Default binding materializes features densely; structured maps override.
  virtual std::unique_ptr<BoundContext> bind(std::span<const double> w, const Context& x) const;

 private:
  std::size_t dim_;
  int vocab_;
  int length_;
  double norm_bound_;
};

// Feature map backed by an arbitrary evaluator. Used for oracle instances and
// ad-hoc maps in tests.
class DenseFeatureMap final : public FeatureMap {
 public:
  using Evaluator =
      std::function<void(const Context&, std::span<const Token>, Token, std::span<double>)>;

  DenseFeatureMap(std::size_t dim, int vocab, int length, double norm_bound, Evaluator eval);

  std::string_view kind() const override { return "dense"; }
  void feature(const Context& x, std::span<const Token> prefix, Token y,
               std::span<double> out) const override;

 private:
  Evaluator eval_;
};

// out = log_softmax(logits) computed with the max-shift. Returns log-normalizer.
double log_softmax(std::span<const double> logits, std::span<double> out);

struct TokenDistribution {
  std::vector<double> prob;

  int vocab() const noexcept { return static_cast<int>(prob.size()); }
};

TokenDistribution next_token_distribution(std::span<const double> w, const FeatureMap& fm,
                                          const Context& x, std::span<const Token> prefix);

// log p_w(y | x, prefix). Throws std::invalid_argument for an out-of-range
// token or a prefix of length >= N.
double token_logprob(std::span<const double> w, const FeatureMap& fm, const Context& x,
                     std::span<const Token> prefix, Token y);

// log p_w(y | x) for a full sequence (|y| = N).
double seq_logprob(std::span<const double> w, const FeatureMap& fm, const Context& x,
                   std::span<const Token> y);

// log p_w(y_{1:i} | x), 1 <= i <= N.
double partial_seq_logprob(std::span<const double> w, const FeatureMap& fm, const Context& x,
                           std::span<const Token> y, std::size_t i);

Sequence sample_sequence(std::span<const double> w, const FeatureMap& fm, const Context& x,
                         Rng& rng);

// sum_i [phi(x, y_{1:i-1}, y_i) - E_{Y ~ p_w}[phi(x, y_{1:i-1}, Y)]]
std::vector<double> grad_seq_loglik(std::span<const double> w, const FeatureMap& fm,
                                    const Context& x, std::span<const Token> y);

// A sequence together with the next-token log-distributions along it.
struct Rollout {
  int vocab = 0;
  Sequence tokens;
  std::vector<double> log_probs;  // row-major N x k

  std::span<const double> row(std::size_t i) const {
    return {log_probs.data() + i * static_cast<std::size_t>(vocab), static_cast<std::size_t>(vocab)};
  }
  double token_logprob(std::size_t i) const { return row(i)[static_cast<std::size_t>(tokens[i])]; }
  double seq_logprob() const;
  double prefix_logprob(std::size_t i) const;  // first i tokens
};

Rollout sample_rollout(const BoundContext& bound, int vocab, int length, Rng& rng);
Rollout score_rollout(const BoundContext& bound, int vocab, std::span<const Token> y);

// Draws a token from a log-distribution row.
Token sample_token(std::span<const double> log_probs, Rng& rng);

// grad += sum_i weights[i] * (phi(y_i) - E_{p_i}[phi]), using the stored
// distributions. weights has one entry per position; zero entries are skipped.
void accumulate_policy_gradient(BoundContext& bound, const Rollout& rollout,
                                std::span<const double> weights, std::span<double> grad);

}  // namespace arlab
