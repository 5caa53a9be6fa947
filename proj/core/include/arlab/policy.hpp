#pragma once

#include <memory>
#include <span>
#include <vector>

#include "arlab/model.hpp"

namespace arlab {

// A distribution over response sequences given a context. Base models,
// behavior policies and the trained model all go through this interface.
class Policy {
 public:
  virtual ~Policy() = default;

  virtual int vocab() const = 0;
  virtual int length() const = 0;

  // out[y] = log q(y | x, prefix)
  virtual void next_token_logprobs(const Context& x, std::span<const Token> prefix,
                                   std::span<double> out) const = 0;

  virtual Sequence sample(const Context& x, Rng& rng) const;
  virtual double seq_logprob(const Context& x, std::span<const Token> y) const;
  // log q(y_i | x, y_{1:i-1}) for every position along y.
  virtual std::vector<double> token_logprobs(const Context& x, std::span<const Token> y) const;
};

// p_w for a linear model. Non-owning view: w and fm must outlive the policy.
class LinearPolicy final : public Policy {
 public:
  LinearPolicy(std::span<const double> w, const FeatureMap& fm);

  int vocab() const override { return fm_->vocab(); }
  int length() const override { return fm_->length(); }
  std::span<const double> weights() const { return w_; }
  const FeatureMap& features() const { return *fm_; }

  void next_token_logprobs(const Context& x, std::span<const Token> prefix,
                           std::span<double> out) const override;
  Sequence sample(const Context& x, Rng& rng) const override;
  double seq_logprob(const Context& x, std::span<const Token> y) const override;
  std::vector<double> token_logprobs(const Context& x, std::span<const Token> y) const override;

 private:
  std::span<const double> w_;
  const FeatureMap* fm_;
};

class UniformPolicy final : public Policy {
 public:
  UniformPolicy(int vocab, int length);

  int vocab() const override { return vocab_; }
  int length() const override { return length_; }
  void next_token_logprobs(const Context& x, std::span<const Token> prefix,
                           std::span<double> out) const override;
  Sequence sample(const Context& x, Rng& rng) const override;
  double seq_logprob(const Context& x, std::span<const Token> y) const override;

 private:
  int vocab_;
  int length_;
};

// Uniform over a fixed set of sequences. Next-token conditionals are count
// ratios inside the set; a prefix with no continuation in the set gets the
// uniform conditional.
class SubsetUniformPolicy final : public Policy {
 public:
  SubsetUniformPolicy(int vocab, int length, std::vector<Sequence> support);

  int vocab() const override { return vocab_; }
  int length() const override { return length_; }
  const std::vector<Sequence>& support() const { return support_; }

  void next_token_logprobs(const Context& x, std::span<const Token> prefix,
                           std::span<double> out) const override;
  Sequence sample(const Context& x, Rng& rng) const override;
  double seq_logprob(const Context& x, std::span<const Token> y) const override;

 private:
  int vocab_;
  int length_;
  std::vector<Sequence> support_;  // sorted, distinct
};

// Sequence-level mixture weight*a + (1-weight)*b. Sampling flips one coin per
// sequence; next-token conditionals are the exact conditionals of the mixture.
class SequenceMixturePolicy final : public Policy {
 public:
  SequenceMixturePolicy(std::shared_ptr<const Policy> a, std::shared_ptr<const Policy> b,
                        double weight = 0.5);

  int vocab() const override { return a_->vocab(); }
  int length() const override { return a_->length(); }
  void next_token_logprobs(const Context& x, std::span<const Token> prefix,
                           std::span<double> out) const override;
  Sequence sample(const Context& x, Rng& rng) const override;
  double seq_logprob(const Context& x, std::span<const Token> y) const override;

 private:
  std::shared_ptr<const Policy> a_;
  std::shared_ptr<const Policy> b_;
  double weight_;
};

// Token-level mixture: every next-token conditional is weight*a + (1-weight)*b.
class TokenMixturePolicy final : public Policy {
 public:
  TokenMixturePolicy(std::shared_ptr<const Policy> a, std::shared_ptr<const Policy> b,
                     double weight = 0.5);

  int vocab() const override { return a_->vocab(); }
  int length() const override { return a_->length(); }
  void next_token_logprobs(const Context& x, std::span<const Token> prefix,
                           std::span<double> out) const override;

 private:
  std::shared_ptr<const Policy> a_;
  std::shared_ptr<const Policy> b_;
  double weight_;
};

// log(exp(a) + exp(b)) without overflow.
double log_add_exp(double a, double b);

}  // namespace arlab
