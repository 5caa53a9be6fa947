#include "arlab/policy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace arlab {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

double log_add_exp(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double mx = std::max(a, b);
  return mx + std::log1p(std::exp(-std::abs(a - b)));
}

Sequence Policy::sample(const Context& x, Rng& rng) const {
  Sequence y;
  y.reserve(static_cast<std::size_t>(length()));
  std::vector<double> row(static_cast<std::size_t>(vocab()));
  for (int i = 0; i < length(); ++i) {
    next_token_logprobs(x, y, row);
    y.push_back(sample_token(row, rng));
  }
  return y;
}

std::vector<double> Policy::token_logprobs(const Context& x, std::span<const Token> y) const {
  std::vector<double> out(y.size());
  std::vector<double> row(static_cast<std::size_t>(vocab()));
  for (std::size_t i = 0; i < y.size(); ++i) {
    next_token_logprobs(x, y.first(i), row);
    out[i] = row[static_cast<std::size_t>(y[i])];
  }
  return out;
}

double Policy::seq_logprob(const Context& x, std::span<const Token> y) const {
  double s = 0.0;
  for (double v : token_logprobs(x, y)) s += v;
  return s;
}

LinearPolicy::LinearPolicy(std::span<const double> w, const FeatureMap& fm) : w_(w), fm_(&fm) {
  if (w.size() != fm.dim()) throw std::invalid_argument("weight dimension != feature dimension");
}

void LinearPolicy::next_token_logprobs(const Context& x, std::span<const Token> prefix,
                                       std::span<double> out) const {
  const auto bound = fm_->bind(w_, x);
  bound->logits(prefix, out);
  log_softmax(out, out);
}

Sequence LinearPolicy::sample(const Context& x, Rng& rng) const {
  return sample_sequence(w_, *fm_, x, rng);
}

double LinearPolicy::seq_logprob(const Context& x, std::span<const Token> y) const {
  const auto bound = fm_->bind(w_, x);
  return score_rollout(*bound, fm_->vocab(), y).seq_logprob();
}

std::vector<double> LinearPolicy::token_logprobs(const Context& x,
                                                 std::span<const Token> y) const {
  const auto bound = fm_->bind(w_, x);
  const Rollout r = score_rollout(*bound, fm_->vocab(), y);
  std::vector<double> out(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) out[i] = r.token_logprob(i);
  return out;
}

UniformPolicy::UniformPolicy(int vocab, int length) : vocab_(vocab), length_(length) {
  if (vocab < 1 || length < 1) throw std::invalid_argument("uniform policy needs k, N >= 1");
}

void UniformPolicy::next_token_logprobs(const Context&, std::span<const Token>,
                                        std::span<double> out) const {
  std::fill(out.begin(), out.end(), -std::log(static_cast<double>(vocab_)));
}

Sequence UniformPolicy::sample(const Context&, Rng& rng) const {
  Sequence y(static_cast<std::size_t>(length_));
  for (Token& t : y) t = static_cast<Token>(uniform_index(rng, vocab_));
  return y;
}

double UniformPolicy::seq_logprob(const Context&, std::span<const Token> y) const {
  return -static_cast<double>(y.size()) * std::log(static_cast<double>(vocab_));
}

SubsetUniformPolicy::SubsetUniformPolicy(int vocab, int length, std::vector<Sequence> support)
    : vocab_(vocab), length_(length), support_(std::move(support)) {
  if (support_.empty()) throw std::invalid_argument("subset policy needs a nonempty support");
  for (const auto& s : support_) {
    if (static_cast<int>(s.size()) != length_) {
      throw std::invalid_argument("support sequence has wrong length");
    }
  }
  std::sort(support_.begin(), support_.end());
  support_.erase(std::unique(support_.begin(), support_.end()), support_.end());
}

void SubsetUniformPolicy::next_token_logprobs(const Context&, std::span<const Token> prefix,
                                              std::span<double> out) const {
  std::vector<double> counts(static_cast<std::size_t>(vocab_), 0.0);
  double total = 0.0;
  for (const auto& s : support_) {
    if (std::equal(prefix.begin(), prefix.end(), s.begin())) {
      counts[static_cast<std::size_t>(s[prefix.size()])] += 1.0;
      total += 1.0;
    }
  }
  if (total == 0.0) {
    std::fill(out.begin(), out.end(), -std::log(static_cast<double>(vocab_)));
    return;
  }
  for (std::size_t y = 0; y < out.size(); ++y) {
    out[y] = counts[y] > 0.0 ? std::log(counts[y] / total) : kNegInf;
  }
}

Sequence SubsetUniformPolicy::sample(const Context&, Rng& rng) const {
  return support_[static_cast<std::size_t>(
      uniform_index(rng, static_cast<std::int64_t>(support_.size())))];
}

double SubsetUniformPolicy::seq_logprob(const Context&, std::span<const Token> y) const {
  const bool member = std::binary_search(support_.begin(), support_.end(), y,
                                         [](const auto& a, const auto& b) {
                                           return std::lexicographical_compare(
                                               a.begin(), a.end(), b.begin(), b.end());
                                         });
  return member ? -std::log(static_cast<double>(support_.size())) : kNegInf;
}

SequenceMixturePolicy::SequenceMixturePolicy(std::shared_ptr<const Policy> a,
                                             std::shared_ptr<const Policy> b, double weight)
    : a_(std::move(a)), b_(std::move(b)), weight_(weight) {
  if (a_->vocab() != b_->vocab() || a_->length() != b_->length()) {
    throw std::invalid_argument("mixture components disagree on (k, N)");
  }
  if (!(weight > 0.0 && weight < 1.0)) throw std::invalid_argument("mixture weight in (0, 1)");
}

void SequenceMixturePolicy::next_token_logprobs(const Context& x, std::span<const Token> prefix,
                                                std::span<double> out) const {
  // Posterior component weights given the prefix, then mix the conditionals.
  double log_wa = std::log(weight_);
  double log_wb = std::log1p(-weight_);
  if (!prefix.empty()) {
    const auto la = a_->token_logprobs(x, prefix);
    const auto lb = b_->token_logprobs(x, prefix);
    for (double v : la) log_wa += v;
    for (double v : lb) log_wb += v;
  }
  const double log_norm = log_add_exp(log_wa, log_wb);
  std::vector<double> ra(out.size());
  std::vector<double> rb(out.size());
  a_->next_token_logprobs(x, prefix, ra);
  b_->next_token_logprobs(x, prefix, rb);
  for (std::size_t y = 0; y < out.size(); ++y) {
    out[y] = log_add_exp(log_wa + ra[y], log_wb + rb[y]) - log_norm;
  }
}

Sequence SequenceMixturePolicy::sample(const Context& x, Rng& rng) const {
  return uniform01(rng) < weight_ ? a_->sample(x, rng) : b_->sample(x, rng);
}

double SequenceMixturePolicy::seq_logprob(const Context& x, std::span<const Token> y) const {
  return log_add_exp(std::log(weight_) + a_->seq_logprob(x, y),
                     std::log1p(-weight_) + b_->seq_logprob(x, y));
}

TokenMixturePolicy::TokenMixturePolicy(std::shared_ptr<const Policy> a,
                                       std::shared_ptr<const Policy> b, double weight)
    : a_(std::move(a)), b_(std::move(b)), weight_(weight) {
  if (a_->vocab() != b_->vocab() || a_->length() != b_->length()) {
    throw std::invalid_argument("mixture components disagree on (k, N)");
  }
  if (!(weight > 0.0 && weight < 1.0)) throw std::invalid_argument("mixture weight in (0, 1)");
}

void TokenMixturePolicy::next_token_logprobs(const Context& x, std::span<const Token> prefix,
                                             std::span<double> out) const {
  std::vector<double> ra(out.size());
  std::vector<double> rb(out.size());
  a_->next_token_logprobs(x, prefix, ra);
  b_->next_token_logprobs(x, prefix, rb);
  const double lwa = std::log(weight_);
  const double lwb = std::log1p(-weight_);
  for (std::size_t y = 0; y < out.size(); ++y) out[y] = log_add_exp(lwa + ra[y], lwb + rb[y]);
}

}  // namespace arlab
