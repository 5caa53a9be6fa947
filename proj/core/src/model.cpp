#include "arlab/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace arlab {

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double a) { return std::isfinite(a); });
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> v) { return std::sqrt(dot(v, v)); }

void axpy(double a, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

namespace {

class DenseBoundContext final : public BoundContext {
 public:
  DenseBoundContext(const FeatureMap& fm, std::span<const double> w, const Context& x)
      : fm_(fm), w_(w), x_(x), scratch_(fm.dim()) {}

  void logits(std::span<const Token> prefix, std::span<double> out) const override {
    for (int y = 0; y < fm_.vocab(); ++y) {
      fm_.feature(x_, prefix, y, scratch_);
      out[static_cast<std::size_t>(y)] = dot(w_, scratch_);
    }
  }

  void accumulate(std::span<const Token> prefix, std::span<const double> coeffs,
                  std::span<double> grad) override {
    for (int y = 0; y < fm_.vocab(); ++y) {
      const double c = coeffs[static_cast<std::size_t>(y)];
      if (c == 0.0) continue;
      fm_.feature(x_, prefix, y, scratch_);
      axpy(c, scratch_, grad);
    }
  }

 private:
  const FeatureMap& fm_;
  std::span<const double> w_;
  const Context& x_;
  mutable std::vector<double> scratch_;
};

void check_token(const FeatureMap& fm, Token y) {
  if (y < 0 || y >= fm.vocab()) {
    throw std::invalid_argument("token " + std::to_string(y) + " outside vocabulary of size " +
                                std::to_string(fm.vocab()));
  }
}

void check_sequence(const FeatureMap& fm, std::span<const Token> y) {
  if (static_cast<int>(y.size()) != fm.length()) {
    throw std::invalid_argument("sequence length " + std::to_string(y.size()) + " != N = " +
                                std::to_string(fm.length()));
  }
  for (Token t : y) check_token(fm, t);
}

}  // namespace

FeatureMap::FeatureMap(std::size_t dim, int vocab, int length, double norm_bound)
    : dim_(dim), vocab_(vocab), length_(length), norm_bound_(norm_bound) {
  if (dim == 0 || vocab < 1 || length < 1) {
    throw std::invalid_argument("feature map needs D >= 1, k >= 1, N >= 1");
  }
}

std::unique_ptr<BoundContext> FeatureMap::bind(std::span<const double> w, const Context& x) const {
  return std::make_unique<DenseBoundContext>(*this, w, x);
}

DenseFeatureMap::DenseFeatureMap(std::size_t dim, int vocab, int length, double norm_bound,
                                 Evaluator eval)
    : FeatureMap(dim, vocab, length, norm_bound), eval_(std::move(eval)) {}

void DenseFeatureMap::feature(const Context& x, std::span<const Token> prefix, Token y,
                              std::span<double> out) const {
  std::fill(out.begin(), out.end(), 0.0);
  eval_(x, prefix, y, out);
}

double log_softmax(std::span<const double> logits, std::span<double> out) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  double s = 0.0;
  for (double l : logits) s += std::exp(l - mx);
  const double log_z = mx + std::log(s);
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] - log_z;
  return log_z;
}

TokenDistribution next_token_distribution(std::span<const double> w, const FeatureMap& fm,
                                          const Context& x, std::span<const Token> prefix) {
  if (static_cast<int>(prefix.size()) >= fm.length()) {
    throw std::invalid_argument("prefix length must be < N");
  }
  const auto bound = fm.bind(w, x);
  std::vector<double> logits(static_cast<std::size_t>(fm.vocab()));
  bound->logits(prefix, logits);
  TokenDistribution dist{std::vector<double>(logits.size())};
  log_softmax(logits, dist.prob);
  for (double& p : dist.prob) p = std::exp(p);
  return dist;
}

double token_logprob(std::span<const double> w, const FeatureMap& fm, const Context& x,
                     std::span<const Token> prefix, Token y) {
  check_token(fm, y);
  if (static_cast<int>(prefix.size()) >= fm.length()) {
    throw std::invalid_argument("prefix length must be < N");
  }
  const auto bound = fm.bind(w, x);
  std::vector<double> logits(static_cast<std::size_t>(fm.vocab()));
  bound->logits(prefix, logits);
  log_softmax(logits, logits);
  return logits[static_cast<std::size_t>(y)];
}

double seq_logprob(std::span<const double> w, const FeatureMap& fm, const Context& x,
                   std::span<const Token> y) {
  check_sequence(fm, y);
  const auto bound = fm.bind(w, x);
  return score_rollout(*bound, fm.vocab(), y).seq_logprob();
}

double partial_seq_logprob(std::span<const double> w, const FeatureMap& fm, const Context& x,
                           std::span<const Token> y, std::size_t i) {
  if (i < 1 || static_cast<int>(i) > fm.length()) {
    throw std::invalid_argument("position " + std::to_string(i) + " outside [1, N]");
  }
  if (y.size() < i) throw std::invalid_argument("sequence shorter than requested prefix");
  for (std::size_t j = 0; j < i; ++j) check_token(fm, y[j]);
  const auto bound = fm.bind(w, x);
  return score_rollout(*bound, fm.vocab(), y.first(i)).seq_logprob();
}

Sequence sample_sequence(std::span<const double> w, const FeatureMap& fm, const Context& x,
                         Rng& rng) {
  const auto bound = fm.bind(w, x);
  return sample_rollout(*bound, fm.vocab(), fm.length(), rng).tokens;
}

std::vector<double> grad_seq_loglik(std::span<const double> w, const FeatureMap& fm,
                                    const Context& x, std::span<const Token> y) {
  check_sequence(fm, y);
  const auto bound = fm.bind(w, x);
  const Rollout r = score_rollout(*bound, fm.vocab(), y);
  std::vector<double> grad(fm.dim(), 0.0);
  const std::vector<double> ones(y.size(), 1.0);
  accumulate_policy_gradient(*bound, r, ones, grad);
  return grad;
}

double Rollout::seq_logprob() const { return prefix_logprob(tokens.size()); }

double Rollout::prefix_logprob(std::size_t i) const {
  double s = 0.0;
  for (std::size_t j = 0; j < i; ++j) s += token_logprob(j);
  return s;
}

Token sample_token(std::span<const double> log_probs, Rng& rng) {
  const double u = uniform01(rng);
  double cum = 0.0;
  Token last_positive = 0;
  for (std::size_t y = 0; y < log_probs.size(); ++y) {
    const double p = std::exp(log_probs[y]);
    if (p > 0.0) last_positive = static_cast<Token>(y);
    cum += p;
    if (u < cum) return static_cast<Token>(y);
  }
  // Rounding left u above the accumulated mass.
  return last_positive;
}

Rollout sample_rollout(const BoundContext& bound, int vocab, int length, Rng& rng) {
  Rollout r;
  r.vocab = vocab;
  r.tokens.reserve(static_cast<std::size_t>(length));
  r.log_probs.resize(static_cast<std::size_t>(vocab) * static_cast<std::size_t>(length));
  std::vector<double> logits(static_cast<std::size_t>(vocab));
  for (int i = 0; i < length; ++i) {
    bound.logits(r.tokens, logits);
    auto row = std::span<double>{r.log_probs}.subspan(static_cast<std::size_t>(i * vocab),
                                                      static_cast<std::size_t>(vocab));
    log_softmax(logits, row);
    r.tokens.push_back(sample_token(row, rng));
  }
  return r;
}

Rollout score_rollout(const BoundContext& bound, int vocab, std::span<const Token> y) {
  Rollout r;
  r.vocab = vocab;
  r.tokens.assign(y.begin(), y.end());
  r.log_probs.resize(static_cast<std::size_t>(vocab) * y.size());
  std::vector<double> logits(static_cast<std::size_t>(vocab));
  for (std::size_t i = 0; i < y.size(); ++i) {
    bound.logits(y.first(i), logits);
    log_softmax(logits, std::span<double>{r.log_probs}.subspan(i * static_cast<std::size_t>(vocab),
                                                               static_cast<std::size_t>(vocab)));
  }
  return r;
}

void accumulate_policy_gradient(BoundContext& bound, const Rollout& rollout,
                                std::span<const double> weights, std::span<double> grad) {
  std::vector<double> coeffs(static_cast<std::size_t>(rollout.vocab));
  const std::span<const Token> tokens{rollout.tokens};
  for (std::size_t i = 0; i < rollout.tokens.size(); ++i) {
    const double a = weights[i];
    if (a == 0.0) continue;
    const auto row = rollout.row(i);
    for (std::size_t y = 0; y < coeffs.size(); ++y) coeffs[y] = -a * std::exp(row[y]);
    coeffs[static_cast<std::size_t>(rollout.tokens[i])] += a;
    bound.accumulate(tokens.first(i), coeffs, grad);
  }
  bound.flush(grad);
}

}  // namespace arlab
