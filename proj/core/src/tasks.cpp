#include "arlab/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace arlab {

namespace {

Token argmax_lowest(std::span<const double> v) {
  Token best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[static_cast<std::size_t>(best)]) best = static_cast<Token>(i);
  }
  return best;
}

// s[y] = (W1 x)_y with W1 stored row-major k x d.
void matvec(std::span<const double> w1, int k, int d, std::span<const double> x,
            std::span<double> s) {
  for (int y = 0; y < k; ++y) {
    s[static_cast<std::size_t>(y)] =
        dot(w1.subspan(static_cast<std::size_t>(y) * static_cast<std::size_t>(d),
                       static_cast<std::size_t>(d)),
            x);
  }
}

class ExperimentBound final : public BoundContext {
 public:
  ExperimentBound(std::span<const double> w, const Context& x, int d, int k)
      : w_(w), x_(x.x), d_(d), k_(k), s_(static_cast<std::size_t>(k)),
        pending_(static_cast<std::size_t>(k), 0.0) {
    matvec(w, k, d, x_, s_);
  }

  void logits(std::span<const Token> prefix, std::span<double> out) const override {
    std::copy(s_.begin(), s_.end(), out.begin());
    if (prefix.empty()) return;
    const std::size_t base = w2_offset() + static_cast<std::size_t>(prefix.back());
    for (int y = 0; y < k_; ++y) {
      out[static_cast<std::size_t>(y)] += w_[base + static_cast<std::size_t>(y * k_)];
    }
  }

  void accumulate(std::span<const Token> prefix, std::span<const double> coeffs,
                  std::span<double> grad) override {
    for (std::size_t y = 0; y < pending_.size(); ++y) pending_[y] += coeffs[y];
    if (prefix.empty()) return;
    const std::size_t base = w2_offset() + static_cast<std::size_t>(prefix.back());
    for (int y = 0; y < k_; ++y) {
      grad[base + static_cast<std::size_t>(y * k_)] += coeffs[static_cast<std::size_t>(y)];
    }
  }

  // The W1 block of sum_i c_i (x) e_y is (sum_i c_i) x^T: applied once per context.
  void flush(std::span<double> grad) override {
    for (int y = 0; y < k_; ++y) {
      const double c = pending_[static_cast<std::size_t>(y)];
      if (c != 0.0) {
        axpy(c, x_,
             grad.subspan(static_cast<std::size_t>(y) * static_cast<std::size_t>(d_),
                          static_cast<std::size_t>(d_)));
      }
    }
    std::fill(pending_.begin(), pending_.end(), 0.0);
  }

 private:
  std::size_t w2_offset() const {
    return static_cast<std::size_t>(d_) * static_cast<std::size_t>(k_);
  }

  std::span<const double> w_;
  std::span<const double> x_;
  int d_;
  int k_;
  std::vector<double> s_;
  std::vector<double> pending_;
};

class ConstantBound final : public BoundContext {
 public:
  ConstantBound(std::span<const double> w, const Context& x, int d, int k)
      : x_(x.x), d_(d), k_(k), s_(static_cast<std::size_t>(k)),
        pending_(static_cast<std::size_t>(k), 0.0) {
    matvec(w, k, d, x_, s_);
  }

  void logits(std::span<const Token>, std::span<double> out) const override {
    std::copy(s_.begin(), s_.end(), out.begin());
  }

  void accumulate(std::span<const Token>, std::span<const double> coeffs,
                  std::span<double>) override {
    for (std::size_t y = 0; y < pending_.size(); ++y) pending_[y] += coeffs[y];
  }

  void flush(std::span<double> grad) override {
    for (int y = 0; y < k_; ++y) {
      const double c = pending_[static_cast<std::size_t>(y)];
      if (c != 0.0) {
        axpy(c, x_,
             grad.subspan(static_cast<std::size_t>(y) * static_cast<std::size_t>(d_),
                          static_cast<std::size_t>(d_)));
      }
    }
    std::fill(pending_.begin(), pending_.end(), 0.0);
  }

 private:
  std::span<const double> x_;
  int d_;
  int k_;
  std::vector<double> s_;
  std::vector<double> pending_;
};

class HardBound final : public BoundContext {
 public:
  HardBound(const HardInstanceFeatureMap& fm, std::span<const double> w, std::int64_t id)
      : fm_(fm), w_(w), id_(id) {}

  void logits(std::span<const Token> prefix, std::span<double> out) const override {
    const std::size_t base = fm_.index(id_, prefix.size(), 0);
    for (int y = 0; y < fm_.vocab(); ++y) {
      out[static_cast<std::size_t>(y)] = w_[base + static_cast<std::size_t>(y)];
    }
  }

  void accumulate(std::span<const Token> prefix, std::span<const double> coeffs,
                  std::span<double> grad) override {
    const std::size_t base = fm_.index(id_, prefix.size(), 0);
    for (int y = 0; y < fm_.vocab(); ++y) {
      grad[base + static_cast<std::size_t>(y)] += coeffs[static_cast<std::size_t>(y)];
    }
  }

 private:
  const HardInstanceFeatureMap& fm_;
  std::span<const double> w_;
  std::int64_t id_;
};

void check_context_dim(const Context& x, int d) {
  if (static_cast<int>(x.x.size()) != d) {
    throw std::invalid_argument("context dimension " + std::to_string(x.x.size()) +
                                " != d = " + std::to_string(d));
  }
}

// Base policy of the hard instance: dispatches on the context's block.
class BlockBasePolicy final : public Policy {
 public:
  BlockBasePolicy(std::vector<int> block, std::shared_ptr<const Policy> on_support,
                  std::shared_ptr<const Policy> uniform)
      : block_(std::move(block)), on_(std::move(on_support)), uniform_(std::move(uniform)) {}

  int vocab() const override { return on_->vocab(); }
  int length() const override { return on_->length(); }

  void next_token_logprobs(const Context& x, std::span<const Token> prefix,
                           std::span<double> out) const override {
    pick(x).next_token_logprobs(x, prefix, out);
  }
  Sequence sample(const Context& x, Rng& rng) const override { return pick(x).sample(x, rng); }
  double seq_logprob(const Context& x, std::span<const Token> y) const override {
    return pick(x).seq_logprob(x, y);
  }

 private:
  const Policy& pick(const Context& x) const {
    if (x.id < 0 || x.id >= static_cast<std::int64_t>(block_.size())) {
      throw std::invalid_argument("hard-instance context without a valid id");
    }
    return block_[static_cast<std::size_t>(x.id)] < 2 ? *on_ : *uniform_;
  }

  std::vector<int> block_;
  std::shared_ptr<const Policy> on_;
  std::shared_ptr<const Policy> uniform_;
};

}  // namespace

Teacher Teacher::draw(int d, int k, std::uint64_t seed) {
  if (d < 1 || k < 1) throw std::invalid_argument("teacher needs d, k >= 1");
  Teacher t;
  t.d = d;
  t.k = k;
  Rng rng = make_stream(seed, tags::teacher);
  t.w1.resize(static_cast<std::size_t>(k) * static_cast<std::size_t>(d));
  t.w2.resize(static_cast<std::size_t>(k) * static_cast<std::size_t>(k));
  for (double& v : t.w1) v = standard_normal(rng);
  for (double& v : t.w2) v = standard_normal(rng);
  return t;
}

Sequence label(const Teacher& teacher, std::span<const double> x, int length) {
  if (static_cast<int>(x.size()) != teacher.d) {
    throw std::invalid_argument("context dimension does not match the teacher");
  }
  std::vector<double> s(static_cast<std::size_t>(teacher.k));
  matvec(teacher.w1, teacher.k, teacher.d, x, s);
  std::vector<double> scores(s.size());
  Sequence y;
  y.reserve(static_cast<std::size_t>(length));
  y.push_back(argmax_lowest(s));
  for (int i = 1; i < length; ++i) {
    const auto prev = static_cast<std::size_t>(y.back());
    for (std::size_t c = 0; c < s.size(); ++c) {
      scores[c] = s[c] + teacher.w2[c * static_cast<std::size_t>(teacher.k) + prev];
    }
    y.push_back(argmax_lowest(scores));
  }
  return y;
}

ExperimentFeatureMap::ExperimentFeatureMap(int d, int k, int length, double norm_bound)
    : FeatureMap(static_cast<std::size_t>(d) * static_cast<std::size_t>(k) +
                     static_cast<std::size_t>(k) * static_cast<std::size_t>(k),
                 k, length, norm_bound),
      d_(d) {}

void ExperimentFeatureMap::feature(const Context& x, std::span<const Token> prefix, Token y,
                                   std::span<double> out) const {
  check_context_dim(x, d_);
  std::fill(out.begin(), out.end(), 0.0);
  const auto yy = static_cast<std::size_t>(y);
  const auto d = static_cast<std::size_t>(d_);
  const auto k = static_cast<std::size_t>(vocab());
  std::copy(x.x.begin(), x.x.end(), out.begin() + static_cast<std::ptrdiff_t>(yy * d));
  if (!prefix.empty()) out[d * k + yy * k + static_cast<std::size_t>(prefix.back())] = 1.0;
}

std::unique_ptr<BoundContext> ExperimentFeatureMap::bind(std::span<const double> w,
                                                         const Context& x) const {
  check_context_dim(x, d_);
  return std::make_unique<ExperimentBound>(w, x, d_, vocab());
}

ConstantFeatureMap::ConstantFeatureMap(int d, int k, int length, double norm_bound)
    : FeatureMap(static_cast<std::size_t>(d) * static_cast<std::size_t>(k), k, length,
                 norm_bound),
      d_(d) {}

void ConstantFeatureMap::feature(const Context& x, std::span<const Token>, Token y,
                                 std::span<double> out) const {
  check_context_dim(x, d_);
  std::fill(out.begin(), out.end(), 0.0);
  std::copy(x.x.begin(), x.x.end(),
            out.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(y) *
                                                      static_cast<std::size_t>(d_)));
}

std::unique_ptr<BoundContext> ConstantFeatureMap::bind(std::span<const double> w,
                                                       const Context& x) const {
  check_context_dim(x, d_);
  return std::make_unique<ConstantBound>(w, x, d_, vocab());
}

HardInstanceFeatureMap::HardInstanceFeatureMap(int contexts, int k, int length, std::size_t dim)
    : FeatureMap(std::max(dim, static_cast<std::size_t>(contexts) *
                                   static_cast<std::size_t>(length) * static_cast<std::size_t>(k)),
                 k, length, 1.0),
      contexts_(contexts) {
  const std::size_t needed =
      static_cast<std::size_t>(contexts) * static_cast<std::size_t>(length) *
      static_cast<std::size_t>(k);
  if (dim != 0 && dim < needed) {
    throw std::invalid_argument("hard instance needs D >= I*N*k = " + std::to_string(needed) +
                                ", got " + std::to_string(dim));
  }
}

std::size_t HardInstanceFeatureMap::index(std::int64_t id, std::size_t pos, Token y) const {
  if (id < 0 || id >= contexts_) throw std::invalid_argument("context id outside the instance");
  return (static_cast<std::size_t>(id) * static_cast<std::size_t>(length()) + pos) *
             static_cast<std::size_t>(vocab()) +
         static_cast<std::size_t>(y);
}

void HardInstanceFeatureMap::feature(const Context& x, std::span<const Token> prefix, Token y,
                                     std::span<double> out) const {
  std::fill(out.begin(), out.end(), 0.0);
  out[index(x.id, prefix.size(), y)] = 1.0;
}

std::unique_ptr<BoundContext> HardInstanceFeatureMap::bind(std::span<const double> w,
                                                           const Context& x) const {
  index(x.id, 0, 0);  // validates the id
  return std::make_unique<HardBound>(*this, w, x.id);
}

Context sample_mixture_context(const MixtureTaskConfig& cfg, Rng& rng) {
  const auto d = static_cast<std::size_t>(cfg.d);
  const auto j = static_cast<std::size_t>(uniform_index(rng, cfg.d));
  const double sd = cfg.noise_std_scale / std::sqrt(static_cast<double>(cfg.d));
  std::vector<double> noise(d);
  for (double& v : noise) v = sd * standard_normal(rng);
  const double nn = norm2(noise);
  if (nn > cfg.noise_norm_clip) {
    for (double& v : noise) v *= cfg.noise_norm_clip / nn;
  }
  Context c;
  c.id = static_cast<std::int64_t>(j);
  c.x = std::move(noise);
  c.x[j] += 1.0;
  const double scale = std::sqrt(static_cast<double>(cfg.d)) / norm2(c.x);
  for (double& v : c.x) v *= scale;
  return c;
}

Context sample_hypercube_context(int d, Rng& rng) {
  if (d < 1) throw std::invalid_argument("hypercube needs d >= 1");
  Context c;
  c.x.resize(static_cast<std::size_t>(d));
  for (double& v : c.x) v = (rng() >> 63) != 0 ? 1.0 : -1.0;
  return c;
}

Context sample_sphere_context(int d, Rng& rng) {
  Context c;
  c.x.resize(static_cast<std::size_t>(d));
  double n = 0.0;
  while (n == 0.0) {
    for (double& v : c.x) v = standard_normal(rng);
    n = norm2(c.x);
  }
  for (double& v : c.x) v /= n;
  return c;
}

namespace {

Separator teacher_direction(const Teacher& t, std::size_t dim) {
  Weights w(dim, 0.0);
  std::copy(t.w1.begin(), t.w1.end(), w.begin());
  if (w.size() >= t.w1.size() + t.w2.size()) {
    std::copy(t.w2.begin(), t.w2.end(), w.begin() + static_cast<std::ptrdiff_t>(t.w1.size()));
  }
  const double n = norm2(w);
  for (double& v : w) v /= n;
  return Separator{std::move(w), std::nullopt};
}

}  // namespace

Task make_mixture_task(const MixtureTaskConfig& cfg) {
  if (cfg.d < 1 || cfg.k < 1 || cfg.length < 1) throw std::invalid_argument("bad mixture shape");
  return make_mixture_task(
      cfg, std::make_shared<const Teacher>(Teacher::draw(cfg.d, cfg.k, cfg.teacher_seed)));
}

Task make_mixture_task(const MixtureTaskConfig& cfg, std::shared_ptr<const Teacher> teacher) {
  if (cfg.d < 1 || cfg.k < 1 || cfg.length < 1) throw std::invalid_argument("bad mixture shape");
  if (!teacher || teacher->d != cfg.d || teacher->k != cfg.k) {
    throw std::invalid_argument("teacher shape does not match the task");
  }
  Task t;
  t.kind = "mixture";
  t.d = cfg.d;
  t.k = cfg.k;
  t.length = cfg.length;
  t.sample = [cfg](Rng& rng) { return sample_mixture_context(cfg, rng); };
  t.label = [teacher, n = cfg.length](const Context& x) { return label(*teacher, x.x, n); };
  t.features = std::make_shared<ExperimentFeatureMap>(cfg.d, cfg.k, cfg.length,
                                                      std::sqrt(cfg.d + 1.0));
  t.separator = teacher_direction(*teacher, t.features->dim());
  for (int j = 0; j < cfg.d; ++j) {
    Context c;
    c.id = j;
    c.x.assign(static_cast<std::size_t>(cfg.d), 0.0);
    c.x[static_cast<std::size_t>(j)] = std::sqrt(static_cast<double>(cfg.d));
    t.centers.push_back(std::move(c));
  }
  t.teacher = teacher;
  return t;
}

Task make_hypercube_task(int d, int k, int length, std::uint64_t teacher_seed) {
  if (d < 1 || k < 1 || length < 1) throw std::invalid_argument("bad hypercube shape");
  return make_hypercube_task(std::make_shared<const Teacher>(Teacher::draw(d, k, teacher_seed)),
                             length);
}

Task make_hypercube_task(std::shared_ptr<const Teacher> teacher, int length) {
  if (!teacher || teacher->d < 1 || teacher->k < 1 || length < 1) {
    throw std::invalid_argument("bad hypercube shape");
  }
  const int d = teacher->d;
  const int k = teacher->k;
  Task t;
  t.kind = "hypercube";
  t.d = d;
  t.k = k;
  t.length = length;
  t.sample = [d](Rng& rng) { return sample_hypercube_context(d, rng); };
  t.label = [teacher, length](const Context& x) { return label(*teacher, x.x, length); };
  t.features = std::make_shared<ExperimentFeatureMap>(d, k, length, std::sqrt(d + 1.0));
  t.separator = teacher_direction(*teacher, t.features->dim());
  t.teacher = teacher;
  return t;
}

Task constant_feature_task(int d, int k, int length, Rng& rng) {
  if (d < 1 || k < 1 || length < 1) throw std::invalid_argument("bad task shape");
  Teacher raw;
  raw.d = d;
  raw.k = k;
  raw.w1.resize(static_cast<std::size_t>(k) * static_cast<std::size_t>(d));
  for (double& v : raw.w1) v = standard_normal(rng);
  raw.w2.assign(static_cast<std::size_t>(k) * static_cast<std::size_t>(k), 0.0);
  auto teacher = std::make_shared<const Teacher>(std::move(raw));
  Task t;
  t.kind = "constant";
  t.d = d;
  t.k = k;
  t.length = length;
  t.sample = [d](Rng& r) { return sample_sphere_context(d, r); };
  // W2 = 0 collapses the recurrence to a constant label.
  t.label = [teacher, length](const Context& x) { return label(*teacher, x.x, length); };
  t.features = std::make_shared<ConstantFeatureMap>(d, k, length, 1.0);
  t.separator = teacher_direction(*teacher, t.features->dim());
  t.teacher = teacher;
  return t;
}

double measure_margin(const Task& task, std::span<const double> w_star, std::size_t samples,
                      Rng& rng) {
  if (std::abs(norm2(w_star) - 1.0) > 1e-9) throw std::invalid_argument("w_star must be unit norm");
  const FeatureMap& fm = *task.features;
  if (w_star.size() != fm.dim()) throw std::invalid_argument("w_star dimension != D");
  std::vector<double> phi(fm.dim());
  std::vector<double> scores(static_cast<std::size_t>(fm.vocab()));
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < samples; ++s) {
    const Context x = task.sample(rng);
    const Sequence y = task.label(x);
    const std::span<const Token> ys{y};
    for (std::size_t i = 0; i < y.size(); ++i) {
      for (int c = 0; c < fm.vocab(); ++c) {
        fm.feature(x, ys.first(i), c, phi);
        scores[static_cast<std::size_t>(c)] = dot(w_star, phi);
      }
      const double truth = scores[static_cast<std::size_t>(y[i])];
      for (int c = 0; c < fm.vocab(); ++c) {
        if (c != y[i]) best = std::min(best, truth - scores[static_cast<std::size_t>(c)]);
      }
    }
  }
  return best;
}

FeatureNormAudit audit_feature_norms(const Task& task, std::size_t samples, Rng& rng) {
  const FeatureMap& fm = *task.features;
  std::vector<double> phi(fm.dim());
  FeatureNormAudit audit;
  for (std::size_t s = 0; s < samples; ++s) {
    const Context x = task.sample(rng);
    const Sequence y = task.label(x);
    const std::span<const Token> ys{y};
    for (std::size_t i = 0; i < y.size(); ++i) {
      for (int c = 0; c < fm.vocab(); ++c) {
        fm.feature(x, ys.first(i), c, phi);
        const double n = norm2(phi);
        audit.max_all = std::max(audit.max_all, n);
        if (c == y[i]) audit.max_on_path = std::max(audit.max_on_path, n);
      }
    }
  }
  return audit;
}

int HardInstanceConfig::contexts() const {
  const int i = static_cast<int>(std::floor(1.0 / (gamma * gamma)));
  return std::max(4, (i + 3) / 4 * 4);
}

std::int64_t HardInstanceConfig::m() const {
  return static_cast<std::int64_t>(std::floor(1.0 / alpha));
}

std::int64_t sequence_count(int k, int length) {
  std::int64_t n = 1;
  for (int i = 0; i < length; ++i) {
    if (n > std::numeric_limits<std::int64_t>::max() / k) {
      return std::numeric_limits<std::int64_t>::max();
    }
    n *= k;
  }
  return n;
}

void HardInstanceConfig::validate() const {
  if (k < 2 || length < 1) throw std::invalid_argument("hard instance needs k >= 2, N >= 1");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw std::invalid_argument("gamma must be in (0, 1]");
  if (!(eps_star >= 0.0 && eps_star <= 1.0)) throw std::invalid_argument("eps* must be in [0, 1]");
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("delta must be in (0, 1)");
  const double floor_alpha = std::pow(static_cast<double>(k), -static_cast<double>(length));
  if (!(alpha >= floor_alpha * (1.0 - 1e-12) && alpha <= 0.5)) {
    throw std::invalid_argument("alpha must be in [k^-N, 0.5]");
  }
  if (m() > sequence_count(k, length)) throw std::invalid_argument("m exceeds k^N");
}

Sequence nth_sequence(std::int64_t idx, int k, int length) {
  Sequence y(static_cast<std::size_t>(length));
  for (int i = length - 1; i >= 0; --i) {
    y[static_cast<std::size_t>(i)] = static_cast<Token>(idx % k);
    idx /= k;
  }
  return y;
}

HardInstance build_hard_instance(const HardInstanceConfig& cfg, Rng& rng) {
  cfg.validate();
  const int n_ctx = cfg.contexts();
  const std::int64_t m = cfg.m();
  const std::int64_t total = sequence_count(cfg.k, cfg.length);
  auto fm = std::make_shared<HardInstanceFeatureMap>(n_ctx, cfg.k, cfg.length, cfg.dim);

  HardInstance hi;
  for (std::int64_t i = 0; i < m; ++i) hi.y_m.push_back(nth_sequence(i, cfg.k, cfg.length));

  const double es = cfg.eps_star;
  const double block_prob[4] = {(1.0 - es) * (1.0 - cfg.delta), (1.0 - es) * cfg.delta,
                                es * (1.0 - cfg.delta), es * cfg.delta};
  const int per_block = n_ctx / 4;

  FiniteSupport support;
  std::vector<Sequence> labels;
  for (int i = 0; i < n_ctx; ++i) {
    const int b = i / per_block;
    hi.block.push_back(b);
    Context c;
    c.id = i;
    c.x.assign(static_cast<std::size_t>(n_ctx), 0.0);
    c.x[static_cast<std::size_t>(i)] = 1.0;
    support.contexts.push_back(c);
    support.prob.push_back(block_prob[b] / per_block);
    labels.push_back(b < 2 ? hi.y_m[static_cast<std::size_t>(uniform_index(rng, m))]
                           : nth_sequence(uniform_index(rng, total), cfg.k, cfg.length));
  }

  // Unit separator over the labeled paths; every comparison has gap 1/sqrt(I N).
  Weights w_star(fm->dim(), 0.0);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n_ctx) * cfg.length);
  for (int i = 0; i < n_ctx; ++i) {
    for (int j = 0; j < cfg.length; ++j) {
      w_star[fm->index(i, static_cast<std::size_t>(j),
                       labels[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)])] = scale;
    }
  }

  Task& t = hi.task;
  t.kind = "hard";
  t.d = n_ctx;
  t.k = cfg.k;
  t.length = cfg.length;
  t.features = fm;
  t.separator = Separator{std::move(w_star), scale};
  auto shared_labels = std::make_shared<const std::vector<Sequence>>(std::move(labels));
  t.label = [shared_labels](const Context& x) {
    if (x.id < 0 || x.id >= static_cast<std::int64_t>(shared_labels->size())) {
      throw std::invalid_argument("hard-instance context without a valid id");
    }
    return (*shared_labels)[static_cast<std::size_t>(x.id)];
  };
  auto shared_support = std::make_shared<const FiniteSupport>(support);
  t.sample = [shared_support, per_block, bp = std::vector<double>(block_prob, block_prob + 4)](
                 Rng& r) {
    const double u = uniform01(r);
    int b = 0;
    double cum = bp[0];
    while (b < 3 && u >= cum) cum += bp[static_cast<std::size_t>(++b)];
    const auto i = static_cast<std::size_t>(b * per_block + uniform_index(r, per_block));
    return shared_support->contexts[i];
  };
  t.support = std::move(support);

  hi.base = std::make_shared<BlockBasePolicy>(
      hi.block, std::make_shared<SubsetUniformPolicy>(cfg.k, cfg.length, hi.y_m),
      std::make_shared<UniformPolicy>(cfg.k, cfg.length));
  return hi;
}

}  // namespace arlab
