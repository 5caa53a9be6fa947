#include "arlab/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "arlab/tasks.hpp"

namespace arlab {

namespace {

// log-sum-exp of the dense logits at one position; fills logits.
double position_lse(std::span<const double> w, const FeatureMap& fm, const Context& x,
                    std::span<const Token> prefix, std::vector<double>& phi,
                    std::vector<double>& logits) {
  for (int c = 0; c < fm.vocab(); ++c) {
    fm.feature(x, prefix, c, phi);
    double s = 0.0;
    for (std::size_t j = 0; j < phi.size(); ++j) s += w[j] * phi[j];
    logits[static_cast<std::size_t>(c)] = s;
  }
  const double mx = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (double l : logits) z += std::exp(l - mx);
  return mx + std::log(z);
}

// Token probabilities and dense features at one position.
void position_moments(std::span<const double> w, const FeatureMap& fm, const Context& x,
                      std::span<const Token> prefix, std::vector<std::vector<double>>& feats,
                      std::vector<double>& prob) {
  const auto k = static_cast<std::size_t>(fm.vocab());
  feats.assign(k, std::vector<double>(fm.dim()));
  prob.assign(k, 0.0);
  for (std::size_t c = 0; c < k; ++c) {
    fm.feature(x, prefix, static_cast<Token>(c), feats[c]);
    prob[c] = dot(w, feats[c]);
  }
  const double mx = *std::max_element(prob.begin(), prob.end());
  double z = 0.0;
  for (double& p : prob) {
    p = std::exp(p - mx);
    z += p;
  }
  for (double& p : prob) p /= z;
}

}  // namespace

double naive_seq_logprob(std::span<const double> w, const FeatureMap& fm, const Context& x,
                         std::span<const Token> y) {
  std::vector<double> phi(fm.dim());
  std::vector<double> logits(static_cast<std::size_t>(fm.vocab()));
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double lse = position_lse(w, fm, x, y.first(i), phi, logits);
    s += logits[static_cast<std::size_t>(y[i])] - lse;
  }
  return s;
}

SeqTable enumerate_seq_distribution(std::span<const double> w, const FeatureMap& fm,
                                    const Context& x) {
  const std::int64_t total = sequence_count(fm.vocab(), fm.length());
  if (total > (std::int64_t{1} << 20)) {
    throw ResourceLimitError(fmt::format("k^N = {}^{} exceeds 2^20", fm.vocab(), fm.length()));
  }
  SeqTable t;
  t.seqs.reserve(static_cast<std::size_t>(total));
  t.prob.reserve(static_cast<std::size_t>(total));
  for (std::int64_t i = 0; i < total; ++i) {
    Sequence y = nth_sequence(i, fm.vocab(), fm.length());
    t.prob.push_back(std::exp(naive_seq_logprob(w, fm, x, y)));
    t.seqs.push_back(std::move(y));
  }
  return t;
}

std::vector<double> finite_diff_gradient(std::span<const double> w, const FeatureMap& fm,
                                         const Context& x, std::span<const Token> y, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("finite-difference step must be > 0");
  std::vector<double> wp(w.begin(), w.end());
  std::vector<double> g(w.size());
  for (std::size_t j = 0; j < w.size(); ++j) {
    wp[j] = w[j] + h;
    const double up = naive_seq_logprob(wp, fm, x, y);
    wp[j] = w[j] - h;
    const double down = naive_seq_logprob(wp, fm, x, y);
    wp[j] = w[j];
    g[j] = (up - down) / (2.0 * h);
  }
  return g;
}

double relative_error(std::span<const double> analytic, std::span<const double> reference) {
  double diff = 0.0;
  double na = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    diff += (analytic[i] - reference[i]) * (analytic[i] - reference[i]);
    na += analytic[i] * analytic[i];
  }
  return std::sqrt(diff) / std::max(std::sqrt(na), 1e-8);
}

std::vector<double> nll_hessian(std::span<const double> w, const FeatureMap& fm, const Context& x,
                                std::span<const Token> y) {
  const std::size_t d = fm.dim();
  std::vector<double> h(d * d, 0.0);
  std::vector<std::vector<double>> feats;
  std::vector<double> prob;
  std::vector<double> mean(d);
  for (std::size_t i = 0; i < y.size(); ++i) {
    position_moments(w, fm, x, y.first(i), feats, prob);
    std::fill(mean.begin(), mean.end(), 0.0);
    for (std::size_t c = 0; c < prob.size(); ++c) axpy(prob[c], feats[c], mean);
    for (std::size_t c = 0; c < prob.size(); ++c) {
      for (std::size_t a = 0; a < d; ++a) {
        const double fa = feats[c][a] - mean[a];
        if (fa == 0.0) continue;
        for (std::size_t b = 0; b < d; ++b) h[a * d + b] += prob[c] * fa * (feats[c][b] - mean[b]);
      }
    }
  }
  return h;
}

double power_iteration_norm(std::span<const double> matrix, std::size_t dim, Rng& rng,
                            int iterations, double tol) {
  std::vector<double> v(dim);
  for (double& a : v) a = standard_normal(rng);
  double n = norm2(v);
  for (double& a : v) a /= n;
  std::vector<double> mv(dim);
  double est = 0.0;
  for (int it = 0; it < iterations; ++it) {
    for (std::size_t a = 0; a < dim; ++a) mv[a] = dot(matrix.subspan(a * dim, dim), v);
    n = norm2(mv);
    if (n == 0.0) return 0.0;
    const bool done = std::abs(n - est) <= tol * std::max(1.0, n);
    est = n;
    for (std::size_t a = 0; a < dim; ++a) v[a] = mv[a] / n;
    if (done) break;
  }
  return est;
}

double prob_hessian_norm(std::span<const double> w, const FeatureMap& fm, const Context& x,
                         std::span<const Token> y, Rng& rng, double h) {
  const std::size_t d = fm.dim();
  auto grad_p = [&](std::span<const double> at) {
    std::vector<double> g = grad_seq_loglik(at, fm, x, y);
    const double p = std::exp(seq_logprob(at, fm, x, y));
    for (double& v : g) v *= p;
    return g;
  };
  std::vector<double> hess(d * d);
  std::vector<double> wp(w.begin(), w.end());
  for (std::size_t j = 0; j < d; ++j) {
    wp[j] = w[j] + h;
    const auto up = grad_p(wp);
    wp[j] = w[j] - h;
    const auto down = grad_p(wp);
    wp[j] = w[j];
    for (std::size_t a = 0; a < d; ++a) hess[a * d + j] = (up[a] - down[a]) / (2.0 * h);
  }
  for (std::size_t a = 0; a < d; ++a) {
    for (std::size_t b = a + 1; b < d; ++b) {
      const double s = 0.5 * (hess[a * d + b] + hess[b * d + a]);
      hess[a * d + b] = s;
      hess[b * d + a] = s;
    }
  }
  return power_iteration_norm(hess, d, rng, 200, 1e-10);
}

std::shared_ptr<DenseFeatureMap> random_feature_map(std::size_t dim, int k, int length,
                                                    double norm_bound, Rng& rng) {
  // Prefixes of length < N, each with k candidate tokens.
  std::int64_t rows = 0;
  for (int i = 0; i < length; ++i) rows += sequence_count(k, i);
  rows *= k;
  auto table = std::make_shared<std::vector<double>>(static_cast<std::size_t>(rows) * dim);
  for (std::int64_t r = 0; r < rows; ++r) {
    std::span<double> v{table->data() + static_cast<std::size_t>(r) * dim, dim};
    double n = 0.0;
    while (n == 0.0) {
      for (double& a : v) a = standard_normal(rng);
      n = norm2(v);
    }
    const double target = norm_bound * (0.25 + 0.75 * uniform01(rng));
    for (double& a : v) a *= target / n;
  }
  return std::make_shared<DenseFeatureMap>(
      dim, k, length, norm_bound,
      [table, dim, k](const Context&, std::span<const Token> prefix, Token y,
                      std::span<double> out) {
        // Row index: offset of prefixes shorter than |prefix|, then the prefix
        // value in base k, then the token.
        std::int64_t offset = 0;
        std::int64_t block = 1;
        for (std::size_t i = 0; i < prefix.size(); ++i) {
          offset += block;
          block *= k;
        }
        std::int64_t code = 0;
        for (Token t : prefix) code = code * k + t;
        const auto row = static_cast<std::size_t>((offset + code) * k + y);
        std::copy_n(table->begin() + static_cast<std::ptrdiff_t>(row * dim), dim, out.begin());
      });
}

double GuessingGame::run(std::int64_t trials, Rng& rng) const {
  if (!(l >= 1 && l <= m)) throw std::invalid_argument("guessing game needs 1 <= l <= m");
  if (trials < 1) throw std::invalid_argument("guessing game needs trials >= 1");
  std::vector<int> pool(static_cast<std::size_t>(m));
  std::int64_t misses = 0;
  for (std::int64_t t = 0; t < trials; ++t) {
    const int y = static_cast<int>(uniform_index(rng, m));
    bool hit = false;
    if (strategy == GuessStrategy::optimal) {
      // Uniform over the candidates not yet ruled out.
      std::iota(pool.begin(), pool.end(), 0);
      for (int g = 0; g < l && !hit; ++g) {
        const auto j = static_cast<std::size_t>(g + uniform_index(rng, m - g));
        std::swap(pool[static_cast<std::size_t>(g)], pool[j]);
        hit = pool[static_cast<std::size_t>(g)] == y;
      }
    } else {
      for (int g = 0; g < l && !hit; ++g) hit = static_cast<int>(uniform_index(rng, m)) == y;
    }
    if (!hit) ++misses;
  }
  return static_cast<double>(misses) / static_cast<double>(trials);
}

namespace {

struct Loss {
  std::function<double(std::span<const double>)> value;
  std::function<std::vector<double>(std::span<const double>)> grad;
};

std::vector<double> unit_vector(std::size_t dim, Rng& rng) {
  std::vector<double> u(dim);
  double n = 0.0;
  while (n == 0.0) {
    for (double& a : u) a = standard_normal(rng);
    n = norm2(u);
  }
  for (double& a : u) a /= n;
  return u;
}

std::vector<Loss> quadratic_rays(std::size_t dim, std::int64_t rounds, Rng& rng, double& smooth) {
  std::vector<Loss> out;
  smooth = 0.0;
  for (std::int64_t t = 0; t < rounds; ++t) {
    auto u = unit_vector(dim, rng);
    const double b = standard_normal(rng);
    const double a = 0.5 + 1.5 * uniform01(rng);
    smooth = std::max(smooth, a);
    out.push_back({[u, a, b](std::span<const double> w) {
                     const double z = dot(u, w) - b;
                     return 0.5 * a * z * z;
                   },
                   [u, a, b](std::span<const double> w) {
                     const double z = dot(u, w) - b;
                     std::vector<double> g(u);
                     for (double& v : g) v *= a * z;
                     return g;
                   }});
  }
  return out;
}

std::vector<Loss> softplus_rays(std::size_t dim, std::int64_t rounds, Rng& rng) {
  std::vector<Loss> out;
  for (std::int64_t t = 0; t < rounds; ++t) {
    auto u = unit_vector(dim, rng);
    const double b = standard_normal(rng);
    // log(1 + exp(-(u.w - b))); ||grad|| = sigmoid(-z) <= loss.
    out.push_back({[u, b](std::span<const double> w) {
                     const double z = dot(u, w) - b;
                     return z > 0 ? std::log1p(std::exp(-z)) : -z + std::log1p(std::exp(z));
                   },
                   [u, b](std::span<const double> w) {
                     const double z = dot(u, w) - b;
                     const double s = 1.0 / (1.0 + std::exp(z));
                     std::vector<double> g(u);
                     for (double& v : g) v *= -s;
                     return g;
                   }});
  }
  return out;
}

std::vector<Loss> log_losses(const std::shared_ptr<DenseFeatureMap>& fm, std::int64_t rounds,
                             Rng& rng) {
  std::vector<Loss> out;
  const Context x{};
  for (std::int64_t t = 0; t < rounds; ++t) {
    Sequence y(static_cast<std::size_t>(fm->length()));
    for (Token& c : y) c = static_cast<Token>(uniform_index(rng, fm->vocab()));
    out.push_back({[fm, y, x](std::span<const double> w) { return -naive_seq_logprob(w, *fm, x, y); },
                   [fm, y, x](std::span<const double> w) {
                     auto g = grad_seq_loglik(w, *fm, x, y);
                     for (double& v : g) v = -v;
                     return g;
                   }});
  }
  return out;
}

// Runs online GD and returns min over comparators of (rhs - lhs).
double regret_slack(const std::vector<Loss>& losses, std::size_t dim, RegretCase lr_case,
                    double eta, double smooth_or_c, double lambda, Rng& rng) {
  const auto T = static_cast<double>(losses.size());
  std::vector<double> w(dim, 0.0);
  std::vector<double> mean(dim, 0.0);
  double lhs = 0.0;
  for (const auto& loss : losses) {
    axpy(1.0 / T, w, mean);
    const double l = loss.value(w);
    const auto g = loss.grad(w);
    double step = eta;
    if (lr_case == RegretCase::constant) {
      lhs += l;
    } else {
      lhs += l / (1.0 + smooth_or_c * l / lambda);
      step = eta / (lambda + norm2(g));
    }
    axpy(-step, g, w);
  }
  lhs /= T;

  std::vector<std::vector<double>> comparators{std::vector<double>(dim, 0.0), w, mean};
  for (int j = 0; j < 4; ++j) {
    auto v = unit_vector(dim, rng);
    const double scale = 0.5 + 4.0 * uniform01(rng);
    for (double& a : v) a *= scale;
    comparators.push_back(v);
  }
  double best = std::numeric_limits<double>::infinity();
  for (const auto& v : comparators) {
    double avg = 0.0;
    for (const auto& loss : losses) avg += loss.value(v);
    avg /= T;
    const double dist2 = dot(v, v);
    double rhs = 0.0;
    if (lr_case == RegretCase::constant) {
      rhs = (avg + dist2 / (2.0 * eta * T)) / (1.0 - eta * smooth_or_c);
    } else {
      rhs = (avg + lambda * dist2 / (2.0 * eta * T)) / (1.0 - smooth_or_c * eta / 2.0);
    }
    best = std::min(best, rhs - lhs);
  }
  return best;
}

}  // namespace

RegretReport online_gd_regret_check(RegretCase lr_case, int instances, std::int64_t rounds,
                                    Rng& rng) {
  RegretReport rep;
  rep.min_slack = std::numeric_limits<double>::infinity();
  for (int inst = 0; inst < instances; ++inst) {
    const std::size_t dim = 3 + static_cast<std::size_t>(uniform_index(rng, 5));
    const bool use_log_loss = inst % 2 == 1;
    std::vector<Loss> losses;
    double constant = 0.0;  // L for the smooth case, C for the adaptive case
    if (use_log_loss) {
      const int k = 2 + static_cast<int>(uniform_index(rng, 2));
      const int n = 1 + static_cast<int>(uniform_index(rng, 2));
      const double r = 0.5 + uniform01(rng);
      auto fm = random_feature_map(dim, k, n, r, rng);
      losses = log_losses(fm, rounds, rng);
      // Hessian bound N R^2; gradient bound sum_i 2R(-log p_i) = 2R * loss.
      constant = lr_case == RegretCase::constant ? n * r * r : 2.0 * r;
    } else if (lr_case == RegretCase::constant) {
      losses = quadratic_rays(dim, rounds, rng, constant);
    } else {
      losses = softplus_rays(dim, rounds, rng);
      constant = 1.0;
    }
    double eta = 0.0;
    double lambda = 1.0;
    if (lr_case == RegretCase::constant) {
      eta = (0.1 + 0.8 * uniform01(rng)) / constant;
    } else {
      eta = (0.1 + 1.8 * uniform01(rng)) / constant;
      lambda = 0.5 + 1.5 * uniform01(rng);
    }
    const double slack = regret_slack(losses, dim, lr_case, eta, constant, lambda, rng);
    rep.min_slack = std::min(rep.min_slack, slack);
    if (slack < -1e-10) rep.passed = false;
    ++rep.instances;
  }
  return rep;
}

std::vector<OracleCheck> run_oracle_suite(std::uint64_t seed, int instances) {
  std::vector<OracleCheck> out;
  Rng rng = make_stream(seed, 0x6f7261636c65ULL);
  const Context x{};

  struct Instance {
    std::shared_ptr<DenseFeatureMap> fm;
    Weights w;
    Sequence y;
  };
  auto make_instance = [&](int k, int n, double r) {
    const std::size_t dim = 3 + static_cast<std::size_t>(uniform_index(rng, 6));
    Instance in;
    in.fm = random_feature_map(dim, k, n, r, rng);
    in.w.resize(dim);
    for (double& v : in.w) v = standard_normal(rng);
    in.y.resize(static_cast<std::size_t>(n));
    for (Token& t : in.y) t = static_cast<Token>(uniform_index(rng, k));
    return in;
  };
  auto random_shape = [&](int& k, int& n) {
    k = 2 + static_cast<int>(uniform_index(rng, 3));
    n = 1 + static_cast<int>(uniform_index(rng, 3));
  };

  {
    double worst = 0.0;
    for (int i = 0; i < instances; ++i) {
      int k = 0;
      int n = 0;
      random_shape(k, n);
      const Instance in = make_instance(k, n, 0.5 + uniform01(rng));
      const auto g = grad_seq_loglik(in.w, *in.fm, x, in.y);
      const auto fd = finite_diff_gradient(in.w, *in.fm, x, in.y, 1e-5);
      worst = std::max(worst, relative_error(g, fd));
    }
    out.push_back({"gradient_vs_finite_difference", worst <= 1e-5, worst, 1e-5,
                   fmt::format("max relative error over {} instances", instances)});
  }
  {
    double worst = 0.0;
    for (int i = 0; i < instances; ++i) {
      int k = 0;
      int n = 0;
      random_shape(k, n);
      Instance in = make_instance(k, n, 1.0);
      for (double& v : in.w) v *= 5.0;
      const std::span<const Token> ys{in.y};
      for (std::size_t pos = 0; pos < in.y.size(); ++pos) {
        double s = 0.0;
        for (int c = 0; c < k; ++c) s += std::exp(token_logprob(in.w, *in.fm, x, ys.first(pos), c));
        worst = std::max(worst, std::abs(s - 1.0));
      }
    }
    out.push_back({"softmax_normalization", worst <= 1e-12, worst, 1e-12,
                   "max |sum_y p(y | prefix) - 1|"});
  }
  {
    const Instance in = make_instance(2, 2, 1.0);
    const SeqTable table = enumerate_seq_distribution(in.w, *in.fm, x);
    std::vector<double> freq(table.prob.size(), 0.0);
    const int draws = 100000;
    for (int i = 0; i < draws; ++i) {
      const Sequence y = sample_sequence(in.w, *in.fm, x, rng);
      freq[static_cast<std::size_t>(y[0] * 2 + y[1])] += 1.0 / draws;
    }
    double tv = 0.0;
    for (std::size_t i = 0; i < freq.size(); ++i) tv += 0.5 * std::abs(freq[i] - table.prob[i]);
    out.push_back({"sampler_vs_enumeration_tv", tv <= 0.02, tv, 0.02, "k = 2, N = 2, 1e5 draws"});
  }
  {
    double worst_entry = 0.0;
    double worst_sum = 0.0;
    for (int i = 0; i < instances; ++i) {
      int k = 0;
      int n = 0;
      random_shape(k, n);
      if (i % 10 == 0) {
        k = 3;
        n = 3;
      }
      const Instance in = make_instance(k, n, 1.0);
      const SeqTable table = enumerate_seq_distribution(in.w, *in.fm, x);
      double s = 0.0;
      for (std::size_t j = 0; j < table.seqs.size(); ++j) {
        s += table.prob[j];
        worst_entry = std::max(
            worst_entry, std::abs(std::exp(seq_logprob(in.w, *in.fm, x, table.seqs[j])) - table.prob[j]));
      }
      worst_sum = std::max(worst_sum, std::abs(s - 1.0));
    }
    out.push_back({"enumeration_sums_to_one", worst_sum <= 1e-10, worst_sum, 1e-10, ""});
    out.push_back({"enumeration_vs_seq_logprob", worst_entry <= 1e-12, worst_entry, 1e-12,
                   "max entrywise |exp(seq_logprob) - table|"});
  }
  {
    double worst = 0.0;
    for (int i = 0; i < instances; ++i) {
      int k = 0;
      int n = 0;
      random_shape(k, n);
      const double r = 0.5 + 1.5 * uniform01(rng);
      const Instance in = make_instance(k, n, r);
      const auto h = nll_hessian(in.w, *in.fm, x, in.y);
      const double norm = power_iteration_norm(h, in.fm->dim(), rng);
      worst = std::max(worst, norm / (n * r * r));
    }
    out.push_back({"hessian_norm_over_NR2", worst <= 1.0, worst, 1.0,
                   "max ||-grad^2 log p|| / (N R^2)"});
  }
  {
    double worst = 0.0;
    for (int i = 0; i < instances; ++i) {
      int k = 0;
      int n = 0;
      random_shape(k, n);
      const double r = 0.5 + 1.5 * uniform01(rng);
      Instance in = make_instance(k, n, r);
      for (double& v : in.w) v *= 3.0;
      std::vector<std::vector<double>> feats;
      std::vector<double> prob;
      const std::span<const Token> ys{in.y};
      for (std::size_t pos = 0; pos < in.y.size(); ++pos) {
        position_moments(in.w, *in.fm, x, ys.first(pos), feats, prob);
        std::vector<double> g(feats[static_cast<std::size_t>(in.y[pos])]);
        for (std::size_t c = 0; c < prob.size(); ++c) axpy(-prob[c], feats[c], g);
        const double bound = -2.0 * r * std::log(prob[static_cast<std::size_t>(in.y[pos])]);
        if (bound > 1e-300) worst = std::max(worst, norm2(g) / bound);
      }
    }
    out.push_back({"token_gradient_over_2R_neglogp", worst <= 1.0, worst, 1.0,
                   "max ||grad log p(y_i)|| / (-2 R log p(y_i))"});
  }
  {
    double worst = 0.0;
    for (int i = 0; i < instances; ++i) {
      int k = 0;
      int n = 0;
      random_shape(k, n);
      Instance in = make_instance(k, n, 1.0);
      worst = std::max(worst, prob_hessian_norm(in.w, *in.fm, x, in.y, rng));
    }
    out.push_back({"prob_smoothness", worst <= 16.0, worst, 16.0, "max ||grad^2 p(y|x)||, R = 1"});
  }
  {
    double worst = 0.0;
    for (int i = 0; i < instances; ++i) {
      int k = 0;
      int n = 0;
      random_shape(k, n);
      const Instance in = make_instance(k, n, 1.0);
      const std::size_t dim = in.fm->dim();
      auto base = in.fm;
      // Appending a constant coordinate with weight 1e4 shifts every logit.
      DenseFeatureMap shifted(dim + 1, k, n, 2.0,
                              [base, dim](const Context& c, std::span<const Token> p, Token t,
                                          std::span<double> o) {
                                base->feature(c, p, t, o.first(dim));
                                o[dim] = 1.0;
                              });
      Weights w2 = in.w;
      w2.push_back(1e4);
      const std::span<const Token> ys{in.y};
      for (std::size_t pos = 0; pos < in.y.size(); ++pos) {
        for (int c = 0; c < k; ++c) {
          worst = std::max(worst, std::abs(token_logprob(in.w, *in.fm, x, ys.first(pos), c) -
                                           token_logprob(w2, shifted, x, ys.first(pos), c)));
        }
      }
    }
    out.push_back({"logsumexp_shift_invariance", worst <= 1e-9, worst, 1e-9, "logits + 1e4"});
  }
  {
    const auto c1 = online_gd_regret_check(RegretCase::constant, instances, 200, rng);
    out.push_back({"online_gd_constant_lr", c1.passed, c1.min_slack, 0.0,
                   fmt::format("min slack over {} instances", c1.instances)});
    const auto c2 = online_gd_regret_check(RegretCase::adaptive, instances, 200, rng);
    out.push_back({"online_gd_adaptive_lr", c2.passed, c2.min_slack, 0.0,
                   fmt::format("min slack over {} instances", c2.instances)});
  }
  return out;
}

}  // namespace arlab
