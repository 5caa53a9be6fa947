#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "arlab/model.hpp"
#include "arlab/policy.hpp"

namespace arlab {

// Ground-truth teacher for the synthetic experiments: W1 is k x d, W2 is k x k,
// both row-major with i.i.d. N(0, 1) entries.
struct Teacher {
  int d = 0;
  int k = 0;
  std::vector<double> w1;
  std::vector<double> w2;

  static Teacher draw(int d, int k, std::uint64_t seed);
};

// y*_1 = argmax W1 x, y*_i = argmax (W1 x + W2 e_{y*_{i-1}}); ties go to the
// lowest index.
Sequence label(const Teacher& teacher, std::span<const double> x, int length);

// phi(x, y_{1:i}) = [vec(e_{y_i} x^T), vec(e_{y_i} e_{y_{i-1}}^T)], second
// block zero at the first position. D = dk + k^2. Layout: W1[y][j] at y*d + j,
// W2[y][y_prev] at dk + y*k + y_prev.
class ExperimentFeatureMap final : public FeatureMap {
 public:
  ExperimentFeatureMap(int d, int k, int length, double norm_bound);

  int context_dim() const noexcept { return d_; }
  std::string_view kind() const override { return "experiment"; }
  void feature(const Context& x, std::span<const Token> prefix, Token y,
               std::span<double> out) const override;
  std::unique_ptr<BoundContext> bind(std::span<const double> w, const Context& x) const override;

 private:
  int d_;
};

// phi(x, prefix, y) = vec(e_y x^T), independent of the prefix. D = dk.
class ConstantFeatureMap final : public FeatureMap {
 public:
  ConstantFeatureMap(int d, int k, int length, double norm_bound);

  std::string_view kind() const override { return "constant"; }
  void feature(const Context& x, std::span<const Token> prefix, Token y,
               std::span<double> out) const override;
  std::unique_ptr<BoundContext> bind(std::span<const double> w, const Context& x) const override;

 private:
  int d_;
};

// Orthonormal one-hot features over a finite context set, indexed by
// (context id, position, token): D = I * N * k. Contexts must carry their id.
class HardInstanceFeatureMap final : public FeatureMap {
 public:
  HardInstanceFeatureMap(int contexts, int k, int length, std::size_t dim = 0);

  int contexts() const noexcept { return contexts_; }
  std::size_t index(std::int64_t id, std::size_t pos, Token y) const;
  std::string_view kind() const override { return "hard"; }
  void feature(const Context& x, std::span<const Token> prefix, Token y,
               std::span<double> out) const override;
  std::unique_ptr<BoundContext> bind(std::span<const double> w, const Context& x) const override;

 private:
  int contexts_;
};

struct Separator {
  Weights w_star;               // unit norm
  std::optional<double> margin;  // declared gamma, when known analytically
};

// Finite context law: contexts[i] has probability prob[i].
struct FiniteSupport {
  std::vector<Context> contexts;
  std::vector<double> prob;
};

struct Task {
  std::string kind;
  int d = 0;
  int k = 0;
  int length = 0;
  std::function<Context(Rng&)> sample;
  std::function<Sequence(const Context&)> label;
  std::shared_ptr<const FeatureMap> features;
  std::optional<Separator> separator;
  std::optional<FiniteSupport> support;
  std::vector<Context> centers;  // noiseless mixture centers, when applicable
  std::shared_ptr<const Teacher> teacher;
};

struct MixtureTaskConfig {
  int d = 32;
  int k = 32;
  int length = 128;
  double noise_std_scale = 0.05;  // per-dimension std is noise_std_scale / sqrt(d)
  double noise_norm_clip = 0.05;
  std::uint64_t teacher_seed = 0;
};

Context sample_mixture_context(const MixtureTaskConfig& cfg, Rng& rng);
Context sample_hypercube_context(int d, Rng& rng);
// Uniform direction on the unit sphere.
Context sample_sphere_context(int d, Rng& rng);

Task make_mixture_task(const MixtureTaskConfig& cfg);
// Reuses a given teacher (e.g. one loaded from a sidecar); shapes must match.
Task make_mixture_task(const MixtureTaskConfig& cfg, std::shared_ptr<const Teacher> teacher);
Task make_hypercube_task(int d, int k, int length, std::uint64_t teacher_seed);
Task make_hypercube_task(std::shared_ptr<const Teacher> teacher, int length);
// Prefix-independent features with constant labels (argmax W1 x repeated), so
// every ground-truth token has the same likelihood under any w.
Task constant_feature_task(int d, int k, int length, Rng& rng);

// min over sampled contexts, positions and wrong tokens of
// <w*, phi(x, y*_{1:i})> - <w*, phi(x, y*_{1:i-1}, y)>. Uses dense features.
double measure_margin(const Task& task, std::span<const double> w_star, std::size_t samples,
                      Rng& rng);

struct FeatureNormAudit {
  double max_on_path = 0.0;  // along the ground-truth prefix
  double max_all = 0.0;      // every candidate token
};
FeatureNormAudit audit_feature_norms(const Task& task, std::size_t samples, Rng& rng);

struct HardInstanceConfig {
  double gamma = 0.25;
  double alpha = 0.125;
  double eps_star = 0.25;
  double delta = 0.5;
  int k = 4;
  int length = 4;
  // Requested feature dimension; 0 derives I * N * k. Smaller values are rejected.
  std::size_t dim = 0;

  int contexts() const;  // I: floor(1/gamma^2) rounded up to a multiple of 4
  std::int64_t m() const;  // floor(1/alpha)
  void validate() const;
};

struct HardInstance {
  Task task;
  std::shared_ptr<const Policy> base;  // q: Unif(Y_m) on blocks 1-2, Unif(Y^N) on 3-4
  std::vector<int> block;              // block (0..3) of each context id
  std::vector<Sequence> y_m;
};

// The k-ary digits of idx, most significant first.
Sequence nth_sequence(std::int64_t idx, int k, int length);
// k^length, saturating at INT64_MAX.
std::int64_t sequence_count(int k, int length);

HardInstance build_hard_instance(const HardInstanceConfig& cfg, Rng& rng);

}  // namespace arlab
