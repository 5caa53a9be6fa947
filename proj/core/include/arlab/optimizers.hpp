#pragma once

#include <span>
#include <string>
#include <vector>

namespace arlab {

enum class LrKind { constant, adaptive, adagrad };

// constant:       eta_t = eta
// adaptive(a, b): eta_t = 1 / (a + b * ||g_t||)
// adagrad:        coordinate-wise eta / (sqrt(sum g^2) + delta0)
struct LrRule {
  LrKind kind = LrKind::constant;
  double eta = 0.0;
  double a = 0.0;
  double b = 0.0;
  double delta0 = 1e-10;

  static LrRule constant(double eta);
  static LrRule adaptive(double a, double b);
  static LrRule adagrad(double eta, double delta0 = 1e-10);

  void validate() const;
  std::string describe() const;
};

// Step size for a gradient of norm grad_norm. Adagrad reports its base eta.
double lr_step(const LrRule& rule, double grad_norm);

// The rule used by importance-clipped PG at clip level zeta: constant eta
// becomes eta / zeta and adaptive(a, b) becomes adaptive(a * zeta, b).
LrRule clipped_rule(const LrRule& rule, double zeta);

struct AdagradState {
  double eta = 0.1;
  double delta0 = 1e-10;
  std::vector<double> accumulator;
};

// accumulator += g^2; w <- w - eta * g / (sqrt(accumulator) + delta0).
void adagrad_update(AdagradState& state, std::span<double> w, std::span<const double> grad);

// Applies ascent steps w <- w + eta_t * direction under one LrRule. For Adagrad
// the direction is treated as a negative loss gradient.
class Optimizer {
 public:
  Optimizer(LrRule rule, std::size_t dim);

  const LrRule& rule() const noexcept { return rule_; }
  const AdagradState& adagrad() const noexcept { return adagrad_; }

  // Returns the step size used (base eta for Adagrad). zeta > 1 applies
  // clipped_rule(rule(), zeta) for this step only.
  double ascend(std::span<double> w, std::span<const double> direction, double zeta = 1.0);

 private:
  LrRule rule_;
  AdagradState adagrad_;
  std::vector<double> scratch_;
};

}  // namespace arlab
