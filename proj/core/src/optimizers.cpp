#include "arlab/optimizers.hpp"

#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

#include "arlab/types.hpp"

namespace arlab {

LrRule LrRule::constant(double eta) {
  LrRule r;
  r.kind = LrKind::constant;
  r.eta = eta;
  r.validate();
  return r;
}

LrRule LrRule::adaptive(double a, double b) {
  LrRule r;
  r.kind = LrKind::adaptive;
  r.a = a;
  r.b = b;
  r.validate();
  return r;
}

LrRule LrRule::adagrad(double eta, double delta0) {
  LrRule r;
  r.kind = LrKind::adagrad;
  r.eta = eta;
  r.delta0 = delta0;
  r.validate();
  return r;
}

void LrRule::validate() const {
  switch (kind) {
    case LrKind::constant:
      if (!(eta > 0.0)) throw std::invalid_argument("constant LR needs eta > 0");
      break;
    case LrKind::adaptive:
      if (!(a > 0.0 && b > 0.0)) throw std::invalid_argument("adaptive LR needs a > 0, b > 0");
      break;
    case LrKind::adagrad:
      if (!(eta > 0.0 && delta0 >= 0.0)) {
        throw std::invalid_argument("adagrad needs eta > 0, delta0 >= 0");
      }
      break;
  }
}

std::string LrRule::describe() const {
  switch (kind) {
    case LrKind::constant:
      return fmt::format("constant({})", eta);
    case LrKind::adaptive:
      return fmt::format("adaptive({}, {})", a, b);
    case LrKind::adagrad:
      return fmt::format("adagrad({}, {})", eta, delta0);
  }
  return "?";
}

double lr_step(const LrRule& rule, double grad_norm) {
  if (grad_norm < 0.0 || std::isnan(grad_norm)) {
    throw std::invalid_argument("gradient norm must be nonnegative");
  }
  switch (rule.kind) {
    case LrKind::constant:
    case LrKind::adagrad:
      return rule.eta;
    case LrKind::adaptive:
      return 1.0 / (rule.a + rule.b * grad_norm);
  }
  return 0.0;
}

LrRule clipped_rule(const LrRule& rule, double zeta) {
  if (!(zeta >= 1.0)) throw std::invalid_argument("clip level zeta must be >= 1");
  LrRule r = rule;
  switch (rule.kind) {
    case LrKind::constant:
    case LrKind::adagrad:
      r.eta = rule.eta / zeta;
      break;
    case LrKind::adaptive:
      r.a = rule.a * zeta;
      break;
  }
  return r;
}

void adagrad_update(AdagradState& state, std::span<double> w, std::span<const double> grad) {
  if (w.size() != grad.size()) throw std::invalid_argument("adagrad: w and grad differ in size");
  if (state.accumulator.empty()) state.accumulator.assign(w.size(), 0.0);
  if (state.accumulator.size() != w.size()) {
    throw std::invalid_argument("adagrad: accumulator size differs from w");
  }
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double g = grad[i];
    if (g == 0.0) continue;
    state.accumulator[i] += g * g;
    w[i] -= state.eta * g / (std::sqrt(state.accumulator[i]) + state.delta0);
  }
}

Optimizer::Optimizer(LrRule rule, std::size_t dim) : rule_(rule) {
  rule_.validate();
  if (rule_.kind == LrKind::adagrad) {
    adagrad_.eta = rule_.eta;
    adagrad_.delta0 = rule_.delta0;
    adagrad_.accumulator.assign(dim, 0.0);
    scratch_.resize(dim);
  }
}

double Optimizer::ascend(std::span<double> w, std::span<const double> direction, double zeta) {
  if (w.size() != direction.size()) throw std::invalid_argument("optimizer: shape mismatch");
  const LrRule rule = zeta == 1.0 ? rule_ : clipped_rule(rule_, zeta);
  if (rule.kind == LrKind::adagrad) {
    adagrad_.eta = rule.eta;
    for (std::size_t i = 0; i < direction.size(); ++i) scratch_[i] = -direction[i];
    adagrad_update(adagrad_, w, scratch_);
    adagrad_.eta = rule_.eta;
    return rule.eta;
  }
  const double eta = lr_step(rule, norm2(direction));
  axpy(eta, direction, w);
  return eta;
}

}  // namespace arlab
