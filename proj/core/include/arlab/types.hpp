#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace arlab {

// Tokens are 0-based: a vocabulary of size k holds tokens 0..k-1.
using Token = std::int32_t;
using Sequence = std::vector<Token>;

// Model parameter w in R^D. Plain storage; the feature map fixes D.
using Weights = std::vector<double>;

struct Context {
  std::vector<double> x;
  // Index into a finite context set (hard instances, mixture centers), -1 otherwise.
  std::int64_t id = -1;
};

bool all_finite(std::span<const double> v);
double norm2(std::span<const double> v);
double dot(std::span<const double> a, std::span<const double> b);
// y += a * x
void axpy(double a, std::span<const double> x, std::span<double> y);

}  // namespace arlab
