#pragma once

#include "hope/tensor.hpp"

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace hope {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Folds a base seed and stream labels into one well-mixed seed.
inline std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> labels) {
  std::uint64_t h = splitmix64(seed);
  for (std::uint64_t label : labels) h = splitmix64(h ^ splitmix64(label + 0x632BE59BD9B4E019ull));
  return h;
}

// Fills t with U(-bound, bound) draws in row-major order.
inline void fill_uniform(Tensor& t, double bound, Rng& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (double& v : t.data()) v = dist(rng);
}

// Uniform in +-1/sqrt(fan_in).
inline Tensor init_uniform_fan_in(std::size_t rows, std::size_t cols, std::size_t fan_in, Rng& rng) {
  Tensor t = Tensor::zeros(rows, cols);
  fill_uniform(t, 1.0 / std::sqrt(static_cast<double>(fan_in)), rng);
  return t;
}

} // namespace hope
