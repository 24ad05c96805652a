#pragma once

#include <cstdint>
#include <random>

#include "lrpr/types.hpp"

namespace lrpr {

// Purpose tags keep the ground-truth, sensing, and noise streams disjoint even
// when they share a master seed.
enum class StreamTag : std::uint32_t {
  GroundTruthU = 1,
  GroundTruthV = 2,
  Sensing = 3,
  Noise = 4,
};

// Independent engine per (master_seed, tag, k, tau). seed_seq scrambles the
// counters, so neighbouring (k, tau) pairs do not produce correlated streams.
inline std::mt19937_64 make_stream(std::uint64_t master_seed, StreamTag tag,
                                   std::uint64_t k = 0, std::uint64_t tau = 0) {
  std::seed_seq seq{
      static_cast<std::uint32_t>(master_seed),
      static_cast<std::uint32_t>(master_seed >> 32),
      static_cast<std::uint32_t>(tag),
      static_cast<std::uint32_t>(k),
      static_cast<std::uint32_t>(k >> 32),
      static_cast<std::uint32_t>(tau),
      static_cast<std::uint32_t>(tau >> 32),
  };
  return std::mt19937_64(seq);
}

// i.i.d. standard Gaussian fill, column-major order. Complex entries have
// real and imaginary parts drawn in that order with variance 1/2 each, so
// E|a_ij|^2 = 1 in both fields.
template <typename Scalar>
Matrix<Scalar> gaussian_matrix(Index rows, Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix<Scalar> a(rows, cols);
  if constexpr (is_complex_v<Scalar>) {
    constexpr double root_half = 0.7071067811865475244;
    for (Index j = 0; j < cols; ++j)
      for (Index i = 0; i < rows; ++i) {
        const double re = normal(rng);
        const double im = normal(rng);
        a(i, j) = Scalar(re * root_half, im * root_half);
      }
  } else {
    for (Index j = 0; j < cols; ++j)
      for (Index i = 0; i < rows; ++i) a(i, j) = normal(rng);
  }
  return a;
}

template <typename Scalar>
Vector<Scalar> gaussian_vector(Index n, std::mt19937_64& rng) {
  return gaussian_matrix<Scalar>(n, 1, rng);
}

}  // namespace lrpr
