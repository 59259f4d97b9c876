#pragma once

// Shared helpers for the test suites: a seeded generator and independent
// oracles that never call into the code paths they check.

#include <cstdint>
#include <map>
#include <random>
#include <vector>

#include "recipstab/exact.hpp"

namespace recipstab::testing {

inline std::mt19937_64 rng(std::uint64_t seed = 42) { return std::mt19937_64(seed); }

inline std::int64_t uniform(std::mt19937_64& gen, std::int64_t lo, std::int64_t hi) {
  return std::uniform_int_distribution<std::int64_t>(lo, hi)(gen);
}

inline Rational random_nonzero_rational(std::mt19937_64& gen, std::int64_t num_max = 20,
                                        std::int64_t den_max = 12) {
  std::int64_t n = 0;
  while (n == 0) n = uniform(gen, -num_max, num_max);
  return make_rational(n, uniform(gen, 1, den_max));
}

inline Real random_real(std::mt19937_64& gen, double lo, double hi) {
  return Real(std::uniform_real_distribution<double>(lo, hi)(gen));
}

// Pascal's triangle, row by row.
inline BigInt pascal_binomial(unsigned n, unsigned k) {
  std::vector<BigInt> row{1};
  for (unsigned i = 1; i <= n; ++i) {
    std::vector<BigInt> next(i + 1, 1);
    for (unsigned j = 1; j < i; ++j) next[j] = row[j - 1] + row[j];
    row = std::move(next);
  }
  return k <= n ? row[k] : BigInt(0);
}

// Power by repeated multiplication.
inline Rational repeated_pow(const Rational& base, int exp) {
  Rational result = 1;
  const Rational b = exp < 0 ? 1 / base : base;
  for (int i = 0; i < (exp < 0 ? -exp : exp); ++i) result *= b;
  return result;
}

inline bool near_rel(const Real& a, const Real& b, const Real& rel) {
  const Real scale = std::max(abs(a), abs(b));
  return abs(a - b) <= rel * (scale == 0 ? Real(1) : scale);
}

}  // namespace recipstab::testing
