#pragma once

#include <cstdint>
#include <random>
#include <string>

#include "bloom/space.hpp"

namespace bloom {

inline std::vector<std::string> default_ids(int n) {
  std::vector<std::string> ids;
  for (int i = 0; i < n; ++i) ids.push_back("p" + std::to_string(i));
  return ids;
}

inline RealMatrix euclidean_metric(const RealMatrix& coords) {
  const auto n = coords.rows();
  RealMatrix d(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) d(i, j) = (coords.row(i) - coords.row(j)).norm();
  return d;
}

/// d ↦ d^{1+eps}; a quasi-metric with A0 > 1 for eps > 0.
inline RealMatrix snowflake_metric(const RealMatrix& coords, double eps) {
  RealMatrix d = euclidean_metric(coords);
  return d.array().pow(1.0 + eps).matrix();
}

inline SpaceModel grid_1d(int n) {
  RealMatrix c(n, 1);
  for (int i = 0; i < n; ++i) c(i, 0) = i;
  return SpaceModel(default_ids(n), RealVector::Ones(n), euclidean_metric(c), c);
}

/// side × side grid with the Euclidean metric.
inline SpaceModel grid_2d(int side) {
  const int n = side * side;
  RealMatrix c(n, 2);
  for (int i = 0; i < n; ++i) c(i, 0) = i % side, c(i, 1) = i / side;
  return SpaceModel(default_ids(n), RealVector::Ones(n), euclidean_metric(c), c);
}

/// Uniform points in the unit square, masses uniform in [0.5, 2].
inline SpaceModel random_cloud(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0), m(0.5, 2.0);
  RealMatrix c(n, 2);
  RealVector mu(n);
  for (int i = 0; i < n; ++i) c(i, 0) = u(rng), c(i, 1) = u(rng), mu[i] = m(rng);
  return SpaceModel(default_ids(n), mu, euclidean_metric(c), c);
}

inline SpaceModel snowflake_grid(int n, double eps) {
  RealMatrix c(n, 1);
  for (int i = 0; i < n; ++i) c(i, 0) = i;
  return SpaceModel(default_ids(n), RealVector::Ones(n), snowflake_metric(c, eps), c);
}

/// Leaves of a complete binary tree with the ultrametric d(i,j) = 2^{h},
/// h = height of the lowest common ancestor. n must be a power of two.
inline SpaceModel dyadic_tree(int n) {
  if (n < 2 || (n & (n - 1)) != 0) throw DomainError("tree size must be a power of two >= 2");
  RealMatrix d = RealMatrix::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      int h = 0;
      for (int a = i, b = j; a != b; a >>= 1, b >>= 1) ++h;
      d(i, j) = std::ldexp(1.0, h);
    }
  RealMatrix c(n, 1);
  for (int i = 0; i < n; ++i) c(i, 0) = i;
  return SpaceModel(default_ids(n), RealVector::Ones(n), d, c);
}

/// kind ∈ {grid-1d, grid-2d, random-cloud, snowflake, tree}. For grid-2d,
/// size must be a perfect square; eps is used by snowflake only.
inline SpaceModel generate_space(const std::string& kind, int size, std::uint64_t seed = 0, double eps = 0.5) {
  if (size < 2) throw DomainError("generated spaces need at least two points");
  if (kind == "grid-1d") return grid_1d(size);
  if (kind == "grid-2d") {
    const int side = static_cast<int>(std::lround(std::sqrt(size)));
    if (side * side != size) throw DomainError("grid-2d size must be a perfect square");
    return grid_2d(side);
  }
  if (kind == "random-cloud") return random_cloud(size, seed);
  if (kind == "snowflake") return snowflake_grid(size, eps);
  if (kind == "tree") return dyadic_tree(size);
  throw DomainError("unknown space generator '" + kind + "'");
}

/// Weight with log w uniform in [-spread, spread].
inline RealVector random_weight(int n, std::uint64_t seed, double spread = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-spread, spread);
  RealVector w(n);
  for (int i = 0; i < n; ++i) w[i] = std::exp(u(rng));
  return w;
}

inline RealVector random_real(int n, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  RealVector v(n);
  for (int i = 0; i < n; ++i) v[i] = u(rng);
  return v;
}

inline ComplexVector random_complex(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  ComplexVector v(n);
  for (int i = 0; i < n; ++i) {
    const double re = u(rng);
    v[i] = Complex(re, u(rng));
  }
  return v;
}

inline ComplexVector random_signs(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(0.5);
  ComplexVector v(n);
  for (int i = 0; i < n; ++i) v[i] = coin(rng) ? 1.0 : -1.0;
  return v;
}

}  // namespace bloom
