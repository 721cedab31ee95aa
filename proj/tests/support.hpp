#pragma once

#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

#include "dualsav/curve.hpp"

namespace dualsav::testing {

inline std::vector<Vec2> regular_polygon(std::size_t n, double radius = 1.0, double phase = 0.0) {
  std::vector<Vec2> x(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double t = phase + 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(n);
    x[j] = radius * Vec2(std::cos(t), std::sin(t));
  }
  return x;
}

/// Circle with a deterministic random radial jitter and uneven angular spacing.
inline std::vector<Vec2> jittered_polygon(std::size_t n, unsigned seed, double amplitude = 0.1) {
  std::mt19937 gen(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Vec2> x(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double t = 2.0 * std::numbers::pi * (static_cast<double>(j) + 0.3 * u(gen)) / static_cast<double>(n);
    const double r = 1.0 + amplitude * u(gen);
    x[j] = r * Vec2(std::cos(t), std::sin(t));
  }
  return x;
}

/// Central-difference gradient of a scalar function of the vertices.
inline std::vector<Vec2> fd_gradient(const std::function<double(const std::vector<Vec2>&)>& f,
                                     std::vector<Vec2> x, double h) {
  std::vector<Vec2> g(x.size());
  for (std::size_t j = 0; j < x.size(); ++j)
    for (int c = 0; c < 2; ++c) {
      const double x0 = x[j][c];
      x[j][c] = x0 + h;
      const double fp = f(x);
      x[j][c] = x0 - h;
      const double fm = f(x);
      x[j][c] = x0;
      g[j][c] = (fp - fm) / (2.0 * h);
    }
  return g;
}

/// Periodic stiffness and lumped masses assembled directly from vertex
/// positions, independent of the library's frame.
inline Matrix oracle_stiffness(const std::vector<Vec2>& x) {
  const std::size_t n = x.size();
  Matrix k = Matrix::Zero(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t jp = (j + 1) % n;
    const double w = 1.0 / (x[jp] - x[j]).norm();
    k(j, j) += w;
    k(jp, jp) += w;
    k(j, jp) -= w;
    k(jp, j) -= w;
  }
  return k;
}

inline Vector oracle_masses(const std::vector<Vec2>& x) {
  const std::size_t n = x.size();
  Vector m(n);
  for (std::size_t j = 0; j < n; ++j)
    m[j] = 0.5 * ((x[j] - x[(j + n - 1) % n]).norm() + (x[(j + 1) % n] - x[j]).norm());
  return m;
}

}  // namespace dualsav::testing
