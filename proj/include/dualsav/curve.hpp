#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "dualsav/error.hpp"

namespace dualsav {

using Vec2 = Eigen::Vector2d;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Counterclockwise rotation by +90 degrees.
inline Vec2 rotate_quarter(const Vec2& v) { return Vec2(-v.y(), v.x()); }

inline double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

/// Signed shoelace area; positive for counterclockwise traversal.
inline double polygon_area(std::span<const Vec2> x) {
  const std::size_t n = x.size();
  double twice = 0.0;
  for (std::size_t j = 0; j < n; ++j) twice += cross(x[j], x[(j + 1) % n]);
  return 0.5 * twice;
}

inline double polygon_length(std::span<const Vec2> x) {
  const std::size_t n = x.size();
  double len = 0.0;
  for (std::size_t j = 0; j < n; ++j) len += (x[(j + 1) % n] - x[j]).norm();
  return len;
}

/// Nodal gradient of the shoelace area: 1/2 R_{-pi/2}(x_{j+1} - x_{j-1}), which
/// points outward on a counterclockwise curve.
inline std::vector<Vec2> area_gradient(std::span<const Vec2> x) {
  const std::size_t n = x.size();
  std::vector<Vec2> g(n);
  for (std::size_t j = 0; j < n; ++j) {
    const Vec2 d = x[(j + 1) % n] - x[(j + n - 1) % n];
    g[j] = 0.5 * Vec2(d.y(), -d.x());
  }
  return g;
}

/// Nodal gradient of the perimeter: tau_{j-1/2} - tau_{j+1/2}.
inline std::vector<Vec2> length_gradient(std::span<const Vec2> x) {
  const std::size_t n = x.size();
  std::vector<Vec2> g(n);
  for (std::size_t j = 0; j < n; ++j) {
    const Vec2 prev = x[j] - x[(j + n - 1) % n];
    const Vec2 next = x[(j + 1) % n] - x[j];
    g[j] = prev / prev.norm() - next / next.norm();
  }
  return g;
}

inline std::vector<double> edge_lengths(std::span<const Vec2> x) {
  const std::size_t n = x.size();
  std::vector<double> l(n);
  for (std::size_t j = 0; j < n; ++j) l[j] = (x[(j + 1) % n] - x[j]).norm();
  return l;
}

/// Returns the first violated curve invariant, if any.
inline std::optional<Error> check_curve(std::span<const Vec2> x) {
  if (x.size() < 3) return Error(ErrorKind::InvalidCurve, "a closed polygon needs at least 3 vertices");
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double l = (x[(j + 1) % x.size()] - x[j]).norm();
    if (!(l > 0.0) || !std::isfinite(l))
      return Error(ErrorKind::DegenerateEdge, "edge " + std::to_string(j) + " has zero length");
  }
  const double area = polygon_area(x);
  if (!(area > 0.0))
    return Error(ErrorKind::InvalidCurve, "signed area must be positive (counterclockwise), got " +
                                              std::to_string(area));
  return std::nullopt;
}

/// Closed counterclockwise polygon with N >= 3 vertices; x_{N} wraps to x_0.
class PolygonalCurve {
 public:
  explicit PolygonalCurve(std::vector<Vec2> vertices) : x_(std::move(vertices)) {
    if (auto err = check_curve(x_)) throw *err;
  }

  /// Accepts either orientation and reverses clockwise input.
  static PolygonalCurve counterclockwise(std::vector<Vec2> vertices) {
    if (vertices.size() >= 3 && polygon_area(vertices) < 0.0) {
      std::reverse(vertices.begin(), vertices.end());
    }
    return PolygonalCurve(std::move(vertices));
  }

  std::size_t size() const noexcept { return x_.size(); }
  const Vec2& operator[](std::size_t j) const { return x_[j]; }
  std::span<const Vec2> vertices() const noexcept { return x_; }

  double area() const { return polygon_area(x_); }
  double length() const { return polygon_length(x_); }

 private:
  std::vector<Vec2> x_;
};

/// Geometry frozen on the known curve for one time step.
struct FrozenFrame {
  Vector edge_lengths;              // l_j = |x_{j+1} - x_j|
  std::vector<Vec2> edge_tangents;  // tau_{j+1/2}
  std::vector<Vec2> tangents;       // nodal tau_j
  std::vector<Vec2> normals;        // nodal nu_j = R_{pi/2} tau_j (inward for CCW)
  Vector curvatures;                // kappa_j > 0 on convex CCW curves
  Vector masses;                    // lumped m_j = (l_{j-1} + l_j) / 2

  std::size_t size() const noexcept { return static_cast<std::size_t>(masses.size()); }
};

inline constexpr double kFoldTolerance = 1e-12;

inline FrozenFrame build_frame(std::span<const Vec2> x) {
  const std::size_t n = x.size();
  if (n < 3) throw Error(ErrorKind::InvalidCurve, "a closed polygon needs at least 3 vertices");
  FrozenFrame f;
  f.edge_lengths.resize(n);
  f.edge_tangents.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    const Vec2 e = x[(j + 1) % n] - x[j];
    const double l = e.norm();
    if (!(l > 0.0)) throw Error(ErrorKind::DegenerateEdge, "edge " + std::to_string(j) + " has zero length");
    f.edge_lengths[j] = l;
    f.edge_tangents[j] = e / l;
  }
  f.tangents.resize(n);
  f.normals.resize(n);
  f.curvatures.resize(n);
  f.masses.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t jm = (j + n - 1) % n;
    const Vec2 sum = f.edge_tangents[jm] + f.edge_tangents[j];
    const double s = sum.norm();
    if (s <= kFoldTolerance)
      throw Error(ErrorKind::FoldedVertex, "adjacent edge tangents antiparallel at vertex " + std::to_string(j));
    f.tangents[j] = sum / s;
    f.normals[j] = rotate_quarter(f.tangents[j]);
    f.masses[j] = 0.5 * (f.edge_lengths[jm] + f.edge_lengths[j]);
    // (K x)_j = tau_{j-1/2} - tau_{j+1/2}
    const Vec2 kx = f.edge_tangents[jm] - f.edge_tangents[j];
    f.curvatures[j] = -kx.dot(f.normals[j]) / f.masses[j];
  }
  return f;
}

inline FrozenFrame build_frame(const PolygonalCurve& c) { return build_frame(c.vertices()); }

}  // namespace dualsav
