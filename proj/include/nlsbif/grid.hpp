#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "nlsbif/banded.hpp"
#include "nlsbif/error.hpp"

namespace nlsbif {

/// Uniform symmetric mesh on [-L, L] with an odd node count, so x = 0 is a node.
class Grid {
 public:
  Grid() = default;

  /// n nodes spanning [-half_width, half_width].
  Grid(double half_width, std::size_t n) : n_(n) {
    if (!(half_width > 0.0) || !std::isfinite(half_width))
      throw Error(Errc::InvalidGrid, "half width must be positive");
    if (n < 3 || n % 2 == 0) throw Error(Errc::InvalidGrid, "node count must be odd and >= 3");
    dx_ = 2.0 * half_width / static_cast<double>(n - 1);
    half_width_ = half_width;
  }

  /// Keeps the spacing exact and rounds the half width up to a multiple of it.
  static Grid from_spacing(double half_width, double dx) {
    if (!(dx > 0.0) || !std::isfinite(dx)) throw Error(Errc::InvalidGrid, "spacing must be positive");
    if (!(half_width > 0.0)) throw Error(Errc::InvalidGrid, "half width must be positive");
    const auto m = static_cast<std::size_t>(std::ceil(half_width / dx - 1e-9));
    Grid g;
    g.n_ = 2 * std::max<std::size_t>(m, 1) + 1;
    g.dx_ = dx;
    g.half_width_ = dx * static_cast<double>((g.n_ - 1) / 2);
    return g;
  }

  double half_width() const noexcept { return half_width_; }
  std::size_t size() const noexcept { return n_; }
  double dx() const noexcept { return dx_; }
  std::size_t center() const noexcept { return (n_ - 1) / 2; }

  double x(std::size_t i) const noexcept {
    const auto k = static_cast<double>(static_cast<std::ptrdiff_t>(i) - static_cast<std::ptrdiff_t>(center()));
    return k * dx_;
  }

  std::vector<double> nodes() const {
    std::vector<double> out(n_);
    for (std::size_t i = 0; i < n_; ++i) out[i] = x(i);
    return out;
  }

  bool operator==(const Grid& o) const noexcept { return n_ == o.n_ && dx_ == o.dx_; }

 private:
  double half_width_ = 0.0;
  std::size_t n_ = 0;
  double dx_ = 0.0;
};

/// Real samples of a function on the nodes of a Grid.
class GridFunction {
 public:
  GridFunction() = default;
  explicit GridFunction(const Grid& g) : grid_(g), values_(g.size(), 0.0) {}
  GridFunction(const Grid& g, std::vector<double> values) : grid_(g), values_(std::move(values)) {
    if (values_.size() != grid_.size()) throw Error(Errc::InvalidArgument, "value count does not match grid");
  }

  static GridFunction sample(const Grid& g, const std::function<double(double)>& f) {
    GridFunction out(g);
    for (std::size_t i = 0; i < g.size(); ++i) out.values_[i] = f(g.x(i));
    return out;
  }

  const Grid& grid() const noexcept { return grid_; }
  std::size_t size() const noexcept { return values_.size(); }
  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }
  std::vector<double>& data() noexcept { return values_; }
  const std::vector<double>& data() const noexcept { return values_; }

  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }

  bool all_finite() const {
    for (double v : values_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  GridFunction& operator+=(const GridFunction& o) {
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += o.values_[i];
    return *this;
  }
  GridFunction& operator-=(const GridFunction& o) {
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= o.values_[i];
    return *this;
  }
  GridFunction& operator*=(double s) {
    for (auto& v : values_) v *= s;
    return *this;
  }
  friend GridFunction operator+(GridFunction a, const GridFunction& b) { return a += b; }
  friend GridFunction operator-(GridFunction a, const GridFunction& b) { return a -= b; }
  friend GridFunction operator*(double s, GridFunction a) { return a *= s; }
  friend GridFunction operator*(GridFunction a, double s) { return a *= s; }

  bool operator==(const GridFunction& o) const { return grid_ == o.grid_ && values_ == o.values_; }

 private:
  Grid grid_;
  std::vector<double> values_;
};

enum class StencilOrder { Second = 2, Fourth = 4 };

inline StencilOrder stencil_order_from_int(int order) {
  if (order == 2) return StencilOrder::Second;
  if (order == 4) return StencilOrder::Fourth;
  throw Error(Errc::InvalidOrder, "stencil order must be 2 or 4, got " + std::to_string(order));
}

/// Central-difference matrix for -d^2/dx^2 with homogeneous Dirichlet data
/// outside the mesh. Order 2 is tridiagonal, order 4 pentadiagonal.
inline SymBandMatrix second_derivative_matrix(const Grid& g, StencilOrder order) {
  const std::size_t n = g.size();
  const double h2 = g.dx() * g.dx();
  if (order == StencilOrder::Second) {
    SymBandMatrix m(n, 1);
    for (auto& v : m.band(0)) v = 2.0 / h2;
    for (auto& v : m.band(1)) v = -1.0 / h2;
    return m;
  }
  if (order != StencilOrder::Fourth) throw Error(Errc::InvalidOrder, "stencil order must be 2 or 4");
  SymBandMatrix m(n, 2);
  for (auto& v : m.band(0)) v = 2.5 / h2;
  for (auto& v : m.band(1)) v = -4.0 / 3.0 / h2;
  for (auto& v : m.band(2)) v = 1.0 / 12.0 / h2;
  return m;
}

inline SymBandMatrix second_derivative_matrix(const Grid& g, int order) {
  return second_derivative_matrix(g, stencil_order_from_int(order));
}

/// Trapezoidal rule over the mesh. Mirror nodes are summed in pairs so odd
/// functions integrate to exactly zero.
inline double quadrature(const GridFunction& f) {
  const auto v = f.values();
  const std::size_t n = v.size();
  if (n == 0) return 0.0;
  const std::size_t m = (n - 1) / 2;
  double s = v[m];
  for (std::size_t j = 1; j < m; ++j) s += v[m + j] + v[m - j];
  if (m > 0) s += 0.5 * (v[n - 1] + v[0]);
  return s * f.grid().dx();
}

/// Trapezoidal inner product, paired like quadrature().
inline double inner(const GridFunction& a, const GridFunction& b) {
  const auto u = a.values();
  const auto v = b.values();
  const std::size_t n = u.size();
  if (n == 0) return 0.0;
  const std::size_t m = (n - 1) / 2;
  double s = u[m] * v[m];
  for (std::size_t j = 1; j < m; ++j) s += u[m + j] * v[m + j] + u[m - j] * v[m - j];
  if (m > 0) s += 0.5 * (u[n - 1] * v[n - 1] + u[0] * v[0]);
  return s * a.grid().dx();
}

inline double l2_norm(const GridFunction& f) { return std::sqrt(inner(f, f)); }

inline double max_abs(const GridFunction& f) {
  double m = 0.0;
  for (double v : f.values()) m = std::max(m, std::abs(v));
  return m;
}

/// Integral of |f|^q.
inline double lq_norm_pow(const GridFunction& f, double q) {
  GridFunction g(f.grid());
  for (std::size_t i = 0; i < f.size(); ++i) g[i] = std::pow(std::abs(f[i]), q);
  return quadrature(g);
}

inline GridFunction reflect(const GridFunction& f) {
  GridFunction out(f.grid());
  const std::size_t n = f.size();
  for (std::size_t i = 0; i < n; ++i) out[i] = f[n - 1 - i];
  return out;
}

inline GridFunction symmetrize(const GridFunction& f) {
  GridFunction out(f.grid());
  const std::size_t n = f.size();
  for (std::size_t i = 0; i < n; ++i) out[i] = 0.5 * (f[i] + f[n - 1 - i]);
  return out;
}

/// f - symmetrize(f), so the two parts add back to f exactly.
inline GridFunction antisymmetric_part(const GridFunction& f) {
  GridFunction out(f.grid());
  const std::size_t n = f.size();
  for (std::size_t i = 0; i < n; ++i) out[i] = f[i] - 0.5 * (f[i] + f[n - 1 - i]);
  return out;
}

/// Local cubic Lagrange interpolation of f at x; zero outside the mesh.
inline double interpolate(const GridFunction& f, double x) {
  const Grid& g = f.grid();
  const double u = x / g.dx() + static_cast<double>(g.center());
  const auto n = static_cast<std::ptrdiff_t>(g.size());
  if (u < 0.0 || u > static_cast<double>(n - 1)) return 0.0;
  auto i = static_cast<std::ptrdiff_t>(std::floor(u));
  i = std::clamp<std::ptrdiff_t>(i - 1, 0, std::max<std::ptrdiff_t>(n - 4, 0));
  const double t = u - static_cast<double>(i);
  auto at = [&](std::ptrdiff_t k) { return k < n ? f[static_cast<std::size_t>(k)] : 0.0; };
  const double f0 = at(i), f1 = at(i + 1), f2 = at(i + 2), f3 = at(i + 3);
  return f0 * (t - 1) * (t - 2) * (t - 3) / -6.0 + f1 * t * (t - 2) * (t - 3) / 2.0 +
         f2 * t * (t - 1) * (t - 3) / -2.0 + f3 * t * (t - 1) * (t - 2) / 6.0;
}

/// f carried onto another grid by cubic interpolation.
inline GridFunction resample(const GridFunction& f, const Grid& target) {
  return GridFunction::sample(target, [&](double x) { return interpolate(f, x); });
}

inline GridFunction apply(const SymBandMatrix& a, const GridFunction& f) {
  GridFunction out(f.grid());
  a.multiply(f.values(), out.values());
  return out;
}

}  // namespace nlsbif
