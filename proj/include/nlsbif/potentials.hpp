#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "nlsbif/eigen.hpp"
#include "nlsbif/error.hpp"
#include "nlsbif/grid.hpp"

namespace nlsbif {

/// Which form of the stationary equation E refers to.
///  Standard:    -phi'' + V phi + sigma |phi|^{2p} phi + E phi = 0
///  HalfScaled:  (1/2)(-phi'' + V phi + sigma |phi|^{2p} phi) + E phi = 0
/// HalfScaled with sigma = -2 is the convention in which the double-well
/// reference numbers are usually quoted; its E is half the Standard E.
enum class Normalization { Standard, HalfScaled };

/// Factor c multiplying the differential part: F = c(-phi'' + V phi + ...) + E phi.
constexpr double operator_scale(Normalization n) { return n == Normalization::Standard ? 1.0 : 0.5; }

/// Natural cubic spline through (x_i, y_i); value and first two derivatives.
class CubicSpline {
 public:
  CubicSpline() = default;
  CubicSpline(std::vector<double> x, std::vector<double> y) : x_(std::move(x)), y_(std::move(y)) {
    const std::size_t n = x_.size();
    if (n < 3 || y_.size() != n) throw Error(Errc::InvalidArgument, "spline needs >= 3 matching samples");
    for (std::size_t i = 1; i < n; ++i)
      if (!(x_[i] > x_[i - 1])) throw Error(Errc::InvalidArgument, "spline abscissae must increase strictly");
    m_.assign(n, 0.0);
    // tridiagonal system for second derivatives, natural end conditions
    std::vector<double> c(n, 0.0), d(n, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
      const double h0 = x_[i] - x_[i - 1], h1 = x_[i + 1] - x_[i];
      const double a = h0 / 6.0, b = (h0 + h1) / 3.0, cc = h1 / 6.0;
      const double r = (y_[i + 1] - y_[i]) / h1 - (y_[i] - y_[i - 1]) / h0;
      const double denom = b - a * c[i - 1];
      c[i] = cc / denom;
      d[i] = (r - a * d[i - 1]) / denom;
    }
    for (std::size_t i = n - 1; i-- > 1;) m_[i] = d[i] - c[i] * m_[i + 1];
  }

  double front() const { return x_.front(); }
  double back() const { return x_.back(); }

  /// derivative order 0, 1 or 2; zero outside the tabulated range.
  double eval(double x, int deriv = 0) const {
    if (x_.empty() || x < x_.front() || x > x_.back()) return 0.0;
    const auto it = std::upper_bound(x_.begin(), x_.end(), x);
    std::size_t i = it == x_.begin() ? 0 : static_cast<std::size_t>(it - x_.begin()) - 1;
    if (i >= x_.size() - 1) i = x_.size() - 2;
    const double h = x_[i + 1] - x_[i];
    const double a = (x_[i + 1] - x) / h, b = (x - x_[i]) / h;
    switch (deriv) {
      case 0:
        return a * y_[i] + b * y_[i + 1] + ((a * a * a - a) * m_[i] + (b * b * b - b) * m_[i + 1]) * h * h / 6.0;
      case 1:
        return (y_[i + 1] - y_[i]) / h - (3.0 * a * a - 1.0) / 6.0 * h * m_[i] + (3.0 * b * b - 1.0) / 6.0 * h * m_[i + 1];
      default:
        return a * m_[i] + b * m_[i + 1];
    }
  }

 private:
  std::vector<double> x_, y_, m_;
};

struct SingleWellSech2 {};
struct DoubleWellSech2 {
  double s = 0.0;
};
struct Tabulated {
  CubicSpline spline;
};

/// Symmetric external potential with analytic or spline derivatives.
class Potential {
 public:
  using Kind = std::variant<SingleWellSech2, DoubleWellSech2, Tabulated>;

  static Potential single_well() { return Potential(SingleWellSech2{}); }

  static Potential double_well(double s) {
    if (!(s >= 0.0)) throw Error(Errc::InvalidArgument, "double-well separation must be >= 0");
    return Potential(DoubleWellSech2{s});
  }

  /// Tabulated samples; the range must be symmetric and V must have decayed
  /// below `edge_tol` at both ends.
  static Potential tabulated(std::vector<double> x, std::vector<double> v, double edge_tol = 1e-6) {
    if (x.size() < 3 || x.size() != v.size()) throw Error(Errc::InvalidArgument, "tabulated potential needs >= 3 rows");
    if (std::abs(x.front() + x.back()) > 1e-9 * std::max(1.0, std::abs(x.back())))
      throw Error(Errc::InvalidArgument, "tabulated potential must cover a symmetric range");
    if (std::abs(v.front()) > edge_tol || std::abs(v.back()) > edge_tol)
      throw Error(Errc::InvalidArgument, "tabulated potential does not decay at the range ends");
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!std::isfinite(v[i]) || !std::isfinite(x[i])) throw Error(Errc::NonFiniteInput, "tabulated potential has non-finite entries");
      if (std::abs(v[i] - v[v.size() - 1 - i]) > 1e-8 * std::max(1.0, std::abs(v[i])))
        throw Error(Errc::InvalidArgument, "tabulated potential is not even in x");
    }
    return Potential(Tabulated{CubicSpline(std::move(x), std::move(v))});
  }

  /// V identically zero, as a tabulated table.
  static Potential zero(double half_range = 1.0) {
    return tabulated({-half_range, 0.0, half_range}, {0.0, 0.0, 0.0});
  }

  /// Two-column text file "x V(x)"; '#' starts a comment.
  static Potential from_file(const std::string& path, double edge_tol = 1e-6) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::IoError, "cannot open potential table " + path);
    std::vector<double> xs, vs;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
      std::istringstream ss(line);
      double x, v;
      if (!(ss >> x)) continue;
      if (!(ss >> v)) throw Error(Errc::InvalidArgument, path + ":" + std::to_string(lineno) + ": expected two columns");
      xs.push_back(x);
      vs.push_back(v);
    }
    return tabulated(std::move(xs), std::move(vs), edge_tol);
  }

  const Kind& kind() const noexcept { return kind_; }
  bool is_double_well_kind() const noexcept { return std::holds_alternative<DoubleWellSech2>(kind_); }
  bool is_zero() const {
    if (auto t = std::get_if<Tabulated>(&kind_)) {
      for (double x : {t->spline.front(), 0.0, 0.5 * t->spline.back()})
        if (t->spline.eval(x) != 0.0) return false;
      return true;
    }
    return false;
  }

  std::string describe() const {
    if (std::holds_alternative<SingleWellSech2>(kind_)) return "single_well";
    if (auto d = std::get_if<DoubleWellSech2>(&kind_)) {
      std::ostringstream os;
      os.precision(17);
      os << "double_well(s=" << d->s << ")";
      return os.str();
    }
    return is_zero() ? "zero" : "tabulated";
  }

  /// V, V' or V'' at x.
  double operator()(double x, int deriv = 0) const {
    return std::visit(
        [&](const auto& k) -> double {
          using K = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<K, SingleWellSech2>) {
            return well(x, deriv);
          } else if constexpr (std::is_same_v<K, DoubleWellSech2>) {
            // V0(x+s) + V0(-x+s); the inner sign flips odd derivatives
            const double sgn = deriv % 2 == 0 ? 1.0 : -1.0;
            return well(x + k.s, deriv) + sgn * well(-x + k.s, deriv);
          } else {
            return k.spline.eval(x, deriv);
          }
        },
        kind_);
  }

  double value(double x) const { return (*this)(x, 0); }
  double first_derivative(double x) const { return (*this)(x, 1); }
  double second_derivative(double x) const { return (*this)(x, 2); }

  GridFunction sample(const Grid& g, int deriv = 0) const {
    return GridFunction::sample(g, [&](double x) { return (*this)(x, deriv); });
  }

 private:
  explicit Potential(Kind k) : kind_(std::move(k)) {}

  // V0 = -sech^2 and its derivatives
  static double well(double x, int deriv) {
    const double sech = 1.0 / std::cosh(x);
    const double s2 = sech * sech;
    const double t = std::tanh(x);
    switch (deriv) {
      case 0: return -s2;
      case 1: return 2.0 * s2 * t;
      default: return 2.0 * s2 * (1.0 - 3.0 * t * t);
    }
  }

  Kind kind_;
};

/// Separation beyond which the split sech^2 potential has two wells: arccosh(sqrt(3/2)).
inline double critical_separation() { return std::acosh(std::sqrt(1.5)); }

struct DoubleWellCheck {
  bool is_double = false;
  double s_critical = 0.0;
};

inline DoubleWellCheck is_double_well(const Potential& v) {
  const auto* d = std::get_if<DoubleWellSech2>(&v.kind());
  if (!d) throw Error(Errc::UnsupportedPotential, "is_double_well needs a DoubleWellSech2 potential");
  const double sc = critical_separation();
  return {d->s > sc, sc};
}

/// Positive minimum of the split well for s > s*, found by bisection on V'.
inline double double_well_minimum(const Potential& v) {
  const auto* d = std::get_if<DoubleWellSech2>(&v.kind());
  if (!d) throw Error(Errc::UnsupportedPotential, "double_well_minimum needs a DoubleWellSech2 potential");
  if (d->s <= critical_separation()) return 0.0;
  // V' < 0 just right of 0 (local max) and V' > 0 far out
  double lo = 1e-9, hi = d->s + 5.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (v.first_derivative(mid) < 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

struct LinearModes {
  double E0 = 0.0;
  std::optional<double> E1;
  GridFunction psi0;
  std::optional<GridFunction> psi1;
};

/// Lowest k in {1,2} bound states of -d^2/dx^2 + V with the order-2 stencil.
/// Reported E values follow `norm` (HalfScaled halves them).
inline LinearModes solve_linear_modes(const Potential& v, const Grid& g, int k,
                                      Normalization norm = Normalization::Standard) {
  if (k != 1 && k != 2) throw Error(Errc::InvalidArgument, "k must be 1 or 2");
  auto op = second_derivative_matrix(g, StencilOrder::Second);
  op.add_diagonal(v.sample(g).values());
  const double c = operator_scale(norm);
  const double inv_sqrt_dx = 1.0 / std::sqrt(g.dx());

  auto even = lowest_eigenpairs(op, 1, Parity::Even);
  if (even.values.empty() || !(even.values[0] < 0.0)) throw Error(Errc::NoBoundState, "no eigenvalue below the continuum edge");
  LinearModes out;
  out.E0 = -c * even.values[0];
  out.psi0 = GridFunction(g, even.vectors[0]);
  out.psi0 *= inv_sqrt_dx;
  if (out.psi0[g.center()] < 0.0) out.psi0 *= -1.0;
  out.psi0 *= 1.0 / l2_norm(out.psi0);

  if (k == 2) {
    auto odd = lowest_eigenpairs(op, 1, Parity::Odd);
    if (!odd.values.empty() && odd.values[0] < 0.0) {
      out.E1 = -c * odd.values[0];
      GridFunction p1(g, odd.vectors[0]);
      p1 *= inv_sqrt_dx;
      if (p1[g.center() + 1] < 0.0) p1 *= -1.0;
      p1 *= 1.0 / l2_norm(p1);
      out.psi1 = std::move(p1);
    }
  }
  return out;
}

struct SplittingRow {
  double s = 0.0;
  double E0 = 0.0;
  std::optional<double> E1;
  double splitting = 0.0;  // E0 - E1, zero when E1 is absent
  /// L2 distance of psi0 from the symmetrized single-well mode (psi0(x+s) + psi0(-x+s))/sqrt2
  double symmetric_mode_distance = 0.0;
};

inline std::vector<SplittingRow> double_well_splitting(const std::vector<double>& s_list, const Grid& g,
                                                       Normalization norm = Normalization::Standard) {
  const auto single = solve_linear_modes(Potential::single_well(), g, 1, norm);
  // single-well mode, interpolated linearly at shifted abscissae
  auto psi_single = [&](double x) {
    const double u = x / g.dx() + static_cast<double>(g.center());
    if (u <= 0.0 || u >= static_cast<double>(g.size() - 1)) return 0.0;
    const auto i = static_cast<std::size_t>(u);
    const double f = u - static_cast<double>(i);
    return (1.0 - f) * single.psi0[i] + f * single.psi0[i + 1];
  };
  std::vector<SplittingRow> rows;
  for (double s : s_list) {
    if (!(s >= 0.0)) throw Error(Errc::InvalidArgument, "separation must be >= 0");
    auto modes = solve_linear_modes(Potential::double_well(s), g, 2, norm);
    SplittingRow r;
    r.s = s;
    r.E0 = modes.E0;
    r.E1 = modes.E1;
    r.splitting = modes.E1 ? modes.E0 - *modes.E1 : 0.0;
    auto sym = GridFunction::sample(g, [&](double x) { return (psi_single(x + s) + psi_single(-x + s)) / std::sqrt(2.0); });
    r.symmetric_mode_distance = l2_norm(modes.psi0 - sym);
    rows.push_back(r);
  }
  return rows;
}

}  // namespace nlsbif
