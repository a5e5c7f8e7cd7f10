#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "nlsbif/banded.hpp"
#include "nlsbif/error.hpp"
#include "nlsbif/grid.hpp"

namespace nlsbif {

enum class Parity { Any, Even, Odd };

/// Restriction of a reflection-symmetric banded operator to the even or odd
/// subspace, expressed in an orthonormal half-grid basis:
///   even: e_m, (e_{m+j} + e_{m-j})/sqrt2     odd: (e_{m+j} - e_{m-j})/sqrt2
/// The reduced matrix keeps the original bandwidth.
class ParityReduction {
 public:
  ParityReduction(std::size_t n, Parity parity) : n_(n), m_((n - 1) / 2), parity_(parity) {
    if (parity == Parity::Any) throw Error(Errc::InvalidArgument, "parity reduction needs Even or Odd");
    if (n % 2 == 0) throw Error(Errc::InvalidGrid, "parity reduction needs an odd node count");
  }

  std::size_t reduced_size() const noexcept { return parity_ == Parity::Even ? m_ + 1 : m_; }
  Parity parity() const noexcept { return parity_; }

  SymBandMatrix reduce(const SymBandMatrix& a) const {
    const std::size_t r = reduced_size();
    const std::size_t b = a.bandwidth();
    SymBandMatrix out(r, b);
    for (std::size_t j = 0; j < r; ++j) {
      for (std::size_t k = j; k <= std::min(r - 1, j + b); ++k) out.set(j, k, reduced_entry(a, j, k));
    }
    return out;
  }

  std::vector<double> restrict_vector(std::span<const double> f) const {
    std::vector<double> c(reduced_size());
    const double s = 1.0 / std::sqrt(2.0);
    if (parity_ == Parity::Even) {
      c[0] = f[m_];
      for (std::size_t j = 1; j <= m_; ++j) c[j] = s * (f[m_ + j] + f[m_ - j]);
    } else {
      for (std::size_t j = 1; j <= m_; ++j) c[j - 1] = s * (f[m_ + j] - f[m_ - j]);
    }
    return c;
  }

  std::vector<double> expand_vector(std::span<const double> c) const {
    std::vector<double> f(n_, 0.0);
    const double s = 1.0 / std::sqrt(2.0);
    if (parity_ == Parity::Even) {
      f[m_] = c[0];
      for (std::size_t j = 1; j <= m_; ++j) f[m_ + j] = f[m_ - j] = s * c[j];
    } else {
      for (std::size_t j = 1; j <= m_; ++j) {
        f[m_ + j] = s * c[j - 1];
        f[m_ - j] = -f[m_ + j];
      }
    }
    return f;
  }

 private:
  // basis vector index j -> (node offset, weight) pairs
  double reduced_entry(const SymBandMatrix& a, std::size_t j, std::size_t k) const {
    if (parity_ == Parity::Even) {
      if (j == 0 && k == 0) return a.at(m_, m_);
      if (j == 0) return std::sqrt(0.5) * (a.at(m_, m_ + k) + a.at(m_, m_ - k));
      return 0.5 * (a.at(m_ + j, m_ + k) + a.at(m_ + j, m_ - k) + a.at(m_ - j, m_ + k) + a.at(m_ - j, m_ - k));
    }
    const std::size_t jj = j + 1, kk = k + 1;
    return 0.5 * (a.at(m_ + jj, m_ + kk) - a.at(m_ + jj, m_ - kk) - a.at(m_ - jj, m_ + kk) + a.at(m_ - jj, m_ - kk));
  }

  std::size_t n_, m_;
  Parity parity_;
};

struct EigenPairs {
  std::vector<double> values;                // ascending
  std::vector<std::vector<double>> vectors;  // Euclidean unit vectors
  std::vector<Parity> parities;              // Even/Odd when known, Any otherwise
};

namespace detail {

/// Sign convention: the first node whose magnitude is within a relative 1e-9
/// of the maximum is made positive.
inline void fix_sign(std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  for (double x : v) {
    if (std::abs(x) >= (1.0 - 1e-9) * m) {
      if (x < 0.0)
        for (auto& y : v) y = -y;
      return;
    }
  }
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

inline void normalize(std::vector<double>& v) {
  const double nrm = std::sqrt(dot(v, v));
  if (nrm > 0.0)
    for (auto& x : v) x /= nrm;
}

/// k-th (0-based) smallest eigenvalue by bisection on inertia counts.
inline double bisect_eigenvalue(const SymBandMatrix& a, std::size_t k, double lo, double hi) {
  const double scale = std::max({std::abs(lo), std::abs(hi), 1.0});
  const double tol = 4.0 * std::numeric_limits<double>::epsilon() * scale;
  for (int it = 0; it < 200 && hi - lo > tol; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (count_below(a, mid) > k)
      hi = mid;
    else
      lo = mid;
  }
  return 0.5 * (lo + hi);
}

/// Inverse iteration at a converged eigenvalue, orthogonalized against `lock`.
inline std::vector<double> inverse_iteration(const SymBandMatrix& a, double lambda,
                                             const std::vector<std::vector<double>>& lock) {
  const std::size_t n = a.size();
  const double scale = std::max(1.0, a.max_abs());
  double delta = 1e-13 * scale;
  std::optional<BandLU> lu;
  for (int attempt = 0; attempt < 8; ++attempt) {
    lu.emplace(a, lambda - delta);
    if (!lu->singular()) break;
    delta *= 10.0;
  }
  if (!lu || lu->singular()) throw Error(Errc::EigenFailure, "inverse iteration could not factor the shifted operator");
  std::vector<double> v(n);
  // smooth deterministic start with no particular symmetry
  for (std::size_t i = 0; i < n; ++i) {
    const double t = (static_cast<double>(i) + 0.5) / static_cast<double>(n);
    v[i] = 1.0 + 0.37 * t + std::sin(7.1 * t + 0.3);
  }
  normalize(v);
  std::vector<double> av(n);
  for (int it = 0; it < 6; ++it) {
    for (const auto& u : lock) {
      const double c = dot(u, v);
      for (std::size_t i = 0; i < n; ++i) v[i] -= c * u[i];
    }
    lu->solve_in_place(v);
    for (double x : v)
      if (!std::isfinite(x)) throw Error(Errc::EigenFailure, "inverse iteration produced non-finite values");
    for (const auto& u : lock) {
      const double c = dot(u, v);
      for (std::size_t i = 0; i < n; ++i) v[i] -= c * u[i];
    }
    normalize(v);
    a.multiply(v, av);
    const double rq = dot(v, av);
    double res = 0.0;
    for (std::size_t i = 0; i < n; ++i) res += (av[i] - rq * v[i]) * (av[i] - rq * v[i]);
    if (std::sqrt(res) <= 1e-10 * scale && it >= 1) break;
  }
  return v;
}

inline EigenPairs lowest_full(const SymBandMatrix& a, std::size_t k) {
  EigenPairs out;
  if (k == 0) return out;
  k = std::min(k, a.size());
  auto [lo, hi] = a.gershgorin();
  lo -= 1.0;
  hi += 1.0;
  for (std::size_t j = 0; j < k; ++j) {
    const double lam = bisect_eigenvalue(a, j, lo, hi);
    out.values.push_back(lam);
    auto v = inverse_iteration(a, lam, out.vectors);
    fix_sign(v);
    out.vectors.push_back(std::move(v));
    out.parities.push_back(Parity::Any);
    lo = lam - 1e-12 * std::max(1.0, std::abs(lam));
  }
  return out;
}

}  // namespace detail

/// The k algebraically smallest eigenpairs of a symmetric banded operator,
/// optionally restricted to even or odd functions. With Parity::Any and a
/// reflection-symmetric operator the even and odd spectra are computed
/// separately and merged, which keeps near-degenerate parity pairs apart.
inline EigenPairs lowest_eigenpairs(const SymBandMatrix& a, std::size_t k, Parity parity = Parity::Any) {
  if (k == 0) throw Error(Errc::InvalidArgument, "k must be >= 1");
  if (parity == Parity::Any) {
    if (a.size() % 2 == 1 && a.size() >= 3 && a.commutes_with_reflection()) {
      auto ev = lowest_eigenpairs(a, k, Parity::Even);
      auto od = lowest_eigenpairs(a, k, Parity::Odd);
      EigenPairs out;
      std::size_t ie = 0, io = 0;
      while (out.values.size() < k && (ie < ev.values.size() || io < od.values.size())) {
        const bool take_even = io >= od.values.size() || (ie < ev.values.size() && ev.values[ie] <= od.values[io]);
        auto& src = take_even ? ev : od;
        std::size_t& idx = take_even ? ie : io;
        out.values.push_back(src.values[idx]);
        out.vectors.push_back(std::move(src.vectors[idx]));
        out.parities.push_back(take_even ? Parity::Even : Parity::Odd);
        ++idx;
      }
      return out;
    }
    return detail::lowest_full(a, k);
  }
  ParityReduction red(a.size(), parity);
  const auto b = red.reduce(a);
  auto sub = detail::lowest_full(b, std::min(k, b.size()));
  EigenPairs out;
  for (std::size_t j = 0; j < sub.values.size(); ++j) {
    out.values.push_back(sub.values[j]);
    auto v = red.expand_vector(sub.vectors[j]);
    detail::fix_sign(v);
    out.vectors.push_back(std::move(v));
    out.parities.push_back(parity);
  }
  return out;
}

/// Solve a x = rhs for x in the given parity subspace (rhs is projected first).
inline std::vector<double> solve_in_parity(const SymBandMatrix& a, std::span<const double> rhs, Parity parity) {
  if (parity == Parity::Any) return BandLU(a).solve(rhs);
  ParityReduction red(a.size(), parity);
  BandLU lu(red.reduce(a));
  auto c = red.restrict_vector(rhs);
  lu.solve_in_place(c);
  return red.expand_vector(c);
}

}  // namespace nlsbif
