#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "nlsbif/error.hpp"

namespace nlsbif {

/// Symmetric banded matrix stored by upper diagonals: `band(k)[i] == A(i, i+k)`.
class SymBandMatrix {
 public:
  SymBandMatrix() = default;
  SymBandMatrix(std::size_t n, std::size_t bandwidth)
      : n_(n), b_(bandwidth), diags_(bandwidth + 1) {
    for (std::size_t k = 0; k <= b_; ++k) diags_[k].assign(n_ > k ? n_ - k : 0, 0.0);
  }

  std::size_t size() const noexcept { return n_; }
  std::size_t bandwidth() const noexcept { return b_; }

  std::span<double> band(std::size_t k) { return diags_[k]; }
  std::span<const double> band(std::size_t k) const { return diags_[k]; }
  std::span<double> diagonal() { return diags_[0]; }
  std::span<const double> diagonal() const { return diags_[0]; }

  double at(std::size_t i, std::size_t j) const {
    if (i > j) std::swap(i, j);
    const std::size_t k = j - i;
    if (k > b_ || j >= n_) return 0.0;
    return diags_[k][i];
  }

  void set(std::size_t i, std::size_t j, double v) {
    if (i > j) std::swap(i, j);
    diags_[j - i][i] = v;
  }

  void add_diagonal(std::span<const double> d) {
    for (std::size_t i = 0; i < n_; ++i) diags_[0][i] += d[i];
  }
  void shift(double s) {
    for (auto& v : diags_[0]) v += s;
  }
  void scale(double s) {
    for (auto& d : diags_)
      for (auto& v : d) v *= s;
  }

  void multiply(std::span<const double> x, std::span<double> y) const {
    for (std::size_t i = 0; i < n_; ++i) y[i] = diags_[0][i] * x[i];
    for (std::size_t k = 1; k <= b_; ++k) {
      const auto& d = diags_[k];
      for (std::size_t i = 0; i + k < n_; ++i) {
        y[i] += d[i] * x[i + k];
        y[i + k] += d[i] * x[i];
      }
    }
  }

  std::vector<double> operator*(std::span<const double> x) const {
    std::vector<double> y(n_);
    multiply(x, y);
    return y;
  }

  /// True when A(i,j) == A(n-1-i, n-1-j) exactly, i.e. A commutes with the node reversal.
  bool commutes_with_reflection() const {
    for (std::size_t k = 0; k <= b_; ++k) {
      const auto& d = diags_[k];
      const std::size_t len = d.size();
      for (std::size_t i = 0; i < len; ++i)
        if (d[i] != d[len - 1 - i]) return false;
    }
    return true;
  }

  /// Gershgorin interval containing the whole spectrum.
  std::pair<double, double> gershgorin() const {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t i = 0; i < n_; ++i) {
      double r = 0.0;
      for (std::size_t k = 1; k <= b_; ++k) {
        if (i + k < n_) r += std::abs(diags_[k][i]);
        if (i >= k) r += std::abs(diags_[k][i - k]);
      }
      lo = std::min(lo, diags_[0][i] - r);
      hi = std::max(hi, diags_[0][i] + r);
    }
    return {lo, hi};
  }

  double max_abs() const {
    double m = 0.0;
    for (const auto& d : diags_)
      for (double v : d) m = std::max(m, std::abs(v));
    return m;
  }

 private:
  std::size_t n_ = 0;
  std::size_t b_ = 0;
  std::vector<std::vector<double>> diags_;
};

/// Number of eigenvalues of `a` strictly below `mu`, from the inertia of an
/// unpivoted LDL^T factorization of (a - mu I). Zero pivots are nudged to a
/// tiny negative value, the usual Sturm-count convention.
inline std::size_t count_below(const SymBandMatrix& a, double mu) {
  const std::size_t n = a.size();
  const std::size_t b = a.bandwidth();
  const double tiny = std::numeric_limits<double>::min() / std::numeric_limits<double>::epsilon();
  // rows of L below the diagonal, kept in a ring of width b: l[i][k-1] = L(i, i-k)
  std::vector<double> d(n);
  std::vector<double> lrow((b + 1) * b, 0.0);  // ring buffer of the last b+1 rows
  std::size_t count = 0;
  auto L = [&](std::size_t i, std::size_t k) -> double& { return lrow[(i % (b + 1)) * b + (k - 1)]; };
  for (std::size_t i = 0; i < n; ++i) {
    // L(i, j) for j in [i-b, i-1]
    const std::size_t jmin = i >= b ? i - b : 0;
    for (std::size_t j = jmin; j < i; ++j) {
      double s = a.at(i, j);
      const std::size_t kmin = i >= b ? i - b : 0;
      for (std::size_t q = std::max(kmin, j >= b ? j - b : 0); q < j; ++q) s -= L(i, i - q) * L(j, j - q) * d[q];
      L(i, i - j) = s / d[j];
    }
    double s = a.at(i, i) - mu;
    for (std::size_t q = jmin; q < i; ++q) s -= L(i, i - q) * L(i, i - q) * d[q];
    if (s == 0.0) s = -tiny;
    d[i] = s;
    if (s < 0.0) ++count;
  }
  return count;
}

/// LU factorization with partial pivoting of a banded matrix (LAPACK gbtrf layout).
class BandLU {
 public:
  explicit BandLU(const SymBandMatrix& a, double shift = 0.0)
      : n_(a.size()), kl_(a.bandwidth()), ku_(a.bandwidth()), w_(2 * kl_ + ku_ + 1),
        ab_(n_ * w_, 0.0), piv_(n_) {
    for (std::size_t i = 0; i < n_; ++i) {
      const std::size_t jlo = i >= kl_ ? i - kl_ : 0;
      const std::size_t jhi = std::min(n_ - 1, i + ku_);
      for (std::size_t j = jlo; j <= jhi; ++j) at(i, j) = a.at(i, j) - (i == j ? shift : 0.0);
    }
    factor();
  }

  std::size_t size() const noexcept { return n_; }
  bool singular() const noexcept { return singular_; }
  double min_abs_pivot() const noexcept { return min_pivot_; }

  void solve_in_place(std::span<double> x) const {
    if (singular_) throw Error(Errc::SolveFailure, "banded LU has a zero pivot");
    for (std::size_t i = 0; i < n_; ++i) {
      const std::size_t p = piv_[i];
      if (p != i) std::swap(x[i], x[p]);
      const std::size_t rmax = std::min(n_ - 1, i + kl_);
      for (std::size_t r = i + 1; r <= rmax; ++r) x[r] -= at(r, i) * x[i];
    }
    for (std::size_t ii = n_; ii-- > 0;) {
      double s = x[ii];
      const std::size_t jmax = std::min(n_ - 1, ii + kl_ + ku_);
      for (std::size_t j = ii + 1; j <= jmax; ++j) s -= at(ii, j) * x[j];
      x[ii] = s / at(ii, ii);
    }
  }

  std::vector<double> solve(std::span<const double> rhs) const {
    std::vector<double> x(rhs.begin(), rhs.end());
    solve_in_place(x);
    return x;
  }

 private:
  double& at(std::size_t i, std::size_t j) { return ab_[i * w_ + (j + kl_ - i)]; }
  double at(std::size_t i, std::size_t j) const { return ab_[i * w_ + (j + kl_ - i)]; }

  void factor() {
    double scale = 0.0;
    for (double v : ab_) scale = std::max(scale, std::abs(v));
    const double zero_tol = scale * std::numeric_limits<double>::epsilon() * 1e-6;
    min_pivot_ = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n_; ++i) {
      const std::size_t rmax = std::min(n_ - 1, i + kl_);
      std::size_t p = i;
      for (std::size_t r = i + 1; r <= rmax; ++r)
        if (std::abs(at(r, i)) > std::abs(at(p, i))) p = r;
      piv_[i] = p;
      const std::size_t jmax = std::min(n_ - 1, i + kl_ + ku_);
      if (p != i)
        for (std::size_t j = i; j <= jmax; ++j) std::swap(at(i, j), at(p, j));
      const double piv = at(i, i);
      min_pivot_ = std::min(min_pivot_, std::abs(piv));
      if (std::abs(piv) <= zero_tol) {
        singular_ = true;
        continue;
      }
      for (std::size_t r = i + 1; r <= rmax; ++r) {
        const double l = at(r, i) / piv;
        at(r, i) = l;
        if (l == 0.0) continue;
        for (std::size_t j = i + 1; j <= jmax; ++j) at(r, j) -= l * at(i, j);
      }
    }
  }

  std::size_t n_, kl_, ku_, w_;
  std::vector<double> ab_;
  std::vector<std::size_t> piv_;
  bool singular_ = false;
  double min_pivot_ = 0.0;
};

}  // namespace nlsbif
