#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "nlsbif/banded.hpp"
#include "nlsbif/eigen.hpp"
#include "nlsbif/error.hpp"
#include "nlsbif/grid.hpp"
#include "nlsbif/potentials.hpp"

namespace nlsbif {

struct ProblemParams {
  double sigma = -1.0;  // focusing when negative
  double p = 1.0;       // nonlinearity |phi|^{2p} phi
  Normalization normalization = Normalization::Standard;
  StencilOrder order = StencilOrder::Fourth;
  /// Multiplies the nonlinear term; 1 in every physical run. Setting it to 0
  /// turns F into the linear operator, which tests use to check linear modes.
  double nonlinear_weight = 1.0;

  void validate() const {
    if (!(p > 0.0) || !std::isfinite(p)) throw Error(Errc::InvalidArgument, "p must be positive");
    if (sigma == 0.0 || !std::isfinite(sigma)) throw Error(Errc::InvalidArgument, "sigma must be nonzero");
  }

  bool focusing() const noexcept { return sigma < 0.0; }
  double scale() const noexcept { return operator_scale(normalization); }
};

/// |x|^q with a fast path for the even integer powers that dominate runs.
inline double pow_abs(double x, double q) {
  const double a = std::abs(x);
  if (q == 2.0) return a * a;
  if (q == 4.0) return a * a * a * a;
  if (q == 6.0) {
    const double a2 = a * a;
    return a2 * a2 * a2;
  }
  if (q == 10.0) {
    const double a2 = a * a, a4 = a2 * a2;
    return a4 * a4 * a2;
  }
  if (q == 0.0) return 1.0;
  return std::pow(a, q);
}

/// Discretized stationary problem on a fixed grid: potential samples, the
/// -d^2/dx^2 stencil, and the nonlinear parameters.
///
/// All operators are in the configured normalization:
///   F(phi, E) = c(-phi'' + V phi + sigma |phi|^{2p} phi) + E phi
///   L+        = c(-d^2 + V + (2p+1) sigma |phi|^{2p}) + E
///   L-        = c(-d^2 + V + sigma |phi|^{2p}) + E
/// with c = 1 (Standard) or 1/2 (HalfScaled).
class Model {
 public:
  Model(Grid grid, Potential potential, ProblemParams params)
      : grid_(grid), potential_(std::move(potential)), params_(params) {
    params_.validate();
    v_ = potential_.sample(grid_);
    xdv_ = potential_.sample(grid_, 1);
    for (std::size_t i = 0; i < grid_.size(); ++i) xdv_[i] *= grid_.x(i);
    lap_ = second_derivative_matrix(grid_, params_.order);
  }

  const Grid& grid() const noexcept { return grid_; }
  const Potential& potential() const noexcept { return potential_; }
  const ProblemParams& params() const noexcept { return params_; }
  const GridFunction& v() const noexcept { return v_; }
  /// x V'(x) samples, used by the Pohozaev diagnostic.
  const GridFunction& x_dv() const noexcept { return xdv_; }
  const SymBandMatrix& laplacian() const noexcept { return lap_; }
  double scale() const noexcept { return params_.scale(); }

  /// Same potential and parameters on another grid.
  Model regridded(const Grid& g) const { return Model(g, potential_, params_); }
  Model with_params(const ProblemParams& p) const { return Model(grid_, potential_, p); }

  GridFunction residual(const GridFunction& phi, double E) const {
    if (!phi.all_finite()) throw Error(Errc::NonFiniteInput, "state contains NaN or Inf");
    if (!std::isfinite(E)) throw Error(Errc::NonFiniteInput, "E is not finite");
    const double c = scale();
    const double sw = params_.sigma * params_.nonlinear_weight;
    const double q = 2.0 * params_.p;
    GridFunction out = apply(lap_, phi);
    for (std::size_t i = 0; i < phi.size(); ++i) {
      const double f = phi[i];
      out[i] = c * (out[i] + v_[i] * f + sw * pow_abs(f, q) * f) + E * f;
    }
    return out;
  }

  SymBandMatrix lplus(const GridFunction& phi, double E) const { return linearized(phi, E, 2.0 * params_.p + 1.0); }
  SymBandMatrix lminus(const GridFunction& phi, double E) const { return linearized(phi, E, 1.0); }

  /// The linear operator c(-d^2 + V) + E.
  SymBandMatrix linear_operator(double E) const {
    SymBandMatrix m = lap_;
    m.add_diagonal(v_.values());
    m.scale(scale());
    m.shift(E);
    return m;
  }

 private:
  SymBandMatrix linearized(const GridFunction& phi, double E, double factor) const {
    SymBandMatrix m = lap_;
    const double c = scale();
    const double sw = params_.sigma * params_.nonlinear_weight * factor;
    const double q = 2.0 * params_.p;
    auto d = m.diagonal();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += v_[i] + sw * pow_abs(phi[i], q);
    m.scale(c);
    m.shift(E);
    return m;
  }

  Grid grid_;
  Potential potential_;
  ProblemParams params_;
  GridFunction v_, xdv_;
  SymBandMatrix lap_;
};

enum class OperatorTag { Lplus, Lminus, Other };

struct LinearizedSpectrum {
  OperatorTag tag = OperatorTag::Other;
  std::vector<double> eigenvalues;
  std::vector<GridFunction> eigenfunctions;  // unit L2 norm
  std::vector<Parity> parities;
  std::size_t n_negative = 0;  // eigenvalues below -zero_tol, over the whole operator
};

/// Tolerance under which an eigenvalue counts as zero rather than negative.
inline constexpr double kZeroEigenTol = 1e-8;

inline LinearizedSpectrum lowest_eigenpairs(const SymBandMatrix& op, const Grid& g, std::size_t k,
                                            Parity parity = Parity::Any, OperatorTag tag = OperatorTag::Other) {
  auto pairs = lowest_eigenpairs(op, k, parity);
  LinearizedSpectrum out;
  out.tag = tag;
  out.eigenvalues = std::move(pairs.values);
  out.parities = std::move(pairs.parities);
  const double inv = 1.0 / std::sqrt(g.dx());
  for (auto& v : pairs.vectors) {
    GridFunction f(g, std::move(v));
    f *= inv;
    f *= 1.0 / l2_norm(f);
    out.eigenfunctions.push_back(std::move(f));
  }
  out.n_negative = count_below(op, -kZeroEigenTol);
  return out;
}

/// Even/odd classification of a grid function, nullopt when neither.
inline std::optional<Parity> parity_of(const GridFunction& f, double rel_tol = 1e-10) {
  const double nrm = l2_norm(f);
  if (nrm == 0.0) return Parity::Even;
  if (l2_norm(antisymmetric_part(f)) <= rel_tol * nrm) return Parity::Even;
  if (l2_norm(symmetrize(f)) <= rel_tol * nrm) return Parity::Odd;
  return std::nullopt;
}

struct ComplementSolve {
  GridFunction w;
  double relative_residual = 0.0;  // ||P(op w - rhs)|| / ||rhs||
  bool used_parity_subspace = false;
};

/// Solves op w = rhs for w orthogonal to kernel_vec, where op is singular (or
/// nearly so) along kernel_vec and rhs is orthogonal to it. A zero kernel
/// vector means a plain solve. When op commutes with reflection and the
/// kernel and rhs have opposite parities, the solve runs in the rhs parity
/// subspace, where op is invertible; otherwise a projected LU solve with one
/// refinement sweep is used.
inline ComplementSolve solve_on_complement(const SymBandMatrix& op, const GridFunction& rhs,
                                           const GridFunction& kernel_vec) {
  const Grid& g = rhs.grid();
  const double rnorm = l2_norm(rhs);
  const double knorm = l2_norm(kernel_vec);
  ComplementSolve out{GridFunction(g), 0.0, false};
  if (rnorm == 0.0) return out;

  GridFunction k = kernel_vec;
  if (knorm > 0.0) {
    k *= 1.0 / knorm;
    if (std::abs(inner(rhs, k)) > 1e-8 * rnorm)
      throw Error(Errc::RhsNotOrthogonal, "right-hand side has a component along the kernel vector");
  }
  auto project = [&](GridFunction& f) {
    if (knorm > 0.0) f -= inner(f, k) * k;
  };

  std::optional<Parity> rp, kp;
  if (knorm > 0.0 && op.size() % 2 == 1 && op.commutes_with_reflection()) {
    rp = parity_of(rhs);
    kp = parity_of(k);
  }
  if (rp && kp && *rp != *kp) {
    out.w = GridFunction(g, solve_in_parity(op, rhs.values(), *rp));
    out.used_parity_subspace = true;
  } else {
    BandLU lu(op);
    std::optional<BandLU> shifted;
    const BandLU* solver = &lu;
    if (lu.singular()) {
      shifted.emplace(op, -1e-12 * std::max(1.0, op.max_abs()));
      if (shifted->singular()) throw Error(Errc::SolveFailure, "operator is singular");
      solver = &*shifted;
    }
    GridFunction w(g, solver->solve(rhs.values()));
    project(w);
    for (int sweep = 0; sweep < 2; ++sweep) {
      GridFunction r = rhs - apply(op, w);
      project(r);
      GridFunction dw(g, solver->solve(r.values()));
      project(dw);
      w += dw;
    }
    out.w = std::move(w);
  }
  for (double x : out.w.values())
    if (!std::isfinite(x)) throw Error(Errc::SolveFailure, "complement solve produced non-finite values");
  GridFunction r = apply(op, out.w) - rhs;
  project(r);
  out.relative_residual = l2_norm(r) / rnorm;
  return out;
}

}  // namespace nlsbif
