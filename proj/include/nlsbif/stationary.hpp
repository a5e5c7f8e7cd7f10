#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include "nlsbif/eigen.hpp"
#include "nlsbif/error.hpp"
#include "nlsbif/grid.hpp"
#include "nlsbif/potentials.hpp"
#include "nlsbif/schrodinger_ops.hpp"

namespace nlsbif {

enum class Symmetry { Even, Odd, None };

inline const char* to_string(Symmetry s) {
  switch (s) {
    case Symmetry::Even: return "even";
    case Symmetry::Odd: return "odd";
    default: return "none";
  }
}

struct StationaryState {
  double E = 0.0;
  GridFunction phi;
  double residual_norm = 0.0;  // L2 norm of F
  double N = 0.0;              // ||phi||^2
  double norm_2p2 = 0.0;       // integral of |phi|^{2p+2}
  double grad_norm2 = 0.0;     // <phi, -D2 phi>, the discrete ||phi'||^2
  double energy = 0.0;
  double stationarity_residual = 0.0;  // |eq. identity| / max(|E| N, tiny)
  double pohozaev_residual = 0.0;      // absolute, see diagnostics()
  double x_cm = 0.0;
  Symmetry symmetry = Symmetry::None;
  int iterations = 0;
  std::vector<double> residual_history;
};

struct NewtonOptions {
  bool symmetric_constraint = false;  // iterate in the even subspace
  bool odd_constraint = false;        // iterate in the odd subspace
  /// Convergence when ||F|| <= tol * max(1, |E|) * ||phi||. Relative to the
  /// state so that tiny iterates drifting toward phi = 0 never pass.
  double tol = 1e-10;
  int max_iter = 50;
  bool damping = true;
  int max_halvings = 20;
  double jacobian_guard = 1e-8;
  double zero_threshold = 1e-12;
};

inline Symmetry classify_symmetry(const GridFunction& f, double rel_tol = 1e-10) {
  const double nrm = l2_norm(f);
  if (nrm == 0.0) return Symmetry::Even;
  if (l2_norm(antisymmetric_part(f)) <= rel_tol * nrm) return Symmetry::Even;
  if (l2_norm(symmetrize(f)) <= rel_tol * nrm) return Symmetry::Odd;
  return Symmetry::None;
}

/// Center of mass of |f|^2; mirror nodes are paired so even states give exactly 0.
inline double center_of_mass(const GridFunction& f) {
  const Grid& g = f.grid();
  const std::size_t m = g.center();
  double num = 0.0;
  for (std::size_t j = 1; j <= m; ++j) {
    const double w = (j == m) ? 0.5 : 1.0;
    num += w * g.x(m + j) * (f[m + j] * f[m + j] - f[m - j] * f[m - j]);
  }
  const double den = inner(f, f) / g.dx();
  return den > 0.0 ? num / den : 0.0;
}

/// Fills every derived field of `s` from s.phi and s.E.
///   energy     = c(||phi'||^2 + int V phi^2 + sigma/(p+1) M)
///   stationary : c(||phi'||^2 + int V phi^2 + sigma M) + E N = 0
///   Pohozaev   : c(-||phi'||^2 + int (V + x V') phi^2 + sigma/(p+1) M) + E N = 0
/// with M = int |phi|^{2p+2}. The stationarity residual is relative to |E| N,
/// the Pohozaev residual is absolute.
inline void diagnostics(const Model& model, StationaryState& s) {
  const auto& prm = model.params();
  const double c = model.scale();
  const GridFunction& phi = s.phi;
  s.N = inner(phi, phi);
  s.norm_2p2 = lq_norm_pow(phi, 2.0 * prm.p + 2.0);
  s.grad_norm2 = inner(phi, apply(model.laplacian(), phi));
  GridFunction vphi2(phi.grid()), xdv2(phi.grid());
  for (std::size_t i = 0; i < phi.size(); ++i) {
    const double f2 = phi[i] * phi[i];
    vphi2[i] = model.v()[i] * f2;
    xdv2[i] = model.x_dv()[i] * f2;
  }
  const double iv = quadrature(vphi2);
  const double ixdv = quadrature(xdv2);
  const double sw = prm.sigma * prm.nonlinear_weight;
  s.energy = c * (s.grad_norm2 + iv + sw / (prm.p + 1.0) * s.norm_2p2);
  const double stat = c * (s.grad_norm2 + iv + sw * s.norm_2p2) + s.E * s.N;
  const double ref = std::abs(s.E) * s.N;
  s.stationarity_residual = ref > 0.0 ? std::abs(stat) / ref : std::abs(stat);
  s.pohozaev_residual = std::abs(c * (-s.grad_norm2 + iv + ixdv + sw / (prm.p + 1.0) * s.norm_2p2) + s.E * s.N);
  s.x_cm = center_of_mass(phi);
  s.symmetry = classify_symmetry(phi);
  s.residual_norm = l2_norm(model.residual(phi, s.E));
}

/// Damped Newton iteration for F(phi, E) = 0 with Jacobian L+.
inline StationaryState newton_solve(const Model& model, const GridFunction& seed, double E,
                                    const NewtonOptions& opt = {}) {
  if (!seed.all_finite()) throw Error(Errc::NonFiniteInput, "seed contains NaN or Inf");
  if (!std::isfinite(E)) throw Error(Errc::NonFiniteInput, "E is not finite");
  const Grid& g = model.grid();
  if (!(seed.grid() == g)) throw Error(Errc::InvalidArgument, "seed lives on a different grid");

  if (opt.symmetric_constraint && opt.odd_constraint) throw Error(Errc::InvalidArgument, "even and odd constraints both set");
  std::optional<ParityReduction> reduced;
  if (opt.symmetric_constraint) reduced.emplace(g.size(), Parity::Even);
  if (opt.odd_constraint) reduced.emplace(g.size(), Parity::Odd);
  const bool odd = opt.odd_constraint;
  GridFunction phi = opt.symmetric_constraint ? symmetrize(seed) : odd ? antisymmetric_part(seed) : seed;

  StationaryState st;
  st.E = E;
  auto restore_symmetry = [&](GridFunction& f) {
    if (!reduced) return;
    const std::size_t n = f.size();
    for (std::size_t i = 0; i < n / 2; ++i) f[n - 1 - i] = odd ? -f[i] : f[i];
    if (odd) f[n / 2] = 0.0;
  };

  GridFunction F = model.residual(phi, E);
  double rn = l2_norm(F);
  for (int it = 0;; ++it) {
    st.residual_history.push_back(rn);
    const double pn = l2_norm(phi);
    if (pn < opt.zero_threshold) throw Error(Errc::DivergedToZero, "iterate collapsed onto the trivial solution");
    if (rn <= opt.tol * std::max(1.0, std::abs(E)) * pn) {
      st.iterations = it;
      break;
    }
    if (it >= opt.max_iter) throw Error(Errc::MaxIterExceeded, "Newton did not converge, residual " + std::to_string(rn));

    SymBandMatrix J = model.lplus(phi, E);
    std::vector<double> delta;
    if (reduced) {
      const SymBandMatrix Jr = reduced->reduce(J);
      if (count_below(Jr, opt.jacobian_guard) != count_below(Jr, -opt.jacobian_guard))
        throw Error(Errc::SingularJacobian, "parity-restricted L+ has an eigenvalue near zero");
      BandLU lu(Jr);
      if (lu.singular()) throw Error(Errc::SingularJacobian, "parity-restricted L+ is singular");
      auto c = reduced->restrict_vector(F.values());
      lu.solve_in_place(c);
      delta = reduced->expand_vector(c);
    } else {
      if (count_below(J, opt.jacobian_guard) != count_below(J, -opt.jacobian_guard))
        throw Error(Errc::SingularJacobian, "L+ has an eigenvalue near zero");
      BandLU lu(J);
      if (lu.singular()) throw Error(Errc::SingularJacobian, "L+ is singular");
      delta = lu.solve(F.values());
    }
    GridFunction d(g, std::move(delta));
    if (!d.all_finite()) throw Error(Errc::SingularJacobian, "Newton step is not finite");

    double t = 1.0;
    GridFunction trial = phi - d;
    restore_symmetry(trial);
    GridFunction Ft = model.residual(trial, E);
    double rt = l2_norm(Ft);
    if (opt.damping) {
      for (int h = 0; h < opt.max_halvings && !(rt < rn); ++h) {
        t *= 0.5;
        trial = phi - t * d;
        restore_symmetry(trial);
        Ft = model.residual(trial, E);
        rt = l2_norm(Ft);
      }
    }
    phi = std::move(trial);
    F = std::move(Ft);
    rn = rt;
  }
  st.phi = std::move(phi);
  diagnostics(model, st);
  return st;
}

/// Linear modes of the model's own stencil, so E0 matches the Newton
/// discretization exactly (needed when E* - E0 is below the stencil error).
inline LinearModes model_linear_modes(const Model& model, int k = 2) {
  if (k != 1 && k != 2) throw Error(Errc::InvalidArgument, "k must be 1 or 2");
  const Grid& g = model.grid();
  const SymBandMatrix op = model.linear_operator(0.0);
  LinearModes out;
  auto ev = lowest_eigenpairs(op, g, 1, Parity::Even);
  if (!(ev.eigenvalues.at(0) < 0.0)) throw Error(Errc::NoBoundState, "no eigenvalue below the continuum edge");
  out.E0 = -ev.eigenvalues[0];
  out.psi0 = ev.eigenfunctions[0];
  if (out.psi0[g.center()] < 0.0) out.psi0 *= -1.0;
  if (k == 2) {
    auto od = lowest_eigenpairs(op, g, 1, Parity::Odd);
    if (od.eigenvalues.at(0) < 0.0) {
      out.E1 = -od.eigenvalues[0];
      GridFunction p1 = od.eigenfunctions[0];
      if (p1[g.center() + 1] < 0.0) p1 *= -1.0;
      out.psi1 = std::move(p1);
    }
  }
  return out;
}

/// Small-amplitude seed a psi0 with E - E0 = -c sigma ||psi0||_{2p+2}^{2p+2} a^{2p}.
inline GridFunction seed_from_linear(const LinearModes& modes, double E, const ProblemParams& prm) {
  prm.validate();
  const double c = prm.scale();
  const double M = lq_norm_pow(modes.psi0, 2.0 * prm.p + 2.0);
  const double num = E - modes.E0;
  const double den = -c * prm.sigma * M;
  if (num == 0.0) return 0.0 * modes.psi0;
  if (num / den < 0.0)
    throw Error(Errc::WrongSideOfE0, "E lies on the wrong side of E0 for this sign of sigma");
  const double a = std::pow(num / den, 1.0 / (2.0 * prm.p));
  return a * modes.psi0;
}

/// Profile of the V = 0, E = 1 soliton: ((1+p)/-sigma)^{1/2p} sech^{1/p}(p y).
inline double soliton_profile(double y, double p, double sigma = -1.0) {
  if (!(sigma < 0.0)) throw Error(Errc::InvalidArgument, "soliton profile needs sigma < 0");
  return std::pow((1.0 + p) / -sigma, 1.0 / (2.0 * p)) * std::pow(1.0 / std::cosh(p * y), 1.0 / p);
}

/// Soliton rescaled to concentrate at x0: R^{-1/p} u((x - x0)/R), R = (E/c + V(x0))^{-1/2}.
inline GridFunction seed_soliton_at(const Grid& g, double x0, double E, const Potential& v, const ProblemParams& prm) {
  prm.validate();
  const double shifted = E / prm.scale() + v.value(x0);
  if (!(shifted > 0.0)) throw Error(Errc::NonpositiveShiftedE, "E + V(x0) must be positive");
  const double R = 1.0 / std::sqrt(shifted);
  const double amp = std::pow(R, -1.0 / prm.p);
  return GridFunction::sample(g, [&](double x) { return amp * soliton_profile((x - x0) / R, prm.p, prm.sigma); });
}

inline GridFunction seed_soliton_at(const Model& model, double x0, double E) {
  return seed_soliton_at(model.grid(), x0, E, model.potential(), model.params());
}

}  // namespace nlsbif
