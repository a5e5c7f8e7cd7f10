#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "nlsbif/error.hpp"
#include "nlsbif/schrodinger_ops.hpp"
#include "nlsbif/stationary.hpp"

namespace nlsbif {

struct BranchPoint {
  StationaryState state;
  LinearizedSpectrum lplus;  // k = 2 lowest of L+
  double lminus_lowest = 0.0;
  double lminus_correlation = 0.0;  // |<ground eigenfunction of L-, phi/||phi||>|
  std::optional<double> dN_dE;       // finite difference
  std::optional<double> dN_dE_solve; // 2 <psi, -L+^{-1} psi>
  std::optional<double> dM_dE;       // finite difference of norm_2p2
  std::optional<double> dM_dE_solve; // (2p+2) <|psi|^{2p} psi, -L+^{-1} psi>
  std::optional<double> dlambda_dE;  // finite difference of lambda1
  std::optional<double> dpsi_discrepancy;

  double E() const noexcept { return state.E; }
  double lambda0() const { return lplus.eigenvalues.at(0); }
  double lambda1() const { return lplus.eigenvalues.at(1); }
};

enum class BranchSymmetry { Even, AsymmetricPlus, AsymmetricMinus, Odd };
enum class Provenance { FromLinearMode, FromBranchSwitch, FromSolitonSeed };

inline const char* to_string(BranchSymmetry s) {
  switch (s) {
    case BranchSymmetry::Even: return "even";
    case BranchSymmetry::AsymmetricPlus: return "asymmetric_plus";
    case BranchSymmetry::AsymmetricMinus: return "asymmetric_minus";
    default: return "odd";
  }
}

inline const char* to_string(Provenance p) {
  switch (p) {
    case Provenance::FromLinearMode: return "from_linear_mode";
    case Provenance::FromBranchSwitch: return "from_branch_switch";
    default: return "from_soliton_seed";
  }
}

struct Branch {
  std::string label;
  BranchSymmetry symmetry = BranchSymmetry::Even;
  Provenance provenance = Provenance::FromLinearMode;
  std::vector<BranchPoint> points;  // ordered by increasing E once finalized
};

struct ContinuationControls {
  double dE_initial = 0.05;
  double dE_min = 1e-7;
  double dE_max = 0.25;
  double grow = 1.3;
  int fast_iterations = 4;  // grow the step when Newton needs at most this many
  int predictor_order = 1;
  /// Upper bound on ||phi_{i+1} - phi_i|| / |dE| before a step is rejected,
  /// as a multiple of the previous step's ratio (with an absolute floor).
  double continuity_factor = 4.0;
  double continuity_floor = 50.0;
  /// Shrink steps so a sign change of lambda1 gets a point on each side.
  bool land_crossing = true;
  double crossing_min_step = 1e-3;
  std::size_t max_points = 200000;
  NewtonOptions newton;
};

/// Spectral data of one converged state.
inline BranchPoint make_point(const Model& model, StationaryState st) {
  BranchPoint bp;
  const SymBandMatrix lp = model.lplus(st.phi, st.E);
  bp.lplus = lowest_eigenpairs(lp, model.grid(), 2, Parity::Any, OperatorTag::Lplus);
  const SymBandMatrix lm = model.lminus(st.phi, st.E);
  auto lms = lowest_eigenpairs(lm, model.grid(), 1, Parity::Any, OperatorTag::Lminus);
  bp.lminus_lowest = lms.eigenvalues.at(0);
  const double pn = l2_norm(st.phi);
  bp.lminus_correlation = pn > 0.0 ? std::abs(inner(lms.eigenfunctions.at(0), st.phi)) / pn : 0.0;
  bp.state = std::move(st);
  return bp;
}

/// Natural-parameter continuation from `start` to E_target. The step adapts:
/// halved on Newton failure or a continuity violation, grown on fast
/// convergence, clamped to [dE_min, dE_max]. Points come back in stepping
/// order, the first being `start` itself.
inline Branch continue_branch(const Model& model, const StationaryState& start, double E_target,
                              const ContinuationControls& ctl = {}, BranchSymmetry symmetry = BranchSymmetry::Even,
                              Provenance provenance = Provenance::FromLinearMode) {
  if (E_target == start.E) throw Error(Errc::InvalidArgument, "E_target equals the start E");
  if (!(ctl.dE_min > 0.0) || !(ctl.dE_max >= ctl.dE_min)) throw Error(Errc::InvalidArgument, "bad step controls");
  const double dir = E_target > start.E ? 1.0 : -1.0;
  NewtonOptions nopt = ctl.newton;
  nopt.symmetric_constraint = symmetry == BranchSymmetry::Even;
  nopt.odd_constraint = symmetry == BranchSymmetry::Odd;

  Branch br;
  br.symmetry = symmetry;
  br.provenance = provenance;
  br.label = to_string(symmetry);
  br.points.push_back(make_point(model, start));

  double dE = std::clamp(ctl.dE_initial, ctl.dE_min, ctl.dE_max);
  double last_ratio = 0.0;
  while (dir * (E_target - br.points.back().E()) > 0.0) {
    if (br.points.size() >= ctl.max_points) throw Error(Errc::StepUnderflow, "point budget exhausted");
    const BranchPoint& cur = br.points.back();
    const double E0 = cur.E();
    double step = std::min(dE, dir * (E_target - E0));

    if (ctl.land_crossing && br.points.size() >= 2) {
      const BranchPoint& prev = br.points[br.points.size() - 2];
      const double l1 = cur.lambda1(), l0 = prev.lambda1();
      const double slope = (l1 - l0) / (E0 - prev.E());
      // heading toward zero: keep at least one point before the sign change
      if (std::isfinite(slope) && slope != 0.0 && l1 * slope * dir < 0.0) {
        const double reach = std::abs(l1 / slope);
        if (step > 0.5 * reach) step = std::max(0.5 * reach, std::min(step, ctl.crossing_min_step));
        step = std::min(step, dir * (E_target - E0));
      }
    }

    const double E1 = E0 + dir * step;
    if (E1 == E0) throw Error(Errc::StepUnderflow, "step below floating-point resolution at E = " + std::to_string(E0));
    GridFunction seed = cur.state.phi;
    if (ctl.predictor_order >= 1 && br.points.size() >= 2) {
      const BranchPoint& prev = br.points[br.points.size() - 2];
      const double t = (E1 - E0) / (E0 - prev.E());
      seed += t * (cur.state.phi - prev.state.phi);
    }

    std::optional<StationaryState> st;
    bool collapsed = false;
    try {
      st = newton_solve(model, seed, E1, nopt);
    } catch (const Error& e) {
      collapsed = e.code() == Errc::DivergedToZero;
      if (!collapsed && e.code() != Errc::MaxIterExceeded && e.code() != Errc::SingularJacobian) throw;
    }
    bool ok = st.has_value();
    double ratio = 0.0;
    if (ok) {
      ratio = l2_norm(st->phi - cur.state.phi) / step;
      const double bound = std::max(ctl.continuity_floor, ctl.continuity_factor * last_ratio);
      if (last_ratio > 0.0 && ratio > bound) ok = false;
    }
    if (!ok) {
      dE = 0.5 * step;
      if (dE < ctl.dE_min && collapsed)
        throw Error(Errc::StateCollapsed, "branch collapsed onto zero after E = " + std::to_string(E0));
      if (dE < ctl.dE_min)
        throw Error(Errc::StepUnderflow, "step fell below dE_min after E = " + std::to_string(E0));
      continue;
    }
    last_ratio = ratio;
    const int its = st->iterations;
    br.points.push_back(make_point(model, std::move(*st)));
    dE = std::clamp(its <= ctl.fast_iterations ? step * ctl.grow : step, ctl.dE_min, ctl.dE_max);
  }
  return br;
}

/// Derivative of sampled f at x[i] from a three-point stencil on a nonuniform
/// mesh; exact for quadratics. One-sided at the ends.
inline double nonuniform_derivative(const std::vector<double>& x, const std::vector<double>& f, std::size_t i) {
  const std::size_t n = x.size();
  if (n < 2) throw Error(Errc::InvalidArgument, "need at least two samples");
  if (n == 2) return (f[1] - f[0]) / (x[1] - x[0]);
  std::size_t a, b, c;
  if (i == 0) {
    a = 0; b = 1; c = 2;
  } else if (i == n - 1) {
    a = n - 3; b = n - 2; c = n - 1;
  } else {
    a = i - 1; b = i; c = i + 1;
  }
  // derivative of the Lagrange interpolant through (a, b, c) at x[i]
  const double xa = x[a], xb = x[b], xc = x[c], t = x[i];
  const double da = ((t - xb) + (t - xc)) / ((xa - xb) * (xa - xc));
  const double db = ((t - xa) + (t - xc)) / ((xb - xa) * (xb - xc));
  const double dc = ((t - xa) + (t - xb)) / ((xc - xa) * (xc - xb));
  return da * f[a] + db * f[b] + dc * f[c];
}

/// Subspace for L+ solves against a state of the given symmetry.
inline Parity solve_parity(const SymBandMatrix& lp, Symmetry sym) {
  if (!lp.commutes_with_reflection()) return Parity::Any;
  if (sym == Symmetry::Even) return Parity::Even;
  if (sym == Symmetry::Odd) return Parity::Odd;
  return Parity::Any;
}

/// Sorts the points by E and fills the finite-difference and solve-based derivatives.
inline void branch_derivatives(const Model& model, Branch& br) {
  auto& pts = br.points;
  std::sort(pts.begin(), pts.end(), [](const BranchPoint& a, const BranchPoint& b) { return a.E() < b.E(); });
  if (pts.size() < 3) return;
  std::vector<double> E, N, M, L;
  for (const auto& p : pts) {
    E.push_back(p.E());
    N.push_back(p.state.N);
    M.push_back(p.state.norm_2p2);
    L.push_back(p.lambda1());
  }
  for (std::size_t i = 0; i < pts.size(); ++i) {
    auto& p = pts[i];
    p.dN_dE = nonuniform_derivative(E, N, i);
    p.dM_dE = nonuniform_derivative(E, M, i);
    p.dlambda_dE = nonuniform_derivative(E, L, i);

    // d psi/dE = -L+^{-1} psi
    try {
      const SymBandMatrix lp = model.lplus(p.state.phi, p.E());
      GridFunction w(model.grid(), solve_in_parity(lp, p.state.phi.values(), solve_parity(lp, p.state.symmetry)));
      w *= -1.0;
      p.dN_dE_solve = 2.0 * inner(p.state.phi, w);
      const double q = model.params().p;
      GridFunction g(model.grid());
      for (std::size_t j = 0; j < g.size(); ++j)
        g[j] = (2.0 * q + 2.0) * std::pow(std::abs(p.state.phi[j]), 2.0 * q) * p.state.phi[j];
      p.dM_dE_solve = inner(g, w);
      if (i > 0 && i + 1 < pts.size()) {
        const double h1 = E[i] - E[i - 1], h2 = E[i + 1] - E[i];
        GridFunction fd = (-h2 / (h1 * (h1 + h2))) * pts[i - 1].state.phi +
                          ((h2 - h1) / (h1 * h2)) * p.state.phi + (h1 / (h2 * (h1 + h2))) * pts[i + 1].state.phi;
        const double wn = l2_norm(w);
        if (wn > 0.0) p.dpsi_discrepancy = l2_norm(fd - w) / wn;
      }
    } catch (const Error&) {
      // singular L+ (at a crossing): leave the solve-based values empty
    }
  }
}

/// N'(E) = 2 <psi, -L+^{-1} psi> at a converged state.
inline double slope_by_solve(const Model& model, const StationaryState& st) {
  const SymBandMatrix lp = model.lplus(st.phi, st.E);
  const auto w = solve_in_parity(lp, st.phi.values(), solve_parity(lp, st.symmetry));
  return -2.0 * inner(st.phi, GridFunction(model.grid(), w));
}

struct SlopeChange {
  double E = 0.0;
  bool to_negative = true;  // N' turns from positive to negative with increasing E
  double N = 0.0;
};

/// Every sign change of N'(E) along a branch, refined by bisection on the
/// solve-based slope (each evaluation is a Newton solve seeded by linear
/// interpolation between the bracketing states).
inline std::vector<SlopeChange> find_slope_changes(const Model& model, const Branch& br, double E_tol = 1e-7) {
  std::vector<const BranchPoint*> pts;
  for (const auto& p : br.points) pts.push_back(&p);
  std::sort(pts.begin(), pts.end(), [](auto* a, auto* b) { return a->E() < b->E(); });
  NewtonOptions nopt;
  nopt.symmetric_constraint = br.symmetry == BranchSymmetry::Even;
  nopt.odd_constraint = br.symmetry == BranchSymmetry::Odd;
  std::vector<SlopeChange> out;
  std::optional<double> prev_slope;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    double si = 0.0;
    try {
      si = slope_by_solve(model, pts[i]->state);
    } catch (const Error&) {
      prev_slope.reset();
      continue;
    }
    if (prev_slope && (*prev_slope > 0.0) != (si > 0.0)) {
      double a = pts[i - 1]->E(), b = pts[i]->E();
      GridFunction sa = pts[i - 1]->state.phi, sb = pts[i]->state.phi;
      const bool fa_pos = *prev_slope > 0.0;
      double N = pts[i]->state.N;
      while (b - a > E_tol) {
        const double c = 0.5 * (a + b);
        const StationaryState st = newton_solve(model, 0.5 * (sa + sb), c, nopt);
        const double sc = slope_by_solve(model, st);
        N = st.N;
        if ((sc > 0.0) == fa_pos) {
          a = c;
          sa = st.phi;
        } else {
          b = c;
          sb = st.phi;
        }
      }
      out.push_back({0.5 * (a + b), fa_pos, N});
    }
    prev_slope = si;
  }
  return out;
}

enum class StabilityVerdict { Stable, Unstable, Indeterminate };

struct StabilityResult {
  StabilityVerdict verdict = StabilityVerdict::Indeterminate;
  std::string reason;
};

inline const char* to_string(StabilityVerdict v) {
  switch (v) {
    case StabilityVerdict::Stable: return "stable";
    case StabilityVerdict::Unstable: return "unstable";
    default: return "indeterminate";
  }
}

/// Negative-eigenvalue count of L+ plus the slope of N(E).
inline StabilityResult stability_classify(const BranchPoint& p, double slope_tol = 1e-8) {
  if (p.lplus.eigenvalues.size() < 2) throw Error(Errc::MissingSpectrum, "L+ spectrum with k=2 is required");
  const std::size_t nn = p.lplus.n_negative;
  if (nn >= 2) return {StabilityVerdict::Unstable, "two_negative_directions"};
  if (!p.dN_dE) throw Error(Errc::MissingSpectrum, "dN/dE is required");
  if (nn == 0) return {StabilityVerdict::Indeterminate, "no_negative_direction"};
  if (std::abs(*p.dN_dE) < slope_tol) return {StabilityVerdict::Indeterminate, "slope_near_zero"};
  if (*p.dN_dE > 0.0) return {StabilityVerdict::Stable, "slope_positive"};
  return {StabilityVerdict::Unstable, "slope_negative"};
}

inline void write_branch_csv(std::ostream& os, const Branch& br) {
  os << "E,N,norm_2p2,grad_norm2,energy,lambda0,lambda1,lminus0,x_cm,residual,pohozaev_residual,"
        "stationarity_residual,n_negative,dN_dE,stability\n";
  os.precision(12);
  for (const auto& p : br.points) {
    const auto& s = p.state;
    std::string stab = "indeterminate";
    try {
      stab = to_string(stability_classify(p).verdict);
    } catch (const Error&) {
    }
    os << s.E << ',' << s.N << ',' << s.norm_2p2 << ',' << s.grad_norm2 << ',' << s.energy << ',' << p.lambda0()
       << ',' << p.lambda1() << ',' << p.lminus_lowest << ',' << s.x_cm << ',' << s.residual_norm << ','
       << s.pohozaev_residual << ',' << s.stationarity_residual << ',' << p.lplus.n_negative << ',';
    if (p.dN_dE) os << *p.dN_dE;
    os << ',' << stab << '\n';
  }
}

/// Branch bifurcating from zero at a linear level: the even ground-state
/// branch from E0 or the odd excited branch from E1. When the two levels are
/// close (a well-separated double well) the first leg runs to 2 gaps past the
/// level with steps of at most gap/8, starting gap/80 away, so the crossing
/// near E0 is resolved; the rest uses `ctl` as given.
inline Branch trace_from_linear(const Model& model, const LinearModes& modes, BranchSymmetry sym, double E_target,
                                ContinuationControls ctl = {}) {
  if (sym != BranchSymmetry::Even && sym != BranchSymmetry::Odd)
    throw Error(Errc::InvalidArgument, "linear levels start even or odd branches only");
  LinearModes m = modes;
  if (sym == BranchSymmetry::Odd) {
    if (!modes.E1 || !modes.psi1) throw Error(Errc::NoBoundState, "no second bound state for the odd branch");
    m.E0 = *modes.E1;
    m.psi0 = *modes.psi1;
    ctl.land_crossing = false;
  }
  const auto& prm = model.params();
  const double dir = prm.focusing() ? 1.0 : -1.0;
  const double gap = modes.E1 ? modes.E0 - *modes.E1 : std::numeric_limits<double>::infinity();
  const bool close = std::isfinite(gap) && gap > 0.0 && gap / 8.0 < ctl.dE_max;
  const double offset = close ? std::min(ctl.dE_initial, gap / 80.0) : ctl.dE_initial;
  const double E_start = m.E0 + dir * offset;
  if (dir * (E_target - E_start) <= 0.0) throw Error(Errc::InvalidArgument, "E_target lies before the branch start");

  NewtonOptions nopt = ctl.newton;
  nopt.symmetric_constraint = sym == BranchSymmetry::Even;
  nopt.odd_constraint = sym == BranchSymmetry::Odd;
  const StationaryState start = newton_solve(model, seed_from_linear(m, E_start, prm), E_start, nopt);

  Branch br;
  if (close) {
    ContinuationControls fine = ctl;
    fine.dE_initial = offset;
    fine.dE_max = gap / 8.0;
    fine.dE_min = std::min(ctl.dE_min, gap * 1e-6);
    fine.crossing_min_step = std::min(ctl.crossing_min_step, gap / 8.0);
    const double E_mid = dir * (E_target - (m.E0 + 2.0 * dir * gap)) > 0.0 ? m.E0 + 2.0 * dir * gap : E_target;
    br = continue_branch(model, start, E_mid, fine, sym);
    if (E_mid != E_target) {
      ContinuationControls rest = ctl;
      rest.dE_initial = gap / 8.0;
      Branch tail = continue_branch(model, br.points.back().state, E_target, rest, sym);
      for (std::size_t i = 1; i < tail.points.size(); ++i) br.points.push_back(std::move(tail.points[i]));
    }
  } else {
    ContinuationControls c = ctl;
    c.dE_initial = offset;
    br = continue_branch(model, start, E_target, c, sym);
  }
  branch_derivatives(model, br);
  return br;
}

}  // namespace nlsbif
