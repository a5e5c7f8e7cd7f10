#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "nlsbif/continuation.hpp"
#include "nlsbif/eigen.hpp"
#include "nlsbif/error.hpp"
#include "nlsbif/potentials.hpp"
#include "nlsbif/schrodinger_ops.hpp"
#include "nlsbif/stationary.hpp"

namespace nlsbif {

struct BifurcationTolerances {
  double crossing_tol = 1e-8;
  double bracket_tol = 1e-10;
  double nondegeneracy_tol = 1e-4;
  double lambda_prime_consistency = 0.05;
  /// Half width of the centered difference used for lambda' and N', relative
  /// to max(1, |E*|) and capped at 5% of N/|N'|.
  double fd_step = 1e-3;
};

struct CrossingSearch {
  std::optional<std::pair<double, double>> bracket;
  std::size_t index_lo = 0;  // points[index_lo] has lambda1 > 0, the next one <= 0
  double lambda_min = 0.0;
  double E_at_min = 0.0;
};

/// First sign change of lambda1 along increasing E.
inline CrossingSearch locate_crossing(const Branch& br) {
  CrossingSearch out;
  if (br.points.empty()) return out;
  std::vector<const BranchPoint*> pts;
  for (const auto& p : br.points) pts.push_back(&p);
  std::sort(pts.begin(), pts.end(), [](auto* a, auto* b) { return a->E() < b->E(); });
  out.lambda_min = pts[0]->lambda1();
  out.E_at_min = pts[0]->E();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (pts[i]->lambda1() < out.lambda_min) {
      out.lambda_min = pts[i]->lambda1();
      out.E_at_min = pts[i]->E();
    }
    if (!out.bracket && i + 1 < pts.size() && pts[i]->lambda1() > 0.0 && pts[i + 1]->lambda1() <= 0.0) {
      out.bracket = std::make_pair(pts[i]->E(), pts[i + 1]->E());
      // index into the original ordering
      out.index_lo = static_cast<std::size_t>(pts[i] - br.points.data());
    }
  }
  return out;
}

struct LambdaCrossing {
  double E = 0.0;           // linear interpolation of lambda1 between the bracketing points
  bool to_negative = true;  // lambda1 goes from positive to non-positive with increasing E
};

/// Every sign change of lambda1 along the branch, in increasing E.
inline std::vector<LambdaCrossing> all_crossings(const Branch& br) {
  std::vector<const BranchPoint*> pts;
  for (const auto& p : br.points) pts.push_back(&p);
  std::sort(pts.begin(), pts.end(), [](auto* a, auto* b) { return a->E() < b->E(); });
  std::vector<LambdaCrossing> out;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const double a = pts[i]->lambda1(), b = pts[i + 1]->lambda1();
    if ((a > 0.0) == (b > 0.0)) continue;
    const double t = a / (a - b);
    out.push_back({pts[i]->E() + t * (pts[i + 1]->E() - pts[i]->E()), a > 0.0});
  }
  return out;
}

/// Deterministic sign for an odd eigenfunction: positive at its largest
/// magnitude on x > 0, so +phi* shifts mass to the right.
inline void orient_odd(GridFunction& f) {
  const std::size_t m = f.grid().center();
  std::size_t best = m;
  double big = -1.0;
  for (std::size_t i = m + 1; i < f.size(); ++i) {
    if (std::abs(f[i]) > big * (1.0 + 1e-9)) {
      big = std::abs(f[i]);
      best = i;
    }
  }
  if (f[best] < 0.0) f *= -1.0;
}

struct OddProbe {
  StationaryState state;
  double lambda = 0.0;  // lowest odd eigenvalue of L+
  GridFunction phi;     // its eigenfunction, unit L2 norm, oriented
};

/// Even state at E (Newton from `seed`) and the lowest odd eigenpair of L+ there.
inline OddProbe probe_odd(const Model& model, const GridFunction& seed, double E, const NewtonOptions& base = {}) {
  NewtonOptions o = base;
  o.symmetric_constraint = true;
  OddProbe pr;
  pr.state = newton_solve(model, seed, E, o);
  const SymBandMatrix lp = model.lplus(pr.state.phi, E);
  auto sp = lowest_eigenpairs(lp, model.grid(), 1, Parity::Odd, OperatorTag::Lplus);
  pr.lambda = sp.eigenvalues.at(0);
  pr.phi = std::move(sp.eigenfunctions.at(0));
  orient_odd(pr.phi);
  return pr;
}

struct CriticalPoint {
  double E_star = 0.0;
  StationaryState psi_star;
  GridFunction phi_star;
  double lambda_at_star = 0.0;
  int evaluations = 0;
};

/// Regula falsi (Illinois variant) on lambda(E) inside [E_lo, E_hi], with
/// even-branch states at the two ends as Newton seeds.
inline CriticalPoint refine_E_star(const Model& model, double E_lo, const GridFunction& seed_lo, double E_hi,
                                   const GridFunction& seed_hi, const BifurcationTolerances& tol = {},
                                   const NewtonOptions& nopt = {}) {
  OddProbe lo = probe_odd(model, seed_lo, E_lo, nopt);
  OddProbe hi = probe_odd(model, seed_hi, E_hi, nopt);
  CriticalPoint cp;
  cp.evaluations = 2;
  if (!(lo.lambda > 0.0 && hi.lambda <= 0.0) && !(lo.lambda < 0.0 && hi.lambda >= 0.0))
    throw Error(Errc::BracketLost,
                "lambda does not change sign across the re-solved bracket; spurious crossings of this kind are a "
                "discretization artifact and disappear on finer grids");
  double fa = lo.lambda, fb = hi.lambda;
  double a = E_lo, b = E_hi;
  GridFunction sa = lo.state.phi, sb = hi.state.phi;
  OddProbe best = std::abs(fa) < std::abs(fb) ? lo : hi;
  int side = 0;
  for (int it = 0; it < 200; ++it) {
    if (std::abs(best.lambda) <= tol.crossing_tol || b - a <= tol.bracket_tol) break;
    double c = (a * fb - b * fa) / (fb - fa);
    if (!(c > a && c < b)) c = 0.5 * (a + b);
    const double t = (c - a) / (b - a);
    GridFunction seed = (1.0 - t) * sa + t * sb;
    OddProbe mid = probe_odd(model, seed, c, nopt);
    ++cp.evaluations;
    if (std::abs(mid.lambda) < std::abs(best.lambda)) best = mid;
    if ((mid.lambda > 0.0) == (fa > 0.0)) {
      a = c;
      fa = mid.lambda;
      sa = mid.state.phi;
      if (side == -1) fb *= 0.5;
      side = -1;
    } else {
      b = c;
      fb = mid.lambda;
      sb = mid.state.phi;
      if (side == +1) fa *= 0.5;
      side = +1;
    }
  }
  cp.E_star = best.state.E;
  cp.psi_star = std::move(best.state);
  cp.phi_star = std::move(best.phi);
  cp.lambda_at_star = best.lambda;
  return cp;
}

/// Convenience wrapper taking the bracket straight from a traced even branch.
inline CriticalPoint refine_E_star(const Model& model, const Branch& br, const CrossingSearch& cs,
                                   const BifurcationTolerances& tol = {}, const NewtonOptions& nopt = {}) {
  if (!cs.bracket) throw Error(Errc::InvalidArgument, "no crossing bracket");
  const auto& plo = br.points.at(cs.index_lo);
  const BranchPoint* phi = nullptr;
  for (const auto& p : br.points)
    if (p.E() == cs.bracket->second) phi = &p;
  if (!phi) throw Error(Errc::InvalidArgument, "bracket end not on the branch");
  return refine_E_star(model, plo.E(), plo.state.phi, phi->E(), phi->state.phi, tol, nopt);
}

struct LambdaPrime {
  double value = 0.0;         // integral formula, primary
  double finite_difference = 0.0;
  double relative_discrepancy = 0.0;
  bool consistent = true;
  double N_prime = 0.0;       // 2 <psi, -L+^{-1} psi>
  double N_prime_fd = 0.0;
};

/// d psi/dE = -L+^{-1} psi, solved on the even subspace.
inline GridFunction dpsi_dE(const Model& model, const StationaryState& st) {
  const SymBandMatrix lp = model.lplus(st.phi, st.E);
  GridFunction w(model.grid(), solve_in_parity(lp, st.phi.values(), Parity::Even));
  return -1.0 * w;
}

/// lambda'(E*) two ways: Hellmann-Feynman,
///   lambda' = 1 + c sigma (2p+1) 2p int psi^{2p-1} phi*^2 dpsi/dE,
/// and a centered difference of the odd eigenvalue at E* +- h.
inline LambdaPrime compute_lambda_prime(const Model& model, const CriticalPoint& cp,
                                        const BifurcationTolerances& tol = {}, const NewtonOptions& nopt = {}) {
  const auto& prm = model.params();
  const double c = model.scale();
  const double p = prm.p;
  const GridFunction& psi = cp.psi_star.phi;
  const GridFunction& phi = cp.phi_star;
  const GridFunction w = dpsi_dE(model, cp.psi_star);
  GridFunction integrand(model.grid());
  for (std::size_t i = 0; i < psi.size(); ++i) {
    const double sgn = psi[i] < 0.0 ? -1.0 : 1.0;
    integrand[i] = sgn * pow_abs(psi[i], 2.0 * p - 1.0) * phi[i] * phi[i] * w[i];
  }
  LambdaPrime lp;
  lp.value = 1.0 + c * prm.sigma * prm.nonlinear_weight * (2.0 * p + 1.0) * 2.0 * p * quadrature(integrand);
  lp.N_prime = 2.0 * inner(psi, w);

  // N/|N'| is the E-scale over which the state changes (E - E0 near the linear limit)
  double h = tol.fd_step * std::max(1.0, std::abs(cp.E_star));
  if (lp.N_prime != 0.0) h = std::min(h, 0.05 * cp.psi_star.N / std::abs(lp.N_prime));
  const OddProbe up = probe_odd(model, psi + h * w, cp.E_star + h, nopt);
  const OddProbe dn = probe_odd(model, psi - h * w, cp.E_star - h, nopt);
  lp.finite_difference = (up.lambda - dn.lambda) / (2.0 * h);
  lp.N_prime_fd = (up.state.N - dn.state.N) / (2.0 * h);
  const double scale = std::max(std::abs(lp.value), std::abs(lp.finite_difference));
  lp.relative_discrepancy = scale > 0.0 ? std::abs(lp.value - lp.finite_difference) / scale : 0.0;
  lp.consistent = lp.relative_discrepancy <= tol.lambda_prime_consistency;
  return lp;
}

struct QTerms {
  double Q = 0.0;
  double term_local = 0.0;     // ((2p-1)/(3 sigma)) <phi*^2, psi^{2p-2} phi*^2>
  double term_resolvent = 0.0; // 2p(2p+1) <psi^{2p-1} phi*^2, L*^{-1} psi^{2p-1} phi*^2>
  double complement_residual = 0.0;
};

/// Pitchfork coefficient of E(a) = E* + (Q/2) a^2. The bracket is evaluated
/// for the c = 1 problem with parameter E/c (L* / c, same sigma), and the
/// result is multiplied by c to return to the run's E units:
///   Q = -(2p(2p+1) sigma^2 / lambda') [ (2p-1)/(3 sigma) <phi^2, psi^{2p-2} phi^2>
///                                       - 2p(2p+1) <psi^{2p-1} phi^2, L*^{-1} psi^{2p-1} phi^2> ]
inline QTerms compute_Q(const Model& model, const CriticalPoint& cp, double lambda_prime,
                        const BifurcationTolerances& tol = {}) {
  if (std::abs(lambda_prime) < tol.nondegeneracy_tol)
    throw Error(Errc::DegenerateLambdaPrime, "lambda'(E*) is below the nondegeneracy tolerance");
  const auto& prm = model.params();
  const double p = prm.p;
  if (p < 0.5) throw Error(Errc::InvalidArgument, "the pitchfork expansion needs p >= 1/2");
  const double sigma = prm.sigma * prm.nonlinear_weight;
  const double c = model.scale();
  const GridFunction& psi = cp.psi_star.phi;
  const GridFunction& phi = cp.phi_star;
  const Grid& g = model.grid();

  GridFunction local(g), rhs(g);
  for (std::size_t i = 0; i < psi.size(); ++i) {
    const double f2 = phi[i] * phi[i];
    const double sgn = psi[i] < 0.0 ? -1.0 : 1.0;
    local[i] = f2 * f2 * (p == 1.0 ? 1.0 : pow_abs(psi[i], 2.0 * p - 2.0));
    rhs[i] = sgn * pow_abs(psi[i], 2.0 * p - 1.0) * f2;
  }
  SymBandMatrix Lstar = model.lplus(psi, cp.E_star);
  Lstar.scale(1.0 / c);
  const ComplementSolve cs = solve_on_complement(Lstar, rhs, phi);

  QTerms q;
  q.term_local = (2.0 * p - 1.0) / (3.0 * sigma) * quadrature(local);
  q.term_resolvent = 2.0 * p * (2.0 * p + 1.0) * inner(rhs, cs.w);
  q.complement_residual = cs.relative_residual;
  const double Qstd = -(2.0 * p * (2.0 * p + 1.0) * sigma * sigma / lambda_prime) * (q.term_local - q.term_resolvent);
  q.Q = c * Qstd;
  return q;
}

/// R = 2 lambda'/Q + N'.
inline double compute_R(double Q, double lambda_prime, double N_prime) {
  if (Q == 0.0) throw Error(Errc::ZeroQ, "Q vanishes");
  return 2.0 * lambda_prime / Q + N_prime;
}

enum class PitchforkKind { Supercritical, SubcriticalR, SubcriticalQ, Degenerate };

inline const char* to_string(PitchforkKind k) {
  switch (k) {
    case PitchforkKind::Supercritical: return "supercritical";
    case PitchforkKind::SubcriticalR: return "subcritical_R";
    case PitchforkKind::SubcriticalQ: return "subcritical_Q";
    default: return "degenerate";
  }
}

inline PitchforkKind classify_pitchfork(double lambda_prime, double Q, double R, double nondegeneracy_tol = 1e-4) {
  if (std::abs(lambda_prime) < nondegeneracy_tol) return PitchforkKind::Degenerate;
  if (Q < 0.0) return PitchforkKind::SubcriticalQ;
  return R > 0.0 ? PitchforkKind::Supercritical : PitchforkKind::SubcriticalR;
}

/// Power at which the large-separation R limit changes sign: the positive
/// root of -p^2 + 3p + 1.
inline double critical_power() { return 0.5 * (3.0 + std::sqrt(13.0)); }

/// Separation -> infinity limits of the pitchfork data, in c = 1 units.
/// M0 is ||psi_0||_{2p+2}^{2p+2} of the normalized single-well ground state.
struct LargeSeparationLimits {
  double lambda_prime = 0.0;  // -2p
  double Q_scaled = 0.0;      // a*^{2-2p} Q
  double R_scaled = 0.0;      // a*^{2p-2} R
  double R_numerator = 0.0;   // -p^2 + 3p + 1, carries the sign of R
  PitchforkKind predicted = PitchforkKind::Degenerate;
};

inline LargeSeparationLimits large_separation_limits(double p, double sigma, double M0) {
  if (!(p > 0.0) || !(sigma < 0.0) || !(M0 > 0.0))
    throw Error(Errc::InvalidArgument, "limits need p > 0, sigma < 0 and M0 > 0");
  LargeSeparationLimits l;
  l.lambda_prime = -2.0 * p;
  l.R_numerator = -p * p + 3.0 * p + 1.0;
  l.Q_scaled = -sigma * std::pow(2.0, 2.0 - p) / 3.0 * (2.0 * p + 1.0) * (p + 1.0) * M0;
  l.R_scaled = std::pow(2.0, p) * l.R_numerator / (-sigma * (2.0 * p + 1.0) * (p + 1.0) * p * M0);
  l.predicted = classify_pitchfork(l.lambda_prime, l.Q_scaled, l.R_scaled);
  return l;
}

struct AStar {
  double projection = 0.0;          // <psi_{0,s}, psi_{E*}>
  double asymptotic = 0.0;          // ((E0 - E1) / (2p c (-sigma) ||psi_{0,s}||^{2p+2}))^{1/2p}
  double asymptotic_no_norm = 0.0;  // ((E0 - E1) / 2p)^{1/2p}, without the amplitude-law factor
  double odd_overlap = 0.0;         // <psi_{1,s}, psi_{E*}>, zero by parity
};

/// Amplitude of psi_{E*} along the linear ground mode, with the large-separation
/// estimate for comparison. The estimate combines lambda ~ (E0 - E1) + lambda'(E - E0),
/// lambda' -> -2p, with the small-amplitude law E - E0 = c(-sigma)||psi_{0,s}||^{2p+2} a^{2p}.
inline AStar compute_a_star(const StationaryState& psi_star, const LinearModes& modes, const ProblemParams& prm) {
  AStar a;
  const GridFunction psi0 = psi_star.phi.grid() == modes.psi0.grid() ? modes.psi0 : resample(modes.psi0, psi_star.phi.grid());
  a.projection = inner(psi0, psi_star.phi);
  if (modes.E1) {
    const double split = modes.E0 - *modes.E1;
    const double q = 1.0 / (2.0 * prm.p);
    const double m = lq_norm_pow(modes.psi0, 2.0 * prm.p + 2.0);
    if (split > 0.0) {
      a.asymptotic = std::pow(split / (2.0 * prm.p * prm.scale() * -prm.sigma * m), q);
      a.asymptotic_no_norm = std::pow(split / (2.0 * prm.p), q);
    }
  }
  if (modes.psi1) {
    const GridFunction psi1 =
        psi_star.phi.grid() == modes.psi1->grid() ? *modes.psi1 : resample(*modes.psi1, psi_star.phi.grid());
    a.odd_overlap = inner(psi1, psi_star.phi);
  }
  return a;
}

/// Conversion of run-unit pitchfork data to the c = 1, sigma = -1 reference.
/// States scale like |sigma|^{-1/2p}, energies like c.
struct ReferenceUnits {
  double E_star = 0.0;
  double Q = 0.0;
  double R = 0.0;
  double N_prime = 0.0;
  double a_star = 0.0;
};

inline ReferenceUnits to_reference_units(double E_star, double Q, double R, double N_prime, double a_star,
                                         const ProblemParams& prm) {
  const double c = prm.scale();
  const double k = std::pow(-prm.sigma, 1.0 / (2.0 * prm.p));  // a_ref = k a_run
  ReferenceUnits u;
  u.E_star = E_star / c;
  u.a_star = k * a_star;
  // E_run - E*_run = (Q_run/2) a_run^2  ->  Q_ref = Q_run / (c k^2)
  u.Q = Q / (c * k * k);
  // N_ref = k^2 N_run, E_ref = E_run / c
  u.N_prime = N_prime * k * k * c;
  u.R = R * k * k * c;
  return u;
}

struct BifurcationReport {
  double E_star = 0.0;
  StationaryState psi_star;
  GridFunction phi_star;
  double lambda_at_star = 0.0;
  LambdaPrime lambda_prime;
  QTerms Q;
  double R = 0.0;
  double N_prime = 0.0;
  std::optional<AStar> a_star;
  PitchforkKind classification = PitchforkKind::Degenerate;
  std::string rationale;
  double dx = 0.0;
  bool regridded = false;
};

inline std::string classification_rationale(const BifurcationReport& r, double nondegeneracy_tol) {
  std::ostringstream os;
  if (std::abs(r.lambda_prime.value) < nondegeneracy_tol)
    os << "|lambda'| = " << std::abs(r.lambda_prime.value) << " < " << nondegeneracy_tol;
  else if (r.Q.Q < 0.0)
    os << "Q = " << r.Q.Q << " < 0";
  else
    os << "Q = " << r.Q.Q << " > 0 and R = " << r.R << (r.R > 0.0 ? " > 0" : " < 0");
  return os.str();
}

/// Full analysis at a refined critical point.
inline BifurcationReport analyze_critical_point(const Model& model, CriticalPoint cp,
                                                const std::optional<LinearModes>& modes = std::nullopt,
                                                const BifurcationTolerances& tol = {}, const NewtonOptions& nopt = {}) {
  BifurcationReport r;
  r.lambda_prime = compute_lambda_prime(model, cp, tol, nopt);
  r.N_prime = r.lambda_prime.N_prime;
  if (std::abs(r.lambda_prime.value) >= tol.nondegeneracy_tol) {
    r.Q = compute_Q(model, cp, r.lambda_prime.value, tol);
    r.R = compute_R(r.Q.Q, r.lambda_prime.value, r.N_prime);
  }
  if (modes) r.a_star = compute_a_star(cp.psi_star, *modes, model.params());
  r.classification = classify_pitchfork(r.lambda_prime.value, r.Q.Q, r.R, tol.nondegeneracy_tol);
  r.E_star = cp.E_star;
  r.lambda_at_star = cp.lambda_at_star;
  r.psi_star = std::move(cp.psi_star);
  r.phi_star = std::move(cp.phi_star);
  r.dx = model.grid().dx();
  r.rationale = classification_rationale(r, tol.nondegeneracy_tol);
  return r;
}

/// Locate, refine and analyze the first crossing on an even branch. A lost
/// bracket triggers one retry at half the spacing before it is reported.
inline std::optional<BifurcationReport> find_bifurcation(const Model& model, const Branch& br,
                                                         const std::optional<LinearModes>& modes = std::nullopt,
                                                         const BifurcationTolerances& tol = {},
                                                         const NewtonOptions& nopt = {}) {
  const CrossingSearch cs = locate_crossing(br);
  if (!cs.bracket) return std::nullopt;
  try {
    return analyze_critical_point(model, refine_E_star(model, br, cs, tol, nopt), modes, tol, nopt);
  } catch (const Error& e) {
    if (e.code() != Errc::BracketLost) throw;
  }
  const Grid fine = Grid::from_spacing(model.grid().half_width(), 0.5 * model.grid().dx());
  const Model fm = model.regridded(fine);
  const auto& plo = br.points.at(cs.index_lo);
  const BranchPoint* phi = nullptr;
  for (const auto& p : br.points)
    if (p.E() == cs.bracket->second) phi = &p;
  auto cp = refine_E_star(fm, plo.E(), resample(plo.state.phi, fine), phi->E(), resample(phi->state.phi, fine), tol, nopt);
  auto rep = analyze_critical_point(fm, std::move(cp), modes, tol, nopt);
  rep.regridded = true;
  return rep;
}

/// Projection of a state onto the critical direction: a = <phi, phi*>.
inline double amplitude_along(const GridFunction& phi, const GridFunction& phi_star) { return inner(phi, phi_star); }

/// Unconstrained Newton at E = E* + Q a0^2 / 2 from psi* + direction a0 phi*.
inline StationaryState switch_state(const Model& model, const BifurcationReport& rep, double a0, int direction,
                                    const NewtonOptions& nopt = {}) {
  if (rep.classification == PitchforkKind::Degenerate)
    throw Error(Errc::DegenerateLambdaPrime, "cannot switch at a degenerate crossing");
  const double E = rep.E_star + 0.5 * rep.Q.Q * a0 * a0;
  GridFunction seed = rep.psi_star.phi + (direction >= 0 ? a0 : -a0) * rep.phi_star;
  NewtonOptions o = nopt;
  o.symmetric_constraint = false;
  StationaryState st = newton_solve(model, seed, E, o);
  if (l2_norm(antisymmetric_part(st.phi)) <= 1e-8 * l2_norm(st.phi))
    throw Error(Errc::FellBackToSymmetric, "Newton returned to the symmetric branch");
  return st;
}

/// Switch onto an asymmetric branch and continue it toward E_target.
inline Branch branch_switch(const Model& model, const BifurcationReport& rep, double a0, int direction, double E_target,
                            ContinuationControls ctl = {}) {
  StationaryState st = switch_state(model, rep, a0, direction, ctl.newton);
  ctl.land_crossing = false;
  const auto sym = direction >= 0 ? BranchSymmetry::AsymmetricPlus : BranchSymmetry::AsymmetricMinus;
  Branch br = continue_branch(model, st, E_target, ctl, sym, Provenance::FromBranchSwitch);
  branch_derivatives(model, br);
  return br;
}

struct QuadraticLawFit {
  std::vector<double> a;
  std::vector<double> dE;
  double half_Q_fit = 0.0;  // a^2 coefficient of E - E*
  double quartic = 0.0;     // a^4 coefficient, fitted when three or more samples exist
  double relative_error = 0.0;
};

/// Converge asymmetric states at E* + Q a0^2/2 for several a0 and fit the
/// measured amplitude law, checking the pitchfork's quadratic shape.
inline QuadraticLawFit quadratic_law_fit(const Model& model, const BifurcationReport& rep,
                                         const std::vector<double>& a0_values, const NewtonOptions& nopt = {}) {
  QuadraticLawFit f;
  for (double a0 : a0_values) {
    const StationaryState st = switch_state(model, rep, a0, +1, nopt);
    f.a.push_back(amplitude_along(st.phi, rep.phi_star));
    f.dE.push_back(st.E - rep.E_star);
  }
  // normal equations for dE = h a^2 (+ q a^4)
  double s22 = 0.0, s24 = 0.0, s44 = 0.0, y2 = 0.0, y4 = 0.0;
  for (std::size_t i = 0; i < f.a.size(); ++i) {
    const double a2 = f.a[i] * f.a[i];
    s22 += a2 * a2;
    s24 += a2 * a2 * a2;
    s44 += a2 * a2 * a2 * a2;
    y2 += a2 * f.dE[i];
    y4 += a2 * a2 * f.dE[i];
  }
  const double det = s22 * s44 - s24 * s24;
  if (f.a.size() >= 3 && det > 1e-12 * s22 * s44) {
    f.half_Q_fit = (y2 * s44 - y4 * s24) / det;
    f.quartic = (s22 * y4 - s24 * y2) / det;
  } else if (s22 > 0.0) {
    f.half_Q_fit = y2 / s22;
  }
  f.relative_error = std::abs(f.half_Q_fit - 0.5 * rep.Q.Q) / std::abs(0.5 * rep.Q.Q);
  return f;
}

/// Structured key = value record.
inline void write_report(std::ostream& os, const BifurcationReport& r, const ProblemParams& prm) {
  os.precision(12);
  os << "E_star = " << r.E_star << '\n'
     << "lambda_at_star = " << r.lambda_at_star << '\n'
     << "lambda_prime = " << r.lambda_prime.value << '\n'
     << "lambda_prime_fd = " << r.lambda_prime.finite_difference << '\n'
     << "lambda_prime_discrepancy = " << r.lambda_prime.relative_discrepancy << '\n'
     << "lambda_prime_consistent = " << (r.lambda_prime.consistent ? "true" : "false") << '\n'
     << "Q = " << r.Q.Q << '\n'
     << "Q_term_local = " << r.Q.term_local << '\n'
     << "Q_term_resolvent = " << r.Q.term_resolvent << '\n'
     << "Q_complement_residual = " << r.Q.complement_residual << '\n'
     << "R = " << r.R << '\n'
     << "N_prime = " << r.N_prime << '\n'
     << "N_prime_fd = " << r.lambda_prime.N_prime_fd << '\n'
     << "N_star = " << r.psi_star.N << '\n';
  if (r.a_star) {
    os << "a_star = " << r.a_star->projection << '\n'
       << "a_star_asymptotic = " << r.a_star->asymptotic << '\n'
       << "a_star_asymptotic_no_norm = " << r.a_star->asymptotic_no_norm << '\n'
       << "a_star_odd_overlap = " << r.a_star->odd_overlap << '\n';
  }
  const auto ref = to_reference_units(r.E_star, r.Q.Q, r.R, r.N_prime, r.a_star ? r.a_star->projection : 0.0, prm);
  os << "units = run (c = " << prm.scale() << ", sigma = " << prm.sigma << ")\n"
     << "E_star_ref = " << ref.E_star << '\n'
     << "Q_ref = " << ref.Q << '\n'
     << "R_ref = " << ref.R << '\n'
     << "N_prime_ref = " << ref.N_prime << '\n';
  if (r.a_star) os << "a_star_ref = " << ref.a_star << '\n';
  os << "units_note = *_ref values are for c = 1, sigma = -1\n"
     << "classification = " << to_string(r.classification) << '\n'
     << "rationale = " << r.rationale << '\n'
     << "dx = " << r.dx << '\n'
     << "regridded = " << (r.regridded ? "true" : "false") << '\n';
}

}  // namespace nlsbif
