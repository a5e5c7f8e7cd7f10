#include <gtest/gtest.h>

#include <cmath>

#include "nlsbif/bifurcation.hpp"
#include "support.hpp"

using namespace nlsbif;

namespace {

ProblemParams figure_params(double p) {
  ProblemParams q;
  q.p = p;
  q.sigma = -2.0;
  q.normalization = Normalization::HalfScaled;
  return q;
}

/// A branch carrying only manufactured lambda1 values.
Branch synthetic(const std::vector<double>& E, const std::function<double(double)>& lambda) {
  Branch br;
  for (double e : E) {
    BranchPoint p;
    p.state.E = e;
    p.lplus.eigenvalues = {-1.0, lambda(e)};
    br.points.push_back(p);
  }
  return br;
}

struct Study {
  Model model;
  LinearModes modes;
  Branch even;
  BifurcationReport rep;
};

Study study(double s, double p, double E_max, double dx = 0.0125) {
  Model m(Grid::from_spacing(25.0, dx), Potential::double_well(s), figure_params(p));
  auto modes = model_linear_modes(m);
  auto br = trace_from_linear(m, modes, BranchSymmetry::Even, E_max);
  auto rep = find_bifurcation(m, br, modes);
  if (!rep) throw std::runtime_error("no crossing");
  return {std::move(m), std::move(modes), std::move(br), std::move(*rep)};
}

const Study& cubic() {
  static const Study s = study(0.7, 1.0, 11.5);
  return s;
}

}  // namespace

TEST(Crossing, AffineLambdaGivesTheExactRoot) {
  const auto br = synthetic({1.0, 1.7, 2.2, 3.1, 4.0}, [](double e) { return 2.5 - e; });
  const auto all = all_crossings(br);
  ASSERT_EQ(all.size(), 1u);
  EXPECT_NEAR(all[0].E, 2.5, 1e-14);
  EXPECT_TRUE(all[0].to_negative);
  const auto cs = locate_crossing(br);
  ASSERT_TRUE(cs.bracket);
  EXPECT_EQ(cs.bracket->first, 2.2);
  EXPECT_EQ(cs.bracket->second, 3.1);
}

TEST(Crossing, NoSignChangeReportsTheMinimum) {
  const auto br = synthetic({1.0, 2.0, 3.0}, [](double e) { return 1.0 + (e - 2.0) * (e - 2.0); });
  const auto cs = locate_crossing(br);
  EXPECT_FALSE(cs.bracket);
  EXPECT_EQ(cs.lambda_min, 1.0);
  EXPECT_EQ(cs.E_at_min, 2.0);
}

TEST(Crossing, DownAndUpCrossings) {
  const auto br = synthetic({0, 1, 2, 3, 4, 5, 6}, [](double e) { return (e - 1.5) * (e - 4.5); });
  const auto all = all_crossings(br);
  ASSERT_EQ(all.size(), 2u);
  EXPECT_TRUE(all[0].to_negative);
  EXPECT_FALSE(all[1].to_negative);
}

TEST(Coefficients, ManufacturedR) { EXPECT_DOUBLE_EQ(compute_R(4.0, -2.0, 0.0), -1.0); }

TEST(Coefficients, ZeroQIsRejected) { EXPECT_EQ(code_of([] { compute_R(0.0, -2.0, 1.0); }), Errc::ZeroQ); }

TEST(Coefficients, ClassificationRules) {
  EXPECT_EQ(classify_pitchfork(-2.0, 1.0, 1.0), PitchforkKind::Supercritical);
  EXPECT_EQ(classify_pitchfork(-2.0, 1.0, -1.0), PitchforkKind::SubcriticalR);
  EXPECT_EQ(classify_pitchfork(-2.0, -1.0, 1.0), PitchforkKind::SubcriticalQ);
  EXPECT_EQ(classify_pitchfork(1e-6, 1.0, 1.0), PitchforkKind::Degenerate);
}

TEST(LargeSeparation, NumeratorChangesSignAtTheCriticalPower) {
  const double ps = critical_power();
  EXPECT_NEAR(ps, 3.302775637732, 1e-12);
  EXPECT_NEAR(large_separation_limits(ps, -1.0, 1.0).R_numerator, 0.0, 1e-12);
  EXPECT_DOUBLE_EQ(large_separation_limits(3.0, -1.0, 1.0).R_numerator, 1.0);
  EXPECT_DOUBLE_EQ(large_separation_limits(5.0, -1.0, 1.0).R_numerator, -9.0);
  EXPECT_EQ(large_separation_limits(ps - 1e-6, -1.0, 1.0).predicted, PitchforkKind::Supercritical);
  EXPECT_EQ(large_separation_limits(ps + 1e-6, -1.0, 1.0).predicted, PitchforkKind::SubcriticalR);
}

TEST(LargeSeparation, CubicValues) {
  // p = 1: Q -> 4 M0, R -> 1 / M0
  const auto l = large_separation_limits(1.0, -1.0, 0.5);
  EXPECT_DOUBLE_EQ(l.Q_scaled, 2.0);
  EXPECT_DOUBLE_EQ(l.R_scaled, 2.0);
  EXPECT_DOUBLE_EQ(l.lambda_prime, -2.0);
}

TEST(Units, ReferenceConversionRoundTrip) {
  ProblemParams q = figure_params(3.0);
  const auto u = to_reference_units(0.2, 0.004, 100.0, 50.0, 0.3, q);
  EXPECT_DOUBLE_EQ(u.E_star, 0.4);
  EXPECT_NEAR(u.a_star, std::pow(2.0, 1.0 / 6.0) * 0.3, 1e-15);
  // dE = Q a^2 / 2 must be invariant: dE_ref = dE_run / c
  EXPECT_NEAR(0.5 * u.Q * u.a_star * u.a_star, 0.5 * 0.004 * 0.09 / 0.5, 1e-15);
}

TEST(Pitchfork, CubicCriticalPoint) {
  const auto& r = cubic().rep;
  EXPECT_NEAR(r.E_star, 10.68, 0.05);
  EXPECT_NEAR(r.lambda_at_star, 0.0, 1e-8);
  EXPECT_TRUE(r.lambda_prime.consistent);
  EXPECT_LT(r.lambda_prime.value, 0.0);
  EXPECT_EQ(r.classification, PitchforkKind::Supercritical);
  EXPECT_EQ(parity_of(r.phi_star), Parity::Odd);
  EXPECT_EQ(parity_of(r.psi_star.phi), Parity::Even);
  ASSERT_TRUE(r.a_star);
  EXPECT_EQ(r.a_star->odd_overlap, 0.0);
}

TEST(Pitchfork, OrthogonalityByParity) {
  const auto& r = cubic().rep;
  GridFunction rhs(r.phi_star.grid());
  for (std::size_t i = 0; i < rhs.size(); ++i) rhs[i] = r.psi_star.phi[i] * r.phi_star[i] * r.phi_star[i];
  EXPECT_EQ(inner(rhs, r.phi_star), 0.0);
}

TEST(Pitchfork, QuadraticLawAndMirrorBranches) {
  const auto& s = cubic();
  const double scale = l2_norm(s.rep.psi_star.phi);
  const auto fit = quadratic_law_fit(s.model, s.rep, {0.01 * scale, 0.02 * scale, 0.04 * scale});
  EXPECT_LT(fit.relative_error, 0.1);
  const auto plus = switch_state(s.model, s.rep, 0.05 * scale, +1);
  const auto minus = switch_state(s.model, s.rep, 0.05 * scale, -1);
  EXPECT_LE(l2_norm(reflect(plus.phi) - minus.phi), 1e-8 * l2_norm(plus.phi));
  EXPECT_NEAR(plus.x_cm, -minus.x_cm, 1e-10);
  EXPECT_GT(plus.x_cm, 0.0);
}

TEST(Pitchfork, AsymmetricStateAtFifteenIsStableAndSingleHumped) {
  const auto& s = cubic();
  const double a0 = 0.05 * l2_norm(s.rep.psi_star.phi);
  ContinuationControls c;
  c.dE_initial = 0.01;
  const Branch br = branch_switch(s.model, s.rep, a0, +1, 15.0, c);
  const auto& last = br.points.back();
  EXPECT_DOUBLE_EQ(last.E(), 15.0);
  EXPECT_EQ(last.lplus.n_negative, 1u);
  EXPECT_NEAR(last.lminus_lowest, 0.0, 1e-7);
  EXPECT_EQ(stability_classify(br.points[br.points.size() - 3]).verdict, StabilityVerdict::Stable);
  // one local maximum, right of center
  const auto& phi = last.state.phi;
  int peaks = 0;
  for (std::size_t i = 1; i + 1 < phi.size(); ++i)
    if (phi[i] > phi[i - 1] && phi[i] >= phi[i + 1] && phi[i] > 1e-6) ++peaks;
  EXPECT_EQ(peaks, 1);
  EXPECT_GT(last.state.x_cm, 0.1);
}

TEST(Pitchfork, SubcriticalQuinticCase) {
  const auto s = study(4.0, 5.0, 0.2);
  EXPECT_NEAR(s.rep.E_star, 0.196, 0.003);
  EXPECT_GT(s.rep.Q.Q, 0.0);
  EXPECT_LT(s.rep.R, 0.0);
  EXPECT_EQ(s.rep.classification, PitchforkKind::SubcriticalR);
  const double a0 = 0.05 * l2_norm(s.rep.psi_star.phi);
  ContinuationControls c;
  c.dE_initial = 1e-4;
  const Branch br = branch_switch(s.model, s.rep, a0, +1, 0.22, c);
  const auto sc = find_slope_changes(s.model, br);
  ASSERT_FALSE(sc.empty());
  EXPECT_FALSE(sc[0].to_negative);
  EXPECT_NEAR(sc[0].E, 0.202, 0.003);
  // subcritical: unstable until the slope turns positive
  EXPECT_EQ(stability_classify(br.points[2]).verdict, StabilityVerdict::Unstable);
}

TEST(Pitchfork, SeparatedWellsApproachTheLimits) {
  // reference units, one resolution; a coarse sanity check of the s -> infinity trend
  ProblemParams q;
  q.p = 1.0;
  q.sigma = -1.0;
  const Model m(Grid::from_spacing(30.0, 0.025), Potential::double_well(8.0), q);
  const auto modes = model_linear_modes(m);
  const auto br = trace_from_linear(m, modes, BranchSymmetry::Even, modes.E0 + 0.05);
  const auto rep = find_bifurcation(m, br, modes);
  ASSERT_TRUE(rep && rep->a_star);
  const auto single = solve_linear_modes(Potential::single_well(), m.grid(), 1);
  const auto lim = large_separation_limits(1.0, -1.0, lq_norm_pow(single.psi0, 4.0));
  EXPECT_NEAR(rep->lambda_prime.value / lim.lambda_prime, 1.0, 0.05);
  EXPECT_NEAR(rep->Q.Q / lim.Q_scaled, 1.0, 0.05);
  EXPECT_NEAR(rep->R / lim.R_scaled, 1.0, 0.05);
  EXPECT_NEAR(rep->a_star->projection / rep->a_star->asymptotic, 1.0, 0.25);
}
