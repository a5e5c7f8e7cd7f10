#include <gtest/gtest.h>

#include <cmath>

#include "nlsbif/asymptotics.hpp"
#include "support.hpp"

using namespace nlsbif;

namespace {

ProblemParams params(double p) {
  ProblemParams q;
  q.p = p;
  q.sigma = -1.0;
  return q;
}

LocalizedOptions localized(double ppw) {
  LocalizedOptions o;
  o.points_per_width = ppw;
  return o;
}

}  // namespace

TEST(Fits, LineFitIsExactOnLines) {
  const auto f = fit_line({1, 2, 4, 7}, {3, 5, 9, 15});
  EXPECT_NEAR(f.slope, 2.0, 1e-14);
  EXPECT_NEAR(f.intercept, 1.0, 1e-14);
  EXPECT_NEAR(f.r2, 1.0, 1e-14);
  EXPECT_EQ(code_of([] { fit_line({1, 1}, {2, 3}); }), Errc::InvalidArgument);
}

TEST(Fits, QuarticLawRecoversManufacturedCoefficients) {
  std::vector<double> R{0.15, 0.125, 0.1, 0.075, 0.05}, y;
  for (double r : R) y.push_back(0.3 - 0.8 * std::pow(r, 4) + 5.0 * std::pow(r, 6));
  const auto f = fit_quartic_law(R, y);
  EXPECT_NEAR(f.c0, 0.3, 1e-12);
  EXPECT_NEAR(f.c4, -0.8, 1e-8);
  EXPECT_NEAR(f.c6, 5.0, 1e-5);
}

TEST(Rescaling, ExactSolitonMapsToTheLimitProfile) {
  const auto v = Potential::zero();
  for (double E : {4.0, 25.0}) {
    const Model m(Grid::from_spacing(12.0, 0.002), v, params(2.0));
    StationaryState st;
    st.E = E;
    st.phi = seed_soliton_at(m, 0.0, E);
    const auto u = rescale_state(st, 0.0, v, m.params());
    EXPECT_LE(max_abs(u - soliton_profile(2.0, -1.0, reference_grid())), 1e-6) << "E = " << E;
  }
  EXPECT_EQ(code_of([&] { concentration_width(-1.0, 0.0, v, params(1.0)); }), Errc::NonpositiveShiftedE);
}

TEST(Rescaling, LargeEStatesApproachTheLimitProfile) {
  const auto v = Potential::double_well(0.7);
  const auto center = solve_localized(v, params(1.0), 0.0, 200.0, localized(16));
  EXPECT_LE(center.profile_distance, 0.05);
  const auto w = Potential::double_well(2.0);
  const double xm = double_well_minimum(w);
  const auto off = solve_localized(w, params(1.0), xm, 200.0, localized(16));
  EXPECT_LE(off.profile_distance, 0.05);
  EXPECT_NEAR(off.state.x_cm, xm, off.R);
}

TEST(Scaling, CubicSingleWellLaws) {
  std::vector<LocalizedSample> samples;
  for (double E : {50.0, 100.0, 200.0, 350.0, 500.0})
    samples.push_back(solve_localized(Potential::single_well(), params(1.0), 0.0, E, localized(16)));
  const auto rep = fit_scaling(samples, params(1.0), {50.0, 500.0});
  ASSERT_EQ(rep.fits.size(), 3u);
  for (const auto& f : rep.fits) EXPECT_NEAR(f.exponent_fitted, f.exponent_expected, 0.03) << to_string(f.quantity);
  EXPECT_NEAR(rep.ratio_N / rep.ratio_N_expected, 1.0, 0.05);
  EXPECT_NEAR(rep.ratio_grad / rep.ratio_grad_expected, 1.0, 0.05);
  EXPECT_TRUE(rep.profile_monotone);
}

TEST(Scaling, NarrowWindowIsRejected) {
  std::vector<LocalizedSample> samples;
  for (double E : {50.0, 70.0, 100.0})
    samples.push_back(solve_localized(Potential::single_well(), params(1.0), 0.0, E, localized(16)));
  EXPECT_EQ(code_of([&] { fit_scaling(samples, params(1.0), {50.0, 100.0}); }), Errc::WindowTooNarrow);
}

TEST(Scaling, UnresolvedSamplesAreRejected) {
  LocalizedSample s;
  s.E = 100.0;
  s.resolved = false;
  EXPECT_EQ(code_of([&] { fit_scaling({s, s, s}, params(1.0), {10.0, 1000.0}); }), Errc::UnderResolved);
}

TEST(Localized, MorseCountsAndCurvatureSigns) {
  const auto v = Potential::double_well(2.0);
  const double xm = double_well_minimum(v);
  std::vector<double> Es;
  for (double R : {0.15, 0.125, 0.1, 0.075}) Es.push_back(1.0 / (R * R) + 1.0);
  for (double x0 : {0.0, xm, -xm}) {
    const auto r = localized_branch_check(x0, v, params(1.0), Es, localized(40));
    EXPECT_TRUE(r.counts_ok) << "x0 = " << x0;
    EXPECT_TRUE(r.sign_ok) << "x0 = " << x0;
    for (const auto& s : r.samples) EXPECT_EQ(s.n_negative, x0 == 0.0 ? 2u : 1u);
  }
  EXPECT_EQ(code_of([&] { localized_branch_check(1.0, v, params(1.0), Es); }), Errc::NotCriticalPoint);
}

TEST(Localized, PinningProbe) {
  const auto v = Potential::double_well(2.0);
  const auto slope = nonexistence_probe(1.0, v, params(1.0), 100.0);
  EXPECT_FALSE(slope.branch_pinned());
  const auto well = nonexistence_probe(double_well_minimum(v), v, params(1.0), 100.0);
  EXPECT_EQ(well.outcome, PinningOutcome::Pinned);
  const auto free = nonexistence_probe(0.7, Potential::zero(), params(1.0), 100.0);
  EXPECT_EQ(free.outcome, PinningOutcome::Neutral);
}
