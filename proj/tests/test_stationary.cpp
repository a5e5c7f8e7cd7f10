#include <gtest/gtest.h>

#include <cmath>

#include "nlsbif/asymptotics.hpp"
#include "nlsbif/stationary.hpp"
#include "support.hpp"

using namespace nlsbif;

namespace {

ProblemParams params(double p, double sigma = -1.0, Normalization n = Normalization::Standard) {
  ProblemParams q;
  q.p = p;
  q.sigma = sigma;
  q.normalization = n;
  return q;
}

}  // namespace

TEST(Newton, ZeroSeedIsFlagged) {
  const Model m(Grid::from_spacing(10.0, 0.05), Potential::double_well(0.7), params(1.0));
  EXPECT_EQ(code_of([&] { newton_solve(m, GridFunction(m.grid()), 1.0); }), Errc::DivergedToZero);
}

TEST(Newton, RecoversTheCubicSoliton) {
  const Model m(Grid::from_spacing(20.0, 0.01), Potential::zero(), params(1.0));
  const auto seed = GridFunction::sample(m.grid(), [](double x) { return 1.4 / std::cosh(x); });
  const auto st = newton_solve(m, seed, 1.0, {.symmetric_constraint = true});
  const auto exact = GridFunction::sample(m.grid(), [](double x) { return std::sqrt(2.0) / std::cosh(x); });
  EXPECT_LE(max_abs(st.phi - exact), 1e-6);
  EXPECT_LE(st.stationarity_residual, 1e-10);
}

TEST(Newton, ConflictingConstraintsAreRejected) {
  const Model m(Grid::from_spacing(5.0, 0.1), Potential::single_well(), params(1.0));
  const auto seed = GridFunction::sample(m.grid(), [](double x) { return std::exp(-x * x); });
  EXPECT_EQ(code_of([&] { newton_solve(m, seed, 1.0, {.symmetric_constraint = true, .odd_constraint = true}); }),
            Errc::InvalidArgument);
}

TEST(Newton, OddConstraintKeepsExactParity) {
  const Model m(Grid::from_spacing(20.0, 0.02), Potential::double_well(2.0), params(1.0));
  const auto seed = GridFunction::sample(m.grid(), [](double x) { return std::tanh(x) / std::cosh(0.5 * x); });
  const auto st = newton_solve(m, seed, 1.0, {.odd_constraint = true});
  EXPECT_EQ(st.symmetry, Symmetry::Odd);
  for (std::size_t i = 0; i < m.grid().size(); ++i) EXPECT_EQ(st.phi[i], -st.phi[m.grid().size() - 1 - i]);
}

TEST(LinearSeed, AmplitudeLaw) {
  const Model m(Grid::from_spacing(20.0, 0.02), Potential::double_well(0.7), params(1.0));
  const auto modes = model_linear_modes(m);
  EXPECT_EQ(max_abs(seed_from_linear(modes, modes.E0, m.params())), 0.0);
  const double dE = 0.02;
  const auto s = seed_from_linear(modes, modes.E0 + dE, m.params());
  const double a = inner(s, modes.psi0);
  EXPECT_NEAR(a, std::sqrt(dE / lq_norm_pow(modes.psi0, 4.0)), 1e-12);
  EXPECT_EQ(code_of([&] { seed_from_linear(modes, modes.E0 - dE, m.params()); }), Errc::WrongSideOfE0);
}

TEST(LinearSeed, ConvergesQuicklyAndMassFollowsThePowerLaw) {
  // half-scaled single well, sigma = -2: N ~ (E - E0)^{1/p}
  const Model m(Grid::from_spacing(25.0, 0.025), Potential::single_well(), params(1.0, -2.0, Normalization::HalfScaled));
  const auto modes = model_linear_modes(m, 1);
  std::vector<double> lx, ly;
  for (double d : {1e-3, 3e-3, 1e-2, 3e-2, 1e-1}) {
    const auto st = newton_solve(m, seed_from_linear(modes, modes.E0 + d, m.params()), modes.E0 + d,
                                 {.symmetric_constraint = true});
    if (d == 1e-2) EXPECT_LE(st.iterations, 6);
    lx.push_back(std::log(d));
    ly.push_back(std::log(st.N));
  }
  EXPECT_NEAR(fit_line(lx, ly).slope, 1.0, 0.05);
}

TEST(LinearSeed, DoubleWellStateMatchesAmplitudeLaw) {
  const Model m(Grid::from_spacing(25.0, 0.0125), Potential::double_well(0.7), params(1.0));
  const auto modes = model_linear_modes(m);
  const double E = modes.E0 + 1e-3;
  const auto seed = seed_from_linear(modes, E, m.params());
  const auto st = newton_solve(m, seed, E, {.symmetric_constraint = true});
  EXPECT_EQ(st.symmetry, Symmetry::Even);
  EXPECT_NEAR(st.N / inner(seed, seed), 1.0, 5e-3);
}

TEST(SolitonSeed, FreeProblemIsScaleInvariant) {
  // with the mesh shrunk along with the width, the relative residual is E-independent
  std::vector<double> rel;
  for (double E : {1.0, 4.0, 25.0}) {
    const double k = std::sqrt(E);
    const Model m(Grid::from_spacing(30.0 / k, 0.005 / k), Potential::zero(), params(2.0));
    const auto seed = seed_soliton_at(m, 0.0, E);
    rel.push_back(l2_norm(m.residual(seed, E)) / (E * l2_norm(seed)));
    EXPECT_LE(rel.back(), 1e-6) << "E = " << E;
  }
  EXPECT_NEAR(rel[1] / rel[0], 1.0, 1e-3);
  EXPECT_NEAR(rel[2] / rel[0], 1.0, 1e-3);
}

TEST(SolitonSeed, WellMinimumAndPotentialMaximum) {
  const auto v = Potential::double_well(2.0);
  const double xm = double_well_minimum(v);
  const double E = 100.0;
  const Model m(Grid::from_spacing(6.0, 0.005), v, params(1.0));
  const auto off = newton_solve(m, seed_soliton_at(m, xm, E), E);
  EXPECT_NEAR(off.x_cm, xm, 0.02);
  EXPECT_EQ(off.symmetry, Symmetry::None);
  const auto mid = newton_solve(m, seed_soliton_at(m, 0.0, E), E, {.symmetric_constraint = true});
  EXPECT_EQ(mid.symmetry, Symmetry::Even);
  const auto spec = lowest_eigenpairs(m.lplus(mid.phi, E), m.grid(), 2);
  EXPECT_LT(spec.eigenvalues[1], 0.0);
  EXPECT_EQ(code_of([&] { seed_soliton_at(m, 0.0, -5.0); }), Errc::NonpositiveShiftedE);
}

TEST(Diagnostics, ZeroStateAndSymmetricCenter) {
  const Model m(Grid::from_spacing(10.0, 0.05), Potential::double_well(0.7), params(1.0));
  StationaryState z;
  z.E = 1.0;
  z.phi = GridFunction(m.grid());
  diagnostics(m, z);
  EXPECT_EQ(z.N, 0.0);
  EXPECT_EQ(z.norm_2p2, 0.0);
  EXPECT_EQ(z.energy, 0.0);
  EXPECT_EQ(z.x_cm, 0.0);
  EXPECT_EQ(z.residual_norm, 0.0);
  StationaryState e;
  e.E = 1.0;
  e.phi = GridFunction::sample(m.grid(), [](double x) { return std::exp(-x * x) * (1 + x * x); });
  diagnostics(m, e);
  EXPECT_EQ(e.x_cm, 0.0);
}

TEST(Diagnostics, IdentitiesHoldAtConvergedStates) {
  for (double p : {1.0, 2.0, 3.0}) {
    const Model m(Grid::from_spacing(20.0, 0.01), Potential::double_well(0.7), params(p));
    const auto seed = seed_soliton_at(m, 0.0, 2.0);
    const auto st = newton_solve(m, seed, 2.0, {.symmetric_constraint = true});
    EXPECT_LE(st.stationarity_residual, 1e-6) << "p = " << p;
    EXPECT_LE(st.pohozaev_residual, 1e-4) << "p = " << p;
  }
}
