#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "nlsbif/potentials.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace nlsbif;

namespace {

const double kPoschlTeller = (3.0 - std::sqrt(5.0)) / 2.0;

}  // namespace

TEST(Potential, ClosedFormsAndDerivatives) {
  const auto v = Potential::single_well();
  EXPECT_DOUBLE_EQ(v.value(0.0), -1.0);
  const auto d = Potential::double_well(0.7);
  EXPECT_NEAR(d.value(0.3), -1.0 / std::pow(std::cosh(1.0), 2) - 1.0 / std::pow(std::cosh(0.4), 2), 1e-14);
  const double h = 1e-4;
  for (double x : {-1.3, 0.2, 2.5}) {
    EXPECT_NEAR(d.first_derivative(x), (d.value(x + h) - d.value(x - h)) / (2 * h), 1e-7);
    EXPECT_NEAR(d.second_derivative(x), (d.value(x + h) - 2 * d.value(x) + d.value(x - h)) / (h * h), 1e-5);
  }
  EXPECT_NEAR(Potential::double_well(0.0).value(0.4), 2.0 * v.value(0.4), 1e-15);
}

TEST(Potential, DoubleWellThreshold) {
  EXPECT_NEAR(critical_separation(), 0.658478948462, 1e-9);
  EXPECT_NEAR(critical_separation(), std::acosh(std::sqrt(1.5)), 1e-15);
  EXPECT_FALSE(is_double_well(Potential::double_well(0.6)).is_double);
  EXPECT_TRUE(is_double_well(Potential::double_well(0.7)).is_double);
  EXPECT_EQ(code_of([] { is_double_well(Potential::single_well()); }), Errc::UnsupportedPotential);
}

TEST(Potential, WellMinimumIsACriticalPoint) {
  const auto v = Potential::double_well(2.0);
  const double m = double_well_minimum(v);
  EXPECT_NEAR(v.first_derivative(m), 0.0, 1e-10);
  EXPECT_GT(v.second_derivative(m), 0.0);
  EXPECT_LT(v.second_derivative(0.0), 0.0);
  EXPECT_EQ(double_well_minimum(Potential::double_well(0.6)), 0.0);
}

TEST(Potential, TabulatedValidation) {
  EXPECT_THROW(Potential::tabulated({-1, 0, 2}, {0, -1, 0}), Error);
  EXPECT_THROW(Potential::tabulated({-1, 0, 1}, {0.1, -1, 0.1}), Error);
  EXPECT_THROW(Potential::tabulated({-1, 0, 1}, {0, -1, 1e-3}, 1.0), Error);  // not even
  const auto t = Potential::tabulated({-2, -1, 0, 1, 2}, {0, -0.5, -1, -0.5, 0});
  EXPECT_NEAR(t.value(0.0), -1.0, 1e-14);
  EXPECT_EQ(t.value(3.0), 0.0);
  EXPECT_TRUE(Potential::zero().is_zero());
}

TEST(Potential, TableFileRoundTrip) {
  const std::string path = testing::TempDir() + "nlsbif_table.txt";
  {
    std::ofstream f(path);
    f << "# x V\n";
    for (int i = -200; i <= 200; ++i) {
      const double x = 0.05 * i;
      f << x << ' ' << -1.0 / std::pow(std::cosh(x), 2) * (std::abs(x) < 9.99 ? 1.0 : 0.0) << '\n';
    }
  }
  const auto t = Potential::from_file(path, 1e-6);
  EXPECT_NEAR(t.value(0.33), -1.0 / std::pow(std::cosh(0.33), 2), 2e-6);
  std::remove(path.c_str());
  EXPECT_EQ(code_of([] { Potential::from_file("/nonexistent/table.txt"); }), Errc::IoError);
}

TEST(LinearModes, PoschlTellerGroundStateAgainstDenseOracle) {
  // small mesh: the dense oracle and the banded solver must agree to roundoff
  const Grid g = Grid::from_spacing(8.0, 0.1);
  auto op = second_derivative_matrix(g, 2);
  op.add_diagonal(Potential::single_well().sample(g).values());
  const auto ev = oracle::jacobi_eigenvalues(oracle::to_dense(op));
  const auto modes = solve_linear_modes(Potential::single_well(), g, 1);
  EXPECT_NEAR(modes.E0, -ev[0], 1e-10);
  EXPECT_NEAR(modes.E0, kPoschlTeller, 2e-3);
}

TEST(LinearModes, PoschlTellerOnProductionMesh) {
  const Grid g = Grid::from_spacing(25.0, 0.0125);
  const auto modes = solve_linear_modes(Potential::single_well(), g, 2);
  EXPECT_NEAR(modes.E0, kPoschlTeller, 5e-6);
  EXPECT_FALSE(modes.E1.has_value());  // sech^2 has a single bound state
  EXPECT_NEAR(inner(modes.psi0, modes.psi0), 1.0, 1e-12);
  EXPECT_GT(modes.psi0[g.center()], 0.0);
}

TEST(LinearModes, DoubleWellAtSeparationTenInHalfNormalization) {
  const Grid g = Grid::from_spacing(30.0, 0.0125);
  const auto m = solve_linear_modes(Potential::double_well(10.0), g, 2, Normalization::HalfScaled);
  ASSERT_TRUE(m.E1.has_value());
  EXPECT_NEAR(m.E0, 0.191046, 2e-4);
  EXPECT_NEAR(*m.E1, 0.191042, 2e-4);
  EXPECT_GT(m.E0, *m.E1);
}

TEST(LinearModes, ZeroPotentialHasNoBoundState) {
  const Grid g = Grid::from_spacing(10.0, 0.05);
  EXPECT_EQ(code_of([&] { solve_linear_modes(Potential::zero(), g, 1); }), Errc::NoBoundState);
}

TEST(LinearModes, SplittingDecreasesAndModesLocalize) {
  const Grid g = Grid::from_spacing(30.0, 0.025);
  const auto rows = double_well_splitting({4.0, 6.0, 8.0, 10.0}, g);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_GT(rows[i].splitting, 0.0);
    if (i > 0) {
      EXPECT_LT(rows[i].splitting, rows[i - 1].splitting);
      EXPECT_LT(rows[i].symmetric_mode_distance, rows[i - 1].symmetric_mode_distance);
    }
  }
  EXPECT_LT(rows.back().symmetric_mode_distance, 1e-3);
}

TEST(LinearModes, ZeroSeparationIsTheDoubledWell) {
  const Grid g = Grid::from_spacing(20.0, 0.025);
  const auto rows = double_well_splitting({0.0}, g);
  const auto direct = solve_linear_modes(Potential::double_well(0.0), g, 1);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_DOUBLE_EQ(rows[0].E0, direct.E0);
  // -d^2 - 2 sech^2 has E0 = 1 exactly (l = 1 Poschl-Teller)
  EXPECT_NEAR(rows[0].E0, 1.0, 1e-3);
}
