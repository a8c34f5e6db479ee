#include "domdec/errors.hpp"
#include "domdec/multiscale.hpp"
#include "oracles.hpp"
#include "random_states.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace domdec;
using fixture::randomFeasibleState;
using fixture::randomImage;

namespace {

double relErr(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace

TEST(Hierarchy, SingleLayerAtBaseSize) {
  std::mt19937_64 rng(1);
  auto mu = randomImage(8, rng), nu = randomImage(8, rng);
  auto h = buildHierarchy(mu, nu, 8, 4);
  EXPECT_EQ(h.n, 3);
  ASSERT_EQ(h.layers.size(), 1u);
  EXPECT_EQ(h.layers[0].partitions.basic.size(), 4u);
}

TEST(Hierarchy, UniformImageStaysUniform) {
  auto u = DiscreteMeasure::uniform(64 * 64);
  auto h = buildHierarchy(u, u, 64, 4);
  ASSERT_EQ(h.layers.size(), 4u);
  for (std::size_t k = 0; k < h.layers.size(); ++k) {
    const auto& L = h.layers[k];
    const double w = 1.0 / static_cast<double>(L.mu.size());
    for (double v : L.mu.weights()) EXPECT_NEAR(v, w, 1e-15);
    EXPECT_DOUBLE_EQ(L.geometry.spacing(), std::ldexp(1.0, 6 - L.level));
  }
}

TEST(Hierarchy, ParentSumsAndUnitMass) {
  std::mt19937_64 rng(2);
  auto mu = randomImage(16, rng), nu = randomImage(16, rng);
  auto h = buildHierarchy(mu, nu, 16, 4);
  ASSERT_EQ(h.layers.size(), 2u);
  for (const auto& L : h.layers) EXPECT_NEAR(L.mu.totalMass(), 1.0, 1e-15);
  std::vector<double> sums(64, 0.0);
  for (Index x = 0; x < 256; ++x) sums[h.parentPoint(1, x)] += mu[x];
  for (Index p = 0; p < 64; ++p) EXPECT_NEAR(sums[p], h.layers[0].mu[p], 1e-15);
  // Every fine basic cell lies inside its recorded parent cell.
  const auto& fb = h.layers[1].partitions.basic;
  const auto& cb = h.layers[0].partitions.basic;
  for (std::size_t i = 0; i < fb.size(); ++i)
    for (Index x : fb.cells[i]) EXPECT_EQ(cb.cellOf[h.parentPoint(1, x)], h.parentCell(1, static_cast<Index>(i)));
}

TEST(Hierarchy, CoarseCellSizeCappedAtHalfSide) {
  auto u = DiscreteMeasure::uniform(32 * 32);
  auto h = buildHierarchy(u, u, 32, 8);
  EXPECT_EQ(h.layers[0].cellSize, 4);
  EXPECT_EQ(h.layers[1].cellSize, 8);
  EXPECT_EQ(h.layers[2].cellSize, 8);
  EXPECT_THROW(buildHierarchy(u, u, 32, 3), ConfigError);
  EXPECT_THROW(buildHierarchy(u, u, 16, 4), ConsistencyError);
}

TEST(RefineMarginals, MatchesFormulaPointwise) {
  std::mt19937_64 rng(3);
  auto mu = randomImage(16, rng), nu = randomImage(16, rng);
  auto h = buildHierarchy(mu, nu, 16, 2);
  const auto& C = h.layers[0];
  const auto& F = h.layers[1];
  auto coarse = randomFeasibleState(C, rng, true);
  auto fine = refineMarginals(coarse, h, 1);
  for (std::size_t i = 0; i < F.partitions.basic.size(); ++i) {
    // Independent evaluation: parents from coordinates, not from the hierarchy.
    const Index x0 = F.partitions.basic.cells[i].front();
    const int pr = static_cast<int>(x0 / 16) / 2, pc = static_cast<int>(x0 % 16) / 2;
    const Index j = C.partitions.basic.cellOf[static_cast<Index>(pr * 8 + pc)];
    for (Index y = 0; y < 256; ++y) {
      const Index py = static_cast<Index>((y / 16 / 2) * 8 + (y % 16) / 2);
      const double expected = nu[y] * coarse.basicMarginals[j].at(py) / C.nu[py] *
                              F.partitions.basic.cellMasses[i] / C.partitions.basic.cellMasses[j];
      EXPECT_NEAR(fine.basicMarginals[i].at(y), expected, 1e-15 * std::max(expected, 1e-3));
    }
  }
}

TEST(RefineMarginals, WorkedExample) {
  // nu = (0.6, 0.4) on the children of one coarse point with nû_j = 0.5, nû = 1,
  // child-cell mass 0.2 and parent-cell mass 0.5.
  const double v = 0.6 * (0.5 / 1.0) * (0.2 / 0.5), w = 0.4 * (0.5 / 1.0) * (0.2 / 0.5);
  EXPECT_NEAR(v, 0.12, 1e-15);
  EXPECT_NEAR(w, 0.08, 1e-15);
  EXPECT_NEAR(v + w, 0.2, 1e-15);
}

TEST(RefineMarginals, SingleParentRecoversProduct) {
  // One coarse basic marginal per coarse cell equal to its product marginal.
  std::mt19937_64 rng(4);
  auto mu = randomImage(16, rng), nu = randomImage(16, rng);
  auto h = buildHierarchy(mu, nu, 16, 4);
  auto coarse = initializeProductState(h.layers[0].partitions, h.layers[0].nu, 1.0);
  auto fine = refineMarginals(coarse, h, 1);
  const auto& fb = h.layers[1].partitions.basic;
  for (std::size_t i = 0; i < fb.size(); ++i)
    for (Index y = 0; y < 256; ++y)
      EXPECT_NEAR(fine.basicMarginals[i].at(y), fb.cellMasses[i] * nu[y], 1e-16);
}

TEST(RefineMarginals, FeasibleOnRandomStates) {
  std::mt19937_64 rng(5);
  int checked = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int side = trial % 4 == 3 ? 32 : 16;
    const int s = trial % 2 ? 2 : 4;
    auto mu = randomImage(side, rng, trial % 3 == 0 ? 0.5 : 0.0);
    auto nu = randomImage(side, rng, trial % 5 == 0 ? 0.5 : 0.0);
    auto h = buildHierarchy(mu, nu, side, s);
    const std::size_t k = h.layers.size() - 1;
    auto coarse = randomFeasibleState(h.layers[k - 1], rng, trial % 2 == 0);
    auto fine = refineMarginals(coarse, h, k);
    const auto& F = h.layers[k];
    std::vector<double> total(F.nu.size(), 0.0);
    for (std::size_t i = 0; i < fine.basicMarginals.size(); ++i) {
      const auto& m = fine.basicMarginals[i];
      ASSERT_LE(relErr(m.totalMass(), F.partitions.basic.cellMasses[i]), 1e-12);
      for (std::size_t e = 0; e < m.size(); ++e) total[m.index[e]] += m.mass[e];
    }
    for (std::size_t y = 0; y < total.size(); ++y) ASSERT_LE(relErr(total[y], F.nu[y]), 1e-12);
    ++checked;
  }
  EXPECT_EQ(checked, 200);
}

TEST(RefineMarginals, InfeasibleCoarseStateRejected) {
  std::mt19937_64 rng(6);
  auto mu = randomImage(16, rng), nu = randomImage(16, rng);
  auto h = buildHierarchy(mu, nu, 16, 4);
  auto coarse = initializeProductState(h.layers[0].partitions, h.layers[0].nu, 1.0);
  coarse.basicMarginals[0].mass[0] *= 2.0;
  EXPECT_THROW(refineMarginals(coarse, h, 1), ConsistencyError);
  EXPECT_THROW(refineMarginals(coarse, h, 0), ConfigError);
}

TEST(Interpolation, ConstantAndLinear) {
  GridGeometry cg(8, 2.0), fg(16, 1.0);
  std::vector<double> c(64, 3.0);
  for (double v : interpolatePotential(c, cg, fg)) EXPECT_DOUBLE_EQ(v, 3.0);
  for (int r = 0; r < 8; ++r)
    for (int q = 0; q < 8; ++q) c[r * 8 + q] = 0.25 + 1.5 * (r * 2.0) - 0.75 * (q * 2.0);
  auto f = interpolatePotential(c, cg, fg);
  for (int r = 0; r < 16; ++r)
    for (int q = 0; q < 16; ++q) EXPECT_NEAR(f[r * 16 + q], 0.25 + 1.5 * r - 0.75 * q, 1e-12);
}

TEST(Interpolation, ReproducesCoarseNodes) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g(0.0, 1.0);
  GridGeometry cg(8, 2.0), fg(16, 1.0);
  std::vector<double> c(64);
  for (auto& v : c) v = g(rng);
  auto f = interpolatePotential(c, cg, fg);
  for (int r = 0; r < 8; ++r)
    for (int q = 0; q < 8; ++q) EXPECT_NEAR(f[(2 * r) * 16 + 2 * q], c[r * 8 + q], 1e-14);
  EXPECT_THROW(interpolatePotential(c, cg, GridGeometry(32, 0.5)), ConsistencyError);
}

TEST(SeedPotentials, RestrictsToEveryGroup) {
  auto u = DiscreteMeasure::uniform(256);
  auto h = buildHierarchy(u, u, 16, 4);
  const auto& p = h.layers[1].partitions;
  auto state = initializeProductState(p, u, 1.0);
  std::vector<double> alpha(256);
  for (int x = 0; x < 256; ++x) alpha[x] = 0.5 * x;
  seedPotentials(state, p, alpha);
  for (Label l : {Label::A, Label::B}) {
    const auto& cp = p.byLabel(l);
    for (std::size_t g = 0; g < cp.size(); ++g)
      for (std::size_t k = 0; k < cp.groupX[g].size(); ++k)
        EXPECT_EQ(state.potentials(l)[g][k], alpha[cp.groupX[g][k]]);
  }
}

TEST(Schedule, BaseLayer) {
  auto s = buildSchedule(3);
  ASSERT_EQ(s.size(), 4u);
  const double eps[] = {2.0, 1.0, 0.5, 0.25};
  const int sweeps[] = {4, 2, 2, 2};
  for (int k = 0; k < 4; ++k) {
    EXPECT_EQ(s[k].level, 3);
    EXPECT_DOUBLE_EQ(s[k].eps, eps[k]);
    EXPECT_EQ(s[k].sweeps, sweeps[k]);
  }
  EXPECT_EQ(totalSweeps(s), 10);
}

TEST(Schedule, SweepCounts) {
  EXPECT_EQ(totalSweeps(buildSchedule(6)), 34);
  EXPECT_EQ(totalSweeps(buildSchedule(8)), 50);
  for (int n = 3; n <= 10; ++n) EXPECT_EQ(totalSweeps(buildSchedule(n)), (n - 2) * 8 + 2);
  EXPECT_THROW(buildSchedule(2), ConfigError);
}

TEST(Schedule, LiteralStageListForSixLevels) {
  auto s = buildSchedule(6);
  // (level, eps, sweeps) with eps = 2 dx^2, dx^2, dx^2 / 2 and dx = 2^{6-l}.
  const std::vector<std::tuple<int, double, int>> expected{
      {3, 128, 4}, {3, 64, 2}, {3, 32, 2}, {4, 32, 4}, {4, 16, 2}, {4, 8, 2}, {5, 8, 4},
      {5, 4, 2},   {5, 2, 2},  {6, 2, 4},  {6, 1, 2},  {6, 0.5, 2}, {6, 0.25, 2}};
  ASSERT_EQ(s.size(), expected.size());
  for (std::size_t k = 0; k < s.size(); ++k) {
    EXPECT_EQ(s[k].level, std::get<0>(expected[k]));
    EXPECT_DOUBLE_EQ(s[k].eps, std::get<1>(expected[k]));
    EXPECT_EQ(s[k].sweeps, std::get<2>(expected[k]));
  }
  // c / eps at the first stage of each layer is the same in that layer's grid units.
  for (std::size_t k = 0; k + 4 < s.size(); k += 3) {
    const double dx = std::ldexp(1.0, 6 - s[k].level);
    EXPECT_DOUBLE_EQ(s[k].eps / (dx * dx), 2.0);
    EXPECT_DOUBLE_EQ(s[k + 3].eps * 4.0, s[k].eps);
  }
}
