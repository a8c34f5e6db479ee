#include "domdec/errors.hpp"
#include "domdec/sinkhorn.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace domdec;

namespace {

struct Dense {
  Eigen::MatrixXd c;
  DiscreteMeasure mu;
  DiscreteMeasure nu;
  CostOracle cost;
};

Dense randomDense(std::mt19937_64& rng, int nx, int ny, double cmax) {
  std::uniform_real_distribution<double> d(0.0, cmax);
  Eigen::MatrixXd c(nx, ny);
  for (Eigen::Index i = 0; i < c.size(); ++i) c.data()[i] = d(rng);
  return {c, DiscreteMeasure(oracle::randomProbability(rng, nx)),
          DiscreteMeasure(oracle::randomProbability(rng, ny)), CostOracle::dense(c)};
}

SinkhornConfig tight() {
  SinkhornConfig cfg;
  cfg.theta = 0.0;
  cfg.norm = StopNorm::Linf;
  cfg.maxIterations = 200000;
  return cfg;
}

std::vector<double> colSums(const KernelBlock& b) {
  std::vector<double> s(b.cols.size(), 0.0);
  for (std::size_t e = 0; e < b.values.size(); ++e) s[b.colIndex[e]] += b.values[e];
  return s;
}

}  // namespace

TEST(Sinkhorn, SinglePoint) {
  Eigen::MatrixXd c = Eigen::MatrixXd::Constant(1, 1, 3.0);
  auto cost = CostOracle::dense(c);
  DiscreteMeasure m(std::vector<double>{1.0});
  auto p = globalProblem(m, m, cost, 0.5);
  std::vector<double> a(1, 0.0);
  auto r = sinkhornSolve(p, a, 1e-12, SinkhornConfig{});
  EXPECT_EQ(r.status, SinkhornStatus::Converged);
  EXPECT_EQ(r.iterations, 1);
  EXPECT_NEAR(r.coupling.values.at(0), 1.0, 1e-15);
  EXPECT_LE(r.xMarginalError, 1e-15);
}

TEST(Sinkhorn, TwoByTwoClosedForm) {
  Eigen::MatrixXd c(2, 2);
  c << 0, 1, 1, 0;
  auto cost = CostOracle::dense(c);
  DiscreteMeasure m(std::vector<double>{0.5, 0.5});
  auto p = globalProblem(m, m, cost, 1.0);
  std::vector<double> a(2, 0.0);
  for (bool exact : {false, true}) {
    auto cfg = tight();
    cfg.exact = exact;
    auto r = sinkhornSolve(p, a, 1e-14, cfg);
    ASSERT_EQ(r.status, SinkhornStatus::Converged);
    auto pi = toSparseCoupling(r.coupling, 2, 2).toDense();
    const double diag = 1.0 / (2.0 * (1.0 + std::exp(-1.0)));
    EXPECT_NEAR(pi(0, 0), diag, 1e-12);
    EXPECT_NEAR(pi(1, 1), diag, 1e-12);
    EXPECT_NEAR(pi(0, 1), 0.5 - diag, 1e-12);
    EXPECT_NEAR(diag, 0.365529, 1e-6);
  }
}

TEST(Sinkhorn, MatchesPlainScalingOracle) {
  std::mt19937_64 rng(11);
  for (int k = 0; k < 30; ++k) {
    const int nx = 2 + static_cast<int>(rng() % 6), ny = 2 + static_cast<int>(rng() % 6);
    auto inst = randomDense(rng, nx, ny, 10.0);
    const double eps = 1.0 + 2.0 * std::uniform_real_distribution<double>(0, 1)(rng);
    auto p = globalProblem(inst.mu, inst.nu, inst.cost, eps);
    std::vector<double> a(nx, 0.0);
    auto r = sinkhornSolve(p, a, 1e-14, tight());
    ASSERT_EQ(r.status, SinkhornStatus::Converged);
    auto pi = toSparseCoupling(r.coupling, nx, ny).toDense();
    auto ref = oracle::scaling(oracle::kernel(inst.c, inst.mu.weights(), inst.nu.weights(), eps),
                               inst.mu.weights(), inst.nu.weights(), 1e-15);
    EXPECT_LE((pi - ref.pi).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(Sinkhorn, ExactModeMatchesOracle) {
  std::mt19937_64 rng(12);
  for (int k = 0; k < 20; ++k) {
    auto inst = randomDense(rng, 5, 4, 10.0);
    auto p = globalProblem(inst.mu, inst.nu, inst.cost, 0.7);
    std::vector<double> a(5, 0.0);
    auto cfg = tight();
    cfg.exact = true;
    auto r = sinkhornSolve(p, a, 1e-13, cfg);
    ASSERT_EQ(r.status, SinkhornStatus::Converged);
    auto pi = toSparseCoupling(r.coupling, 5, 4).toDense();
    auto ref = oracle::scaling(oracle::kernel(inst.c, inst.mu.weights(), inst.nu.weights(), 0.7),
                               inst.mu.weights(), inst.nu.weights(), 1e-15);
    EXPECT_LE((pi - ref.pi).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(Sinkhorn, YMarginalExactAfterYIteration) {
  std::mt19937_64 rng(13);
  auto inst = randomDense(rng, 6, 7, 10.0);
  auto p = globalProblem(inst.mu, inst.nu, inst.cost, 0.5);
  std::vector<double> a(6, 0.0);
  for (int iters : {1, 3, 10, 40}) {
    auto cfg = tight();
    cfg.maxIterations = iters;
    cfg.checkEvery = 1;
    auto r = sinkhornSolve(p, a, 1e-300, cfg);
    auto s = colSums(r.coupling);
    for (std::size_t j = 0; j < s.size(); ++j) EXPECT_NEAR(s[j], p.nuHat[j], 1e-12 * p.nuHat[j]);
  }
}

TEST(Sinkhorn, DualAscentIsMonotone) {
  std::mt19937_64 rng(14);
  for (int k = 0; k < 10; ++k) {
    auto inst = randomDense(rng, 5, 6, 10.0);
    const double eps = 0.6;
    auto p = globalProblem(inst.mu, inst.nu, inst.cost, eps);
    const double kMass = inst.cost.kernelMass(inst.mu, inst.nu, eps);
    std::vector<double> a(5, 0.0);
    double prev = -INFINITY;
    for (int iters = 1; iters <= 60; ++iters) {
      auto cfg = tight();
      cfg.maxIterations = iters;
      cfg.checkEvery = 1;
      auto r = sinkhornSolve(p, a, 1e-300, cfg);
      const double j = dualScore(r.alpha, r.beta, inst.mu, inst.nu, inst.cost, eps, kMass);
      EXPECT_GE(j, prev - 1e-10);
      prev = j;
    }
  }
}

TEST(Sinkhorn, StopsOnL1Criterion) {
  std::mt19937_64 rng(15);
  auto inst = randomDense(rng, 8, 8, 10.0);
  auto p = globalProblem(inst.mu, inst.nu, inst.cost, 0.3);
  std::vector<double> a(8, 0.0);
  SinkhornConfig cfg;
  cfg.theta = 0.0;
  auto r = sinkhornSolve(p, a, 1e-4, cfg);
  ASSERT_EQ(r.status, SinkhornStatus::Converged);
  EXPECT_LE(r.xMarginalError, 1e-4);
  EXPECT_EQ(r.iterations % cfg.checkEvery, 0);
}

TEST(Sinkhorn, WarmRestartReachesColdFixedPoint) {
  std::mt19937_64 rng(16);
  auto inst = randomDense(rng, 6, 6, 10.0);
  std::vector<double> zero(6, 0.0);
  auto p = globalProblem(inst.mu, inst.nu, inst.cost, 2.0);
  auto coarse = sinkhornSolve(p, zero, 1e-12, tight());
  auto [alpha, beta] = rescalePotentials(coarse.alpha, coarse.beta, 2.0, 1.0);
  p.eps = 1.0;
  auto warm = sinkhornSolve(p, alpha, 1e-12, tight());
  auto cold = sinkhornSolve(p, zero, 1e-12, tight());
  ASSERT_EQ(warm.status, SinkhornStatus::Converged);
  auto a = toSparseCoupling(warm.coupling, 6, 6).toDense();
  auto b = toSparseCoupling(cold.coupling, 6, 6).toDense();
  EXPECT_LE((a - b).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LE(warm.iterations, cold.iterations);
}

TEST(Sinkhorn, AbsorptionKeepsLogDomainStable) {
  // Small eps relative to the cost range forces large potential increments.
  std::mt19937_64 rng(17);
  auto inst = randomDense(rng, 6, 6, 10.0);
  auto p = globalProblem(inst.mu, inst.nu, inst.cost, 0.05);
  std::vector<double> a(6, 0.0);
  auto cfg = tight();
  cfg.theta = 1e-10;
  auto r = sinkhornSolve(p, a, 1e-11, cfg);
  ASSERT_EQ(r.status, SinkhornStatus::Converged);
  for (double v : r.alpha) EXPECT_TRUE(std::isfinite(v));
  auto pi = toSparseCoupling(r.coupling, 6, 6);
  auto xm = pi.xMarginal();
  for (int i = 0; i < 6; ++i) EXPECT_NEAR(xm[i], inst.mu[i], 1e-10);
}

TEST(Sinkhorn, RejectsInconsistentProblems) {
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(2, 2);
  auto cost = CostOracle::dense(c);
  DiscreteMeasure m(std::vector<double>{0.5, 0.5});
  auto p = globalProblem(m, m, cost, 1.0);
  p.nuHat = {0.5, 0.6};
  std::vector<double> a(2, 0.0);
  EXPECT_THROW(sinkhornSolve(p, a, 1e-6, SinkhornConfig{}), ConsistencyError);
  p = globalProblem(m, m, cost, 1.0);
  EXPECT_THROW(sinkhornSolve(p, a, 0.0, SinkhornConfig{}), DomainError);
  std::vector<double> bad{0.0, NAN};
  EXPECT_THROW(sinkhornSolve(p, bad, 1e-6, SinkhornConfig{}), DomainError);
}

TEST(Truncation, Examples) {
  Eigen::MatrixXd c(2, 2);
  c << 0, 50, 50, 0;
  auto cost = CostOracle::dense(c);
  DiscreteMeasure ones(std::vector<double>{1.0, 1.0});
  auto block = buildKernelBlock({0, 1}, {0, 1}, ones, ones, cost, 1.0);
  ASSERT_EQ(block.entryCount(), 4u);
  std::vector<double> zero(2, 0.0);

  auto same = truncateKernel(block, zero, zero, 0.0);
  EXPECT_EQ(same.block.values, block.values);
  EXPECT_FALSE(same.emptyRowOrColumn);

  auto cut = truncateKernel(block, zero, zero, 1e-10);
  EXPECT_EQ(cut.block.entryCount(), 2u);
  EXPECT_FALSE(cut.emptyRowOrColumn);
  for (double v : cut.block.values) EXPECT_DOUBLE_EQ(v, 1.0);

  std::vector<double> sink{-100.0, 0.0};
  auto empty = truncateKernel(block, sink, zero, 1e-10);
  EXPECT_TRUE(empty.emptyRowOrColumn);
  EXPECT_THROW(truncateKernel(block, zero, zero, 1.0), DomainError);
}

TEST(Truncation, KeepsExactlyTheEntriesAboveTheta) {
  std::mt19937_64 rng(18);
  auto inst = randomDense(rng, 7, 9, 30.0);
  auto block = buildKernelBlock({0, 1, 2, 3, 4, 5, 6}, {0, 1, 2, 3, 4, 5, 6, 7, 8}, inst.mu,
                                inst.nu, inst.cost, 1.0);
  std::normal_distribution<double> g(0.0, 3.0);
  std::vector<double> a(7), b(9);
  for (auto& v : a) v = g(rng);
  for (auto& v : b) v = g(rng);
  auto t = truncateKernel(block, a, b, 1e-6);
  std::size_t expected = 0;
  for (int x = 0; x < 7; ++x)
    for (int y = 0; y < 9; ++y)
      expected += std::exp((a[x] + b[y] - inst.c(x, y))) * inst.mu[x] * inst.nu[y] >= 1e-6;
  EXPECT_EQ(t.block.entryCount(), expected);
}

TEST(Kernel, BlockValuesWithinBounds) {
  std::mt19937_64 rng(19);
  auto inst = randomDense(rng, 4, 4, 8.0);
  auto block = buildKernelBlock({0, 1, 2, 3}, {0, 1, 2, 3}, inst.mu, inst.nu, inst.cost, 2.0);
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t e = block.rowStart[i]; e < block.rowStart[i + 1]; ++e) {
      const double k = block.values[e] / (inst.mu[i] * inst.nu[block.colIndex[e]]);
      EXPECT_LE(k, 1.0);
      EXPECT_GE(k, std::exp(-inst.cost.supBound() / 2.0) * (1.0 - 1e-15));
    }
  }
}

TEST(Rescale, Examples) {
  auto [a, b] = rescalePotentials({1.0}, {2.0}, 3.0, 0.5);
  EXPECT_EQ(a, std::vector<double>{1.0});
  EXPECT_EQ(b, std::vector<double>{2.0});
  EXPECT_NEAR(rescaleScaling(std::exp(1.0), 2.0, 1.0), std::exp(2.0), 1e-14);
  EXPECT_EQ(rescaleScaling(1.2345, 0.7, 0.7), 1.2345);
  EXPECT_THROW(rescaleScaling(1.0, 0.0, 1.0), DomainError);
}

TEST(Reference, LadderSolveMatchesOracle) {
  std::mt19937_64 rng(20);
  GridGeometry g(8, 1.0);
  auto cost = CostOracle::grid(g, g);
  DiscreteMeasure mu(oracle::randomProbability(rng, 64)), nu(oracle::randomProbability(rng, 64));
  auto ref = referenceSolve(mu, nu, cost, {8.0, 4.0, 2.0}, 1e-12);
  Eigen::MatrixXd c(64, 64);
  for (int x = 0; x < 64; ++x)
    for (int y = 0; y < 64; ++y) c(x, y) = cost(x, y);
  auto s = oracle::scaling(oracle::kernel(c, mu.weights(), nu.weights(), 2.0), mu.weights(),
                           nu.weights(), 1e-14);
  auto pi = toSparseCoupling(ref.result.coupling, 64, 64).toDense();
  EXPECT_LE((pi - s.pi).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_EQ(ref.alphaFull.size(), 64u);
}
