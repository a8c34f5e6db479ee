#include "domdec/engine.hpp"
#include "domdec/io.hpp"
#include "domdec/pipeline.hpp"
#include "domdec/sinkhorn.hpp"

#include <benchmark/benchmark.h>

using namespace domdec;

namespace {

void BM_GlobalSinkhorn(benchmark::State& st) {
  const int side = static_cast<int>(st.range(0));
  const GridGeometry g(side, 1.0);
  const CostOracle cost = CostOracle::grid(g, g);
  const DiscreteMeasure mu = generateImage(side, 1), nu = generateImage(side, 2);
  const SinkhornProblem prob = globalProblem(mu, nu, cost, 0.5 * side);
  const std::vector<double> init(prob.rows.size(), 0.0);
  const SinkhornConfig cfg;
  for (auto _ : st) benchmark::DoNotOptimize(sinkhornSolve(prob, init, 1e-6, cfg));
}
BENCHMARK(BM_GlobalSinkhorn)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_Sweep(benchmark::State& st) {
  const int side = static_cast<int>(st.range(0));
  const double eps = 4.0;
  const GridGeometry g(side, 1.0);
  const CostOracle cost = CostOracle::grid(g, g);
  const DiscreteMeasure mu = generateImage(side, 1), nu = generateImage(side, 2);
  const PartitionSet p = buildGridPartitions(g, mu, 4);
  const ProblemData data{&mu, &nu, &cost, eps};
  const EngineConfig cfg;
  const Executor ex(1);
  CellState warm = initializeProductState(p, nu, eps);
  for (int l = 0; l < 4; ++l) sweep(warm, l % 2 ? Label::B : Label::A, p, data, cfg, ex);
  for (auto _ : st) {
    st.PauseTiming();
    CellState s = warm;
    st.ResumeTiming();
    benchmark::DoNotOptimize(sweep(s, Label::A, p, data, cfg, ex));
  }
}
BENCHMARK(BM_Sweep)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_MultiscaleSolve(benchmark::State& st) {
  const int side = static_cast<int>(st.range(0));
  const DiscreteMeasure mu = generateImage(side, 1), nu = generateImage(side, 2);
  for (auto _ : st) benchmark::DoNotOptimize(solveMultiscale(mu, nu, side).report.primalScore);
}
BENCHMARK(BM_MultiscaleSolve)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
