#include "domdec/pipeline.hpp"

#include "domdec/errors.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <cmath>
#include <sstream>

namespace domdec {

namespace {

using Clock = std::chrono::steady_clock;

double seconds(Clock::time_point a, Clock::time_point b) {
  return std::chrono::duration<double>(b - a).count();
}

// Cell timings are summed over tasks; with several workers they are scaled to
// the sweep's wall time so the phases never exceed it.
void addPhases(StageReport& st, const SweepStats& s) {
  const double cpu = s.sinkhornSeconds + s.balanceSeconds + s.truncateSeconds;
  const double f = cpu > s.wallSeconds && cpu > 0.0 ? s.wallSeconds / cpu : 1.0;
  st.sinkhornSeconds += f * s.sinkhornSeconds;
  st.balanceSeconds += f * s.balanceSeconds;
  st.truncateSeconds += f * s.truncateSeconds;
}

double transportCost(const SparseCoupling& pi, const CostOracle& c) {
  CompensatedSum acc;
  for (const auto& e : pi.entries) acc += e.mass * c(e.x, e.y);
  return acc.value();
}

}  // namespace

std::vector<Stage> solveSchedule(int n, bool flat) {
  std::vector<Stage> s = buildSchedule(n);
  if (flat) {
    for (auto& st : s) st.level = n;
  }
  return s;
}

SolveResult solveMultiscale(const DiscreteMeasure& mu, const DiscreteMeasure& nu, int side,
                            const SolveOptions& opt) {
  const auto tStart = Clock::now();
  if (opt.workers < 1) throw ConfigError("workers must be >= 1");
  const MultiscaleHierarchy h = buildHierarchy(mu, nu, side, opt.cellSize);
  const std::vector<Stage> schedule = opt.schedule ? *opt.schedule : solveSchedule(h.n, opt.flat);
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    const int lo = opt.flat ? h.n : 3;
    if (schedule[i].level < lo || schedule[i].level > h.n || schedule[i].sweeps < 1 ||
        (i > 0 && schedule[i].level < schedule[i - 1].level) ||
        (i == 0 && !opt.flat && schedule[i].level != 3)) {
      throw ConfigError("invalid schedule stage " + std::to_string(i));
    }
  }
  if (schedule.empty()) throw ConfigError("empty schedule");
  const Executor exec(opt.workers);

  SolveReport rep;
  rep.side = side;
  rep.n = h.n;
  rep.cellSize = opt.cellSize;
  rep.flat = opt.flat;
  rep.workerCount = opt.workers;
  rep.seed = opt.seed;
  rep.totalSweeps = totalSweeps(schedule);

  std::size_t layer = opt.flat ? h.layers.size() - 1 : 0;
  CellState state = initializeProductState(h.layers[layer].partitions, h.layers[layer].nu, schedule.front().eps);
  std::optional<SweepStats> last;
  int sweepIndex = 0;

  for (std::size_t si = 0; si < schedule.size(); ++si) {
    const Stage& stage = schedule[si];
    StageReport st;
    st.level = stage.level;
    st.eps = stage.eps;
    st.sweeps = stage.sweeps;
    const auto tStage = Clock::now();
    while (h.layers[layer].level != stage.level) {
      const Layer& C = h.layers[layer];
      const Layer& F = h.layers[layer + 1];
      const ProblemData cdata{&C.mu, &C.nu, &C.cost, state.epsilon};
      const GlueGraph graph = buildGlueGraph(state, C.partitions, C.mu, state.epsilon, 0, opt.glue.average);
      const HelmholtzFit fit = helmholtzFit(graph);
      GlueOptions go;
      go.polishY = false;
      const GluedDuals duals = glueDuals(state, fit.V, C.partitions, cdata, go);
      const auto alpha = interpolatePotential(duals.alpha, C.geometry, F.geometry);
      state = refineMarginals(state, h, layer + 1);
      seedPotentials(state, F.partitions, alpha);
      ++layer;
      st.refineSeconds = seconds(tStage, Clock::now());
    }
    const Layer& L = h.layers[layer];
    const ProblemData data{&L.mu, &L.nu, &L.cost, stage.eps};
    for (int k = 0; k < stage.sweeps; ++k) {
      const Label label = sweepIndex % 2 == 0 ? Label::A : Label::B;
      ++sweepIndex;
      SweepOptions so;
      const bool final = si + 1 == schedule.size() && k + 1 == stage.sweeps;
      so.collectCoupling = final;
      so.computePrimal = final;
      SweepStats s;
      try {
        s = sweep(state, label, L.partitions, data, opt.engine, exec, so);
      } catch (const ConvergenceError& e) {
        std::ostringstream msg;
        msg << "layer " << L.level << ", eps " << stage.eps << ", sweep " << sweepIndex << ": "
            << e.what();
        throw ConvergenceError(msg.str(), e.lastError());
      }
      addPhases(st, s);
      for (int it : s.perCellIterations) st.sinkhornIterations += it;
      st.safeguardCells += s.safeguardCells;
      st.maxEntries = std::max(st.maxEntries, s.entriesAfterTruncation);
      st.maxKernelEntries = std::max(st.maxKernelEntries, s.maxKernelEntries);
      st.massBalanced += s.massBalanced;
      st.createdEntries += s.createdEntries;
      if (final) last = std::move(s);
    }
    st.endEntries = state.entryCount();
    st.wallSeconds = seconds(tStage, Clock::now());
    rep.sinkhornSeconds += st.sinkhornSeconds;
    rep.balanceSeconds += st.balanceSeconds;
    rep.truncateSeconds += st.truncateSeconds;
    rep.refineSeconds += st.refineSeconds;
    rep.maxEntries = std::max(rep.maxEntries, st.maxEntries);
    rep.stages.push_back(st);
  }

  const auto tCert = Clock::now();
  const Layer& L = h.layers.back();
  const double eps = schedule.back().eps;
  const ProblemData data{&L.mu, &L.nu, &L.cost, eps};
  AssembledCoupling primal;
  primal.coupling = std::move(*last->coupling);
  const double kMass = L.cost.kernelMass(L.mu, L.nu, eps);
  primal.primalScore = last->primalWithoutMass + kMass;
  std::tie(primal.xMarginalL1, primal.yMarginalL1) = marginalErrors(primal.coupling, L.mu, L.nu);
  Certificate cert = certificate(state, L.partitions, data, primal, kMass, opt.glue);

  rep.finalEpsilon = eps;
  rep.primalScore = cert.primalScore;
  rep.dualScore = cert.dualScore;
  rep.kernelMass = kMass;
  rep.relativePDGap = cert.relativePDGap;
  rep.xMarginalL1 = cert.xMarginalL1;
  rep.yMarginalL1 = cert.yMarginalL1;
  rep.transportCost = transportCost(primal.coupling, L.cost);
  rep.finalEntries = state.entryCount();
  rep.entriesPerPixel = static_cast<double>(rep.finalEntries) / static_cast<double>(L.mu.size());
  rep.glueFallbackPoints = cert.duals.fallbackPoints;
  rep.glueObjective = cert.fit.objective;
  rep.glueDisconnected = cert.fit.disconnected;
  rep.certificateSeconds = seconds(tCert, Clock::now());
  rep.totalSeconds = seconds(tStart, Clock::now());

  SolveResult out;
  out.report = std::move(rep);
  out.state = std::move(state);
  out.partitions = L.partitions;
  out.geometry = L.geometry;
  out.coupling = std::move(primal.coupling);
  out.duals = std::move(cert.duals);
  return out;
}

std::vector<double> referenceLadder(int side, double finalEps) {
  const double r = side / 8.0;
  std::vector<double> out;
  for (double e = 2.0 * r * r; e > finalEps * (1.0 + 1e-12); e /= 2.0) out.push_back(e);
  out.push_back(finalEps);
  return out;
}

ReferenceReport referenceBaseline(const DiscreteMeasure& mu, const DiscreteMeasure& nu, int side,
                                  double finalEps, double tol) {
  const auto t0 = Clock::now();
  const GridGeometry g(side, 1.0);
  const CostOracle cost = CostOracle::grid(g, g);
  ReferenceReport rep;
  rep.ladder = referenceLadder(side, finalEps);
  ReferenceResult r = referenceSolve(mu, nu, cost, rep.ladder, tol);
  rep.iterations = r.totalIterations;
  rep.coupling = toSparseCoupling(r.result.coupling, mu.size(), nu.size());
  rep.kernelMass = cost.kernelMass(mu, nu, finalEps);
  rep.primalScore = klToKernelWithoutMass(rep.coupling, mu, nu, cost, finalEps) + rep.kernelMass;
  rep.dualScore = dualScore(r.alphaFull, r.betaFull, mu, nu, cost, finalEps, rep.kernelMass);
  rep.relativePDGap = relativePDGap(rep.primalScore, rep.dualScore, rep.kernelMass);
  std::tie(rep.xMarginalL1, rep.yMarginalL1) = marginalErrors(rep.coupling, mu, nu);
  rep.transportCost = transportCost(rep.coupling, cost);
  rep.alpha = std::move(r.alphaFull);
  rep.beta = std::move(r.betaFull);
  rep.seconds = seconds(t0, Clock::now());
  return rep;
}

void to_json(nlohmann::json& j, const ReferenceReport& r) {
  j = nlohmann::json{{"ladder", r.ladder},
                     {"iterations", r.iterations},
                     {"primalScore", r.primalScore},
                     {"dualScore", r.dualScore},
                     {"kernelMass", r.kernelMass},
                     {"relativePDGap", r.relativePDGap},
                     {"xMarginalL1", r.xMarginalL1},
                     {"yMarginalL1", r.yMarginalL1},
                     {"transportCost", r.transportCost},
                     {"seconds", r.seconds}};
}

void to_json(nlohmann::json& j, const StageReport& s) {
  j = nlohmann::json{{"level", s.level},
                     {"eps", s.eps},
                     {"sweeps", s.sweeps},
                     {"sinkhornIterations", s.sinkhornIterations},
                     {"safeguardCells", s.safeguardCells},
                     {"sinkhornSeconds", s.sinkhornSeconds},
                     {"balanceSeconds", s.balanceSeconds},
                     {"truncateSeconds", s.truncateSeconds},
                     {"refineSeconds", s.refineSeconds},
                     {"wallSeconds", s.wallSeconds},
                     {"maxEntries", s.maxEntries},
                     {"endEntries", s.endEntries},
                     {"maxKernelEntries", s.maxKernelEntries},
                     {"massBalanced", s.massBalanced},
                     {"createdEntries", s.createdEntries}};
}

void to_json(nlohmann::json& j, const SolveReport& r) {
  j = nlohmann::json{{"side", r.side},
                     {"n", r.n},
                     {"cellSize", r.cellSize},
                     {"flat", r.flat},
                     {"perLayer", r.stages},
                     {"totalSweeps", r.totalSweeps},
                     {"finalEpsilon", r.finalEpsilon},
                     {"primalScore", r.primalScore},
                     {"dualScore", r.dualScore},
                     {"kernelMass", r.kernelMass},
                     {"relativePDGap", r.relativePDGap},
                     {"xMarginalL1", r.xMarginalL1},
                     {"yMarginalL1", r.yMarginalL1},
                     {"transportCost", r.transportCost},
                     {"maxEntries", r.maxEntries},
                     {"finalEntries", r.finalEntries},
                     {"entriesPerPixel", r.entriesPerPixel},
                     {"glueFallbackPoints", r.glueFallbackPoints},
                     {"glueObjective", r.glueObjective},
                     {"glueDisconnected", r.glueDisconnected},
                     {"workerCount", r.workerCount},
                     {"seed", r.seed ? nlohmann::json(*r.seed) : nlohmann::json(nullptr)},
                     {"times",
                      {{"sinkhorn", r.sinkhornSeconds},
                       {"balance", r.balanceSeconds},
                       {"truncate", r.truncateSeconds},
                       {"refine", r.refineSeconds},
                       {"certificate", r.certificateSeconds},
                       {"total", r.totalSeconds}}}};
}

std::vector<double> scoreFields(const SolveReport& r) {
  return {r.primalScore,
          r.dualScore,
          r.kernelMass,
          r.relativePDGap,
          r.xMarginalL1,
          r.yMarginalL1,
          r.transportCost,
          static_cast<double>(r.maxEntries),
          static_cast<double>(r.finalEntries)};
}

}  // namespace domdec
