#include "domdec/errors.hpp"
#include "domdec/io.hpp"
#include "domdec/pipeline.hpp"
#include "domdec/worstcase.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace domdec;

namespace {

struct InputArgs {
  std::string mu, nu;
  std::string format;  // csv | pgm | empty for by-extension
  bool pad = false;
  int side = 0;
  std::optional<std::uint64_t> seedMu, seedNu;
  int components = 0;
};

void addInputs(CLI::App* cmd, InputArgs& in) {
  cmd->add_option("--mu", in.mu, "X marginal image (CSV or PGM)");
  cmd->add_option("--nu", in.nu, "Y marginal image (CSV or PGM)");
  cmd->add_option("--format", in.format, "Input format")->check(CLI::IsMember({"csv", "pgm"}));
  cmd->add_flag("--pad", in.pad, "Zero-pad non-power-of-two images");
  cmd->add_option("--side", in.side, "Image side (generated inputs, or expected side)");
  cmd->add_option("--seed-mu", in.seedMu, "Generate mu with this seed instead of reading it");
  cmd->add_option("--seed-nu", in.seedNu, "Generate nu with this seed instead of reading it");
  cmd->add_option("--components", in.components, "Mixture components for generated inputs (0: random)");
}

IngestedImage loadOne(const std::string& path, std::optional<std::uint64_t> seed, const InputArgs& in,
                      const char* name) {
  if (seed) {
    if (in.side <= 0) throw ConfigError(std::string("--side is required to generate ") + name);
    GeneratorOptions g;
    g.components = in.components;
    return {generateImage(in.side, *seed, g), in.side};
  }
  if (path.empty()) throw ConfigError(std::string("missing --") + name + " (or --seed-" + name + ")");
  IngestOptions o;
  o.pad = in.pad;
  o.expectedSide = in.side;
  const ImageFormat f = in.format.empty() ? formatFromPath(path)
                        : in.format == "pgm"  ? ImageFormat::Pgm
                                              : ImageFormat::Csv;
  return ingestImage(path, f, o);
}

std::pair<IngestedImage, IngestedImage> loadInputs(const InputArgs& in) {
  auto a = loadOne(in.mu, in.seedMu, in, "mu");
  auto b = loadOne(in.nu, in.seedNu, in, "nu");
  if (a.side != b.side) throw ConsistencyError("mu and nu have different sides");
  return {std::move(a), std::move(b)};
}

void writeJson(const std::string& path, const json& j) {
  if (path.empty() || path == "-") {
    std::cout << j.dump(2) << '\n';
    return;
  }
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p);
  if (!out) throw ValidationError("cannot write " + path);
  out << j.dump(2) << '\n';
}

struct EngineArgs {
  int cellSize = 4;
  double err = 1e-4;
  double truncation = 1e-15;
  double theta = 1e-10;
  int workers = 0;
  bool gluedY = false;
  bool flat = false;
};

void addEngine(CLI::App* cmd, EngineArgs& e) {
  cmd->add_option("--cellsize", e.cellSize, "Basic cell size in pixels per axis")->capture_default_str();
  cmd->add_option("--err", e.err, "Sinkhorn sub-solver L1 tolerance")->capture_default_str();
  cmd->add_option("--truncation", e.truncation, "Basic marginal truncation floor")->capture_default_str();
  cmd->add_option("--theta", e.theta, "Kernel truncation threshold")->capture_default_str();
  cmd->add_option("--workers", e.workers, "Worker threads (default: DOMDEC_WORKERS or 1)")
      ->check(CLI::PositiveNumber);
  cmd->add_flag("--glued-y", e.gluedY, "Certificate Y potential by averaging cell potentials instead of the best response");
  cmd->add_flag("--flat", e.flat, "Finest layer only with product initialization");
}

SolveOptions solveOptions(const EngineArgs& e) {
  SolveOptions o;
  o.cellSize = e.cellSize;
  o.engine.errTol = e.err;
  o.engine.truncationFloor = e.truncation;
  o.engine.sinkhorn.theta = e.theta;
  o.workers = e.workers > 0 ? e.workers : workersFromEnvironment(1);
  o.glue.polishY = !e.gluedY;
  o.flat = e.flat;
  return o;
}

std::vector<double> parseList(const std::string& s) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos < s.size()) {
    std::size_t end = s.find(',', pos);
    if (end == std::string::npos) end = s.size();
    out.push_back(std::stod(s.substr(pos, end - pos)));
    pos = end + 1;
  }
  return out;
}

json traceJson(const WorstCaseInstance& w, const ConvergenceTrace& t, const BoundReport& b,
               const StepCheck& step, std::size_t lag, double stepBound) {
  return json{{"instance", w.name},
              {"eps", w.epsilon},
              {"q", w.q},
              {"points", w.mu.size()},
              {"sweeps", t.delta.size() - 1},
              {"lambda", t.lambda},
              {"r2", t.r2},
              {"fitWindow", {t.fitBegin, t.fitEnd}},
              {"floorReached", t.floorReached},
              {"shortWindow", t.shortWindow},
              {"theoreticalBound", b.theoreticalBound},
              {"vacuous", b.vacuous},
              {"epsTransformed", b.epsTransformed},
              {"epsTransformedBound", b.epsTransformedBound},
              {"qTransformed", b.qTransformed},
              {"qTransformedBound", b.qTransformedBound},
              {"stepBound", stepBound},
              {"stepLag", lag},
              {"stepViolations", step.violations},
              {"stepWorstExcess", step.worstExcess}};
}

json runWorstCase(const WorstCaseInstance& w, const std::string& outDir, const std::string& tag) {
  const ConvergenceTrace t = runTrace(w, TraceOptions{});
  const BoundReport b = boundComparison(t, w);
  const PartitionGraph g = buildPartitionGraph(w.partitions);
  const RateBounds rb = rateBounds(w.partitions, g, w.cost.supBound(), w.epsilon);
  const std::size_t lag = rb.threeCell ? 1 : static_cast<std::size_t>(std::max(g.diameterM, 1));
  const double bound = rb.threeCell ? *rb.threeCell : rb.nCell;
  const StepCheck step = checkStepBound(t.delta, bound, lag);
  if (!outDir.empty()) writeTraceCsv(fs::path(outDir) / ("trace_" + tag + ".csv"), t.delta);
  return traceJson(w, t, b, step, lag, bound);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Entropic optimal transport by domain decomposition"};
  app.require_subcommand(1);

  // solve
  auto* solve = app.add_subcommand("solve", "Multiscale domain decomposition solve");
  InputArgs solveIn;
  EngineArgs solveEng;
  std::string reportPath, couplingPath, pngPath;
  addInputs(solve, solveIn);
  addEngine(solve, solveEng);
  solve->add_option("--report", reportPath, "JSON report path (default: stdout)");
  solve->add_option("--coupling", couplingPath, "Export the final coupling as TSV");
  solve->add_option("--png", pngPath, "Colored-cell visualization of the final state");

  // generate
  auto* gen = app.add_subcommand("generate", "Seeded Gaussian-mixture test image");
  int genSide = 64, genComponents = 0;
  std::uint64_t genSeed = 1;
  std::string genOut;
  gen->add_option("--side", genSide, "Image side (power of two)")->capture_default_str();
  gen->add_option("--seed", genSeed, "Random seed")->capture_default_str();
  gen->add_option("--components", genComponents, "Mixture components (0: uniform in [5,15])");
  gen->add_option("--out", genOut, "Output path (.csv or .pgm)")->required();

  // worstcase
  auto* wc = app.add_subcommand("worstcase", "Worst-case convergence studies");
  wc->require_subcommand(1);
  std::string wcOut, wcReport;
  auto* three = wc->add_subcommand("three", "Three-cell instance");
  double threeQ = 0.3;
  std::string threeEps, threeStudy = "eps";
  three->add_option("--q", threeQ, "Middle mass q in (0,1)")->capture_default_str();
  three->add_option("--eps", threeEps, "Comma-separated eps values (default: study grid)");
  three->add_option("--study", threeStudy, "eps: vary eps at fixed q; q: vary q at eps=10")
      ->check(CLI::IsMember({"eps", "q"}))
      ->capture_default_str();
  auto* chain = wc->add_subcommand("chain", "Chain instance");
  std::vector<int> chainN;
  double chainEps = 1.4;
  chain->add_option("--n", chainN, "Chain lengths (default: 4 6 8 12 16)");
  chain->add_option("--eps", chainEps, "Regularization")->capture_default_str();
  for (auto* c : {three, chain}) {
    c->add_option("--out", wcOut, "Directory for trace CSVs");
    c->add_option("--report", wcReport, "Bound report JSON (default: stdout)");
  }

  // reference
  auto* ref = app.add_subcommand("reference", "Dense single Sinkhorn baseline and relative dual score");
  InputArgs refIn;
  EngineArgs refEng;
  double refTol = 1e-9;
  bool refCompare = true;
  std::string refReport;
  addInputs(ref, refIn);
  addEngine(ref, refEng);
  ref->add_option("--tol", refTol, "Linf stopping tolerance")->capture_default_str();
  ref->add_option("--compare", refCompare, "Also run domain decomposition and compare")->capture_default_str();
  ref->add_option("--report", refReport, "JSON report path (default: stdout)");

  // visualize
  auto* vis = app.add_subcommand("visualize", "Colored-cell image of a stored coupling");
  InputArgs visIn;
  std::string visCoupling, visOut;
  int visCell = 4;
  addInputs(vis, visIn);
  vis->add_option("--coupling", visCoupling, "Coupling TSV from `solve --coupling`")->required();
  vis->add_option("--cellsize", visCell, "Basic cell size")->capture_default_str();
  vis->add_option("--out", visOut, "PNG path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (*solve) {
      auto [mu, nu] = loadInputs(solveIn);
      SolveOptions o = solveOptions(solveEng);
      if (solveIn.seedMu) o.seed = *solveIn.seedMu;
      SolveResult r = solveMultiscale(mu.measure, nu.measure, mu.side, o);
      if (!couplingPath.empty()) writeCouplingTsv(couplingPath, r.coupling);
      if (!pngPath.empty()) writePng(pngPath, visualizeCells(r.state, r.partitions, r.geometry, nu.measure));
      writeJson(reportPath, json(r.report));
    } else if (*gen) {
      GeneratorOptions g;
      g.components = genComponents;
      const DiscreteMeasure m = generateImage(genSide, genSeed, g);
      if (formatFromPath(genOut) == ImageFormat::Pgm) {
        writePgm(genOut, m.weights(), genSide);
      } else {
        writeCsv(genOut, m.weights(), genSide);
      }
    } else if (*wc) {
      json runs = json::array();
      if (*three) {
        if (!(threeQ > 0.0 && threeQ < 1.0)) throw DomainError("--q must lie in (0, 1)");
        if (threeStudy == "eps") {
          const auto eps = threeEps.empty() ? std::vector<double>{1.0, 1.33, 1.67, 2.0, 2.5, 3.0, 4.0}
                                            : parseList(threeEps);
          for (double e : eps) {
            runs.push_back(runWorstCase(makeThreeCell(threeQ, e), wcOut, "three_eps" + std::to_string(e)));
          }
        } else {
          const double e = threeEps.empty() ? 10.0 : parseList(threeEps).front();
          for (double q : {0.05, 0.1, 0.15, 0.2, 0.25, 0.3}) {
            runs.push_back(runWorstCase(makeThreeCell(q, e), wcOut, "three_q" + std::to_string(q)));
          }
        }
      } else {
        const auto ns = chainN.empty() ? std::vector<int>{4, 6, 8, 12, 16} : chainN;
        for (int n : ns) {
          runs.push_back(runWorstCase(makeChain(n, chainEps), wcOut, "chain_n" + std::to_string(n)));
        }
      }
      writeJson(wcReport, json{{"runs", runs}});
    } else if (*ref) {
      auto [mu, nu] = loadInputs(refIn);
      const SolveOptions o = solveOptions(refEng);
      const ReferenceReport rr = referenceBaseline(mu.measure, nu.measure, mu.side, 0.25, refTol);
      json out{{"reference", rr}};
      if (refCompare) {
        const SolveResult r = solveMultiscale(mu.measure, nu.measure, mu.side, o);
        out["domdec"] = r.report;
        out["relativeDualScore"] = relativeDualScore(rr.dualScore, r.report.dualScore, r.report.kernelMass);
        out["relativePrimalDifference"] =
            std::abs(r.report.primalScore - rr.primalScore) / std::abs(rr.primalScore - rr.kernelMass);
      }
      writeJson(refReport, out);
    } else if (*vis) {
      auto [mu, nu] = loadInputs(visIn);
      const GridGeometry g(mu.side, 1.0);
      const PartitionSet p = buildGridPartitions(g, mu.measure, visCell);
      const SparseCoupling pi = readCouplingTsv(visCoupling, mu.measure.size(), nu.measure.size());
      const CellState s = initializeFromCoupling(p, pi, 1.0);
      writePng(visOut, visualizeCells(s, p, g, nu.measure));
    }
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const ConvergenceError& e) {
    std::cerr << "convergence failure: " << e.what() << " (last error " << e.lastError() << ")\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
