#include "domdec/worstcase.hpp"

#include "domdec/errors.hpp"
#include "domdec/sinkhorn.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace domdec {

namespace {

EngineConfig exactConfig(double subTolerance) {
  EngineConfig cfg;
  cfg.errTol = subTolerance;
  cfg.truncationFloor = 0.0;
  cfg.sinkhorn.exact = true;
  cfg.sinkhorn.theta = 0.0;
  cfg.sinkhorn.maxIterations = 200;
  return cfg;
}

}  // namespace

WorstCaseInstance makeThreeCell(double q, double eps) {
  if (!(q > 0.0 && q < 1.0)) throw DomainError("q must lie in (0, 1)");
  if (!(eps > 0.0)) throw DomainError("eps must be positive");
  const double p = (1.0 - q) / 2.0;
  WorstCaseInstance w;
  w.name = "three-cell";
  w.q = q;
  w.epsilon = eps;
  w.costMatrix = Eigen::MatrixXd::Constant(3, 3, 10.0);
  for (int i = 0; i < 3; ++i) w.costMatrix(i, i) = 0.0;
  w.costMatrix(0, 2) = w.costMatrix(2, 0) = 1.0;
  w.cost = CostOracle::dense(w.costMatrix);
  w.mu = DiscreteMeasure({p, q, p});
  w.nu = w.mu;
  w.initialCoupling.xSize = 3;
  w.initialCoupling.ySize = 3;
  w.initialCoupling.entries = {{0, 2, p}, {1, 1, q}, {2, 0, p}};
  w.partitions = buildChainPartitions(w.mu);
  return w;
}

WorstCaseInstance makeChain(int n, double eps) {
  if (n < 3) throw DomainError("chain length must be at least 3");
  if (!(eps > 0.0)) throw DomainError("eps must be positive");
  WorstCaseInstance w;
  w.name = "chain";
  w.epsilon = eps;
  w.costMatrix = Eigen::MatrixXd::Constant(n, n, 10.0);
  for (int i = 0; i < n; ++i) w.costMatrix(i, i) = 0.0;
  w.costMatrix(0, n - 1) = w.costMatrix(n - 1, 0) = 1.0;
  w.cost = CostOracle::dense(w.costMatrix);
  w.mu = DiscreteMeasure::uniform(static_cast<std::size_t>(n));
  w.nu = w.mu;
  const double m = 1.0 / n;
  auto& pi = w.initialCoupling;
  pi.xSize = pi.ySize = static_cast<std::size_t>(n);
  pi.entries.push_back({0, static_cast<Index>(n - 1), m});
  for (int i = 1; i + 1 < n; ++i) pi.entries.push_back({static_cast<Index>(i), static_cast<Index>(i), m});
  pi.entries.push_back({static_cast<Index>(n - 1), 0, m});
  w.partitions = buildChainPartitions(w.mu);
  return w;
}

Eigen::MatrixXd optimalCoupling(const WorstCaseInstance& w) {
  SinkhornProblem prob = globalProblem(w.mu, w.nu, w.cost, w.epsilon);
  SinkhornConfig cfg;
  cfg.exact = true;
  cfg.maxIterations = 500;
  std::vector<double> init(prob.rows.size(), 0.0);
  SinkhornResult r = sinkhornSolve(prob, init, 1e-15, cfg);
  if (r.status != SinkhornStatus::Converged && r.xMarginalError > 1e-13) {
    // Cold Newton can stall on larger instances: warm start from an eps-scaled Sinkhorn.
    std::vector<double> ladder;
    for (int k = 6; k >= 0; --k) ladder.push_back(std::ldexp(w.epsilon, k));
    const ReferenceResult warm = referenceSolve(w.mu, w.nu, w.cost, ladder, 1e-12, 1000000, 0.0);
    r = sinkhornSolve(prob, warm.result.alpha, 1e-15, cfg);
  }
  if (r.status != SinkhornStatus::Converged && r.xMarginalError > 1e-13) {
    throw ConvergenceError("dense oracle did not converge", r.xMarginalError);
  }
  return toSparseCoupling(r.coupling, w.mu.size(), w.nu.size()).toDense();
}

LineFit fitLine(const std::vector<double>& x, const std::vector<double>& y) {
  LineFit f;
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n) return f;
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) return f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double sse = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - (f.intercept + f.slope * x[i]);
    sse += r * r;
  }
  f.r2 = syy > 0.0 ? 1.0 - sse / syy : 1.0;
  return f;
}

void fitContraction(ConvergenceTrace& t, double floor) {
  std::size_t end = 1;
  while (end < t.delta.size() && t.delta[end] > floor) ++end;
  t.floorReached = end < t.delta.size();
  const std::size_t available = end > 1 ? end - 1 : 0;  // sweeps 1..end-1
  std::size_t window = std::max<std::size_t>(available / 2, std::min<std::size_t>(20, available));
  t.shortWindow = available < 20;
  t.fitEnd = end;
  t.fitBegin = end - window;
  std::vector<double> xs, ys;
  for (std::size_t l = t.fitBegin; l < t.fitEnd; ++l) {
    xs.push_back(static_cast<double>(l));
    ys.push_back(std::log(t.delta[l]));
  }
  const LineFit f = fitLine(xs, ys);
  t.lambda = std::exp(f.slope);
  t.r2 = f.r2;
}

ConvergenceTrace runTrace(const WorstCaseInstance& w, const TraceOptions& opt) {
  if (opt.minSweeps < 1 || opt.maxSweeps < opt.minSweeps) throw ConfigError("invalid sweep counts");
  const Eigen::MatrixXd star = optimalCoupling(w);
  const EngineConfig cfg = exactConfig(opt.subTolerance);
  const Executor exec(1);
  ProblemData data{&w.mu, &w.nu, &w.cost, w.epsilon};
  CellState state = initializeFromCoupling(w.partitions, w.initialCoupling, w.epsilon);
  ConvergenceTrace t;
  t.delta.push_back(klDivergence(w.initialCoupling.toDense(), star));
  SweepOptions so;
  so.collectCoupling = true;
  for (int l = 1; l <= opt.maxSweeps; ++l) {
    const Label label = l % 2 == 1 ? Label::A : Label::B;
    SweepStats s = sweep(state, label, w.partitions, data, cfg, exec, so);
    const double d = std::max(klDivergence(s.coupling->toDense(), star), 0.0);
    t.delta.push_back(d);
    if (opt.stopAtFloor && l >= opt.minSweeps && d <= opt.floor) break;
  }
  fitContraction(t, opt.floor);
  return t;
}

ConvergenceTrace runTrace(const WorstCaseInstance& w, int sweeps) {
  if (sweeps < 10) throw ConfigError("a trace needs at least 10 sweeps");
  TraceOptions opt;
  opt.minSweeps = sweeps;
  opt.maxSweeps = sweeps;
  opt.stopAtFloor = false;
  return runTrace(w, opt);
}

BoundReport boundComparison(const ConvergenceTrace& trace, const WorstCaseInstance& w) {
  BoundReport r;
  r.empiricalLambda = trace.lambda;
  const double cNorm = w.cost.supBound();
  const PartitionGraph g = buildPartitionGraph(w.partitions);
  const RateBounds rb = rateBounds(w.partitions, g, cNorm, w.epsilon);
  r.theoreticalBound = rb.threeCell ? *rb.threeCell : rb.nCell;
  r.vacuous = !(trace.lambda < 1.0) || !(trace.lambda > 0.0) || r.theoreticalBound >= 1.0;
  if (w.q > 0.0) {
    const double odds = w.q / (1.0 - w.q);
    r.epsTransformedBound = 2.0 * cNorm / w.epsilon - std::log(odds);
    r.qTransformedBound = std::exp(-2.0 * cNorm / w.epsilon) * odds;
  }
  if (trace.lambda > 0.0 && trace.lambda < 1.0) {
    r.qTransformed = 1.0 / trace.lambda - 1.0;
    r.epsTransformed = -std::log(r.qTransformed);
  }
  return r;
}

StepCheck checkStepBound(const std::vector<double>& delta, double bound, std::size_t lag,
                         double slack) {
  StepCheck c;
  if (lag == 0) throw ConfigError("lag must be positive");
  for (std::size_t l = lag + 1; l < delta.size(); ++l) {
    const double excess = delta[l] - bound * delta[l - lag];
    c.worstExcess = std::max(c.worstExcess, excess);
    if (excess > slack) ++c.violations;
  }
  return c;
}

}  // namespace domdec
