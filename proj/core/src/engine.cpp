#include "domdec/engine.hpp"

#include "domdec/errors.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

namespace domdec {

namespace {

using Clock = std::chrono::steady_clock;

double seconds(Clock::time_point a, Clock::time_point b) {
  return std::chrono::duration<double>(b - a).count();
}

struct CellOutcome {
  std::vector<SparseMarginal> marginals;
  std::vector<double> alpha;
  int iterations = 0;
  double xError = 0.0;
  double moved = 0.0;
  std::size_t created = 0;
  std::size_t before = 0;
  std::size_t after = 0;
  std::size_t kernelEntries = 0;
  bool safeguard = false;
  double tSinkhorn = 0.0;
  double tBalance = 0.0;
  double tTruncate = 0.0;
  double primalPart = 0.0;
  KernelBlock coupling;
};

SinkhornProblem cellProblem(const CellState& state, Label label, std::size_t g,
                            const PartitionSet& p, const ProblemData& data) {
  const auto& cp = p.byLabel(label);
  std::vector<const SparseMarginal*> parts;
  for (Index i : cp.groups[g]) parts.push_back(&state.basicMarginals[i]);
  SparseMarginal cell = SparseMarginal::sum(parts);
  SinkhornProblem prob;
  prob.cost = data.cost;
  prob.eps = data.eps;
  prob.rows = cp.groupX[g];
  prob.muHat.resize(prob.rows.size());
  for (std::size_t k = 0; k < prob.rows.size(); ++k) prob.muHat[k] = (*data.mu)[prob.rows[k]];
  prob.muRef = prob.muHat;
  prob.cols = std::move(cell.index);
  prob.nuHat = std::move(cell.mass);
  prob.nuRef.resize(prob.cols.size());
  for (std::size_t k = 0; k < prob.cols.size(); ++k) {
    const double n = (*data.nu)[prob.cols[k]];
    if (!(n > 0.0)) {
      throw ConsistencyError("basic marginal charges a point where nu vanishes");
    }
    prob.nuRef[k] = n;
  }
  return prob;
}

SinkhornResult solveWithSafeguard(SinkhornProblem& prob, std::vector<double> alpha,
                                  const EngineConfig& config, Label label, std::size_t g,
                                  bool& usedSafeguard) {
  const double target = prob.eps;
  SinkhornResult res = sinkhornSolve(prob, alpha, config.errTol, config.sinkhorn);
  if (res.status == SinkhornStatus::Converged) return res;
  usedSafeguard = true;
  SinkhornStatus last = res.status;
  double lastErr = res.xMarginalError;
  for (int attempt = 1; attempt <= config.safeguardAttempts; ++attempt) {
    double e = target * std::ldexp(1.0, attempt);
    prob.eps = e;
    SinkhornResult r = sinkhornSolve(prob, alpha, config.errTol, config.sinkhorn);
    bool ok = r.status == SinkhornStatus::Converged;
    while (ok && e > target) {
      e = std::max(e / 2.0, target);
      prob.eps = e;
      r = sinkhornSolve(prob, r.alpha, config.errTol, config.sinkhorn);
      ok = r.status == SinkhornStatus::Converged;
    }
    prob.eps = target;
    if (ok) return r;
    last = r.status;
    lastErr = r.xMarginalError;
  }
  std::ostringstream msg;
  msg << "cell " << labelName(label) << g << " (" << prob.rows.size() << " x " << prob.cols.size()
      << ") failed at eps=" << target << " after " << config.safeguardAttempts
      << " safeguard attempts: " << statusName(last);
  throw ConvergenceError(msg.str(), lastErr);
}

CellOutcome solveCell(const CellState& state, Label label, std::size_t g, const PartitionSet& p,
                      const ProblemData& data, const EngineConfig& config,
                      const SweepOptions& options) {
  CellOutcome out;
  const auto& cp = p.byLabel(label);
  const auto t0 = Clock::now();
  SinkhornProblem prob = cellProblem(state, label, g, p, data);
  std::vector<double> alpha = state.potentials(label)[g];
  if (alpha.size() != prob.rows.size()) alpha.assign(prob.rows.size(), 0.0);
  SinkhornResult res = solveWithSafeguard(prob, std::move(alpha), config, label, g, out.safeguard);
  const auto t1 = Clock::now();

  // Basic marginals from the coupling rows of each basic cell.
  const auto& group = cp.groups[g];
  const auto& offsets = cp.cellOffsets[g];
  const std::size_t ny = prob.cols.size();
  std::vector<std::vector<double>> dense(group.size(), std::vector<double>(ny, 0.0));
  const auto& c = res.coupling;
  for (std::size_t k = 0; k < group.size(); ++k) {
    auto& row = dense[k];
    for (std::size_t r = offsets[k]; r < offsets[k + 1]; ++r) {
      for (std::size_t e = c.rowStart[r]; e < c.rowStart[r + 1]; ++e) row[c.colIndex[e]] += c.values[e];
    }
  }
  std::vector<double> targets(group.size());
  for (std::size_t k = 0; k < group.size(); ++k) targets[k] = p.basic.cellMasses[group[k]];
  const BalanceReport bal = balanceMeasures(dense, targets);
  const auto t2 = Clock::now();

  out.marginals.resize(group.size());
  for (std::size_t k = 0; k < group.size(); ++k) {
    SparseMarginal m;
    for (std::size_t j = 0; j < ny; ++j) {
      if (dense[k][j] > 0.0) {
        m.index.push_back(prob.cols[j]);
        m.mass.push_back(dense[k][j]);
      }
    }
    out.before += m.size();
    m = truncateMarginal(m, config.truncationFloor);
    const double mass = m.totalMass();
    if (mass > 0.0 && mass != targets[k]) {
      const double f = targets[k] / mass;
      for (double& v : m.mass) v *= f;
    }
    out.after += m.size();
    out.marginals[k] = std::move(m);
  }
  const auto t3 = Clock::now();

  if (options.computePrimal) {
    CompensatedSum acc;
    for (std::size_t i = 0; i < c.rows.size(); ++i) {
      const double lmu = std::log(prob.muRef[i]);
      for (std::size_t e = c.rowStart[i]; e < c.rowStart[i + 1]; ++e) {
        const double v = c.values[e];
        if (!(v > 0.0)) continue;
        const std::size_t j = c.colIndex[e];
        const double cost = (*data.cost)(c.rows[i], c.cols[j]);
        acc += v * (std::log(v) - lmu - std::log(prob.nuRef[j]) + cost / data.eps) - v;
      }
    }
    out.primalPart = acc.value();
  }
  out.alpha = std::move(res.alpha);
  out.iterations = res.iterations;
  out.xError = res.xMarginalError;
  out.moved = bal.moved;
  out.created = bal.createdEntries;
  out.kernelEntries = res.kernelEntries;
  if (options.collectCoupling) out.coupling = std::move(res.coupling);
  out.tSinkhorn = seconds(t0, t1);
  out.tBalance = seconds(t1, t2);
  out.tTruncate = seconds(t2, t3);
  return out;
}

}  // namespace

std::size_t CellState::entryCount() const noexcept {
  std::size_t n = 0;
  for (const auto& m : basicMarginals) n += m.size();
  return n;
}

CellState initializeProductState(const PartitionSet& p, const DiscreteMeasure& nu, double eps) {
  CellState s;
  s.epsilon = eps;
  s.basicMarginals.resize(p.basic.size());
  for (std::size_t i = 0; i < p.basic.size(); ++i) {
    s.basicMarginals[i] = SparseMarginal::fromDense(nu.weights(), p.basic.cellMasses[i]);
  }
  s.potentialsA.resize(p.a.size());
  for (std::size_t g = 0; g < p.a.size(); ++g) s.potentialsA[g].assign(p.a.groupX[g].size(), 0.0);
  s.potentialsB.resize(p.b.size());
  for (std::size_t g = 0; g < p.b.size(); ++g) s.potentialsB[g].assign(p.b.groupX[g].size(), 0.0);
  return s;
}

CellState initializeFromCoupling(const PartitionSet& p, const SparseCoupling& pi, double eps) {
  CellState s;
  s.epsilon = eps;
  std::vector<std::vector<double>> dense(p.basic.size(), std::vector<double>(pi.ySize, 0.0));
  for (const auto& e : pi.entries) {
    if (e.x >= p.basic.cellOf.size()) throw ConsistencyError("coupling row outside X");
    dense[p.basic.cellOf[e.x]][e.y] += e.mass;
  }
  s.basicMarginals.resize(p.basic.size());
  for (std::size_t i = 0; i < p.basic.size(); ++i) {
    s.basicMarginals[i] = SparseMarginal::fromDense(dense[i]);
  }
  s.potentialsA.resize(p.a.size());
  for (std::size_t g = 0; g < p.a.size(); ++g) s.potentialsA[g].assign(p.a.groupX[g].size(), 0.0);
  s.potentialsB.resize(p.b.size());
  for (std::size_t g = 0; g < p.b.size(); ++g) s.potentialsB[g].assign(p.b.groupX[g].size(), 0.0);
  return s;
}

SweepStats sweep(CellState& state, Label label, const PartitionSet& p, const ProblemData& data,
                 const EngineConfig& config, const Executor& executor,
                 const SweepOptions& options) {
  const auto t0 = Clock::now();
  const auto& cp = p.byLabel(label);
  if (state.potentials(label).size() != cp.size()) {
    throw ConsistencyError("cell state does not match the composite partition");
  }
  std::function<CellOutcome(std::size_t)> task = [&](std::size_t g) {
    return solveCell(state, label, g, p, data, config, options);
  };
  std::vector<CellOutcome> outcomes = executor.runBatch<CellOutcome>(cp.size(), task);

  SweepStats stats;
  stats.label = label;
  stats.eps = data.eps;
  stats.perCellIterations.reserve(cp.size());
  CompensatedSum primal;
  if (options.collectCoupling) {
    stats.coupling.emplace();
    stats.coupling->xSize = data.mu->size();
    stats.coupling->ySize = data.nu->size();
  }
  for (std::size_t g = 0; g < cp.size(); ++g) {
    auto& o = outcomes[g];
    const auto& group = cp.groups[g];
    for (std::size_t k = 0; k < group.size(); ++k) {
      state.basicMarginals[group[k]] = std::move(o.marginals[k]);
    }
    state.potentials(label)[g] = std::move(o.alpha);
    stats.perCellIterations.push_back(o.iterations);
    stats.xMarginalErrorSum += o.xError;
    stats.massBalanced += o.moved;
    stats.createdEntries += o.created;
    stats.entriesBeforeTruncation += o.before;
    stats.entriesAfterTruncation += o.after;
    stats.maxKernelEntries = std::max(stats.maxKernelEntries, o.kernelEntries);
    stats.safeguardCells += o.safeguard ? 1 : 0;
    stats.sinkhornSeconds += o.tSinkhorn;
    stats.balanceSeconds += o.tBalance;
    stats.truncateSeconds += o.tTruncate;
    primal += o.primalPart;
    if (options.collectCoupling) {
      const auto& c = o.coupling;
      for (std::size_t i = 0; i < c.rows.size(); ++i) {
        for (std::size_t e = c.rowStart[i]; e < c.rowStart[i + 1]; ++e) {
          stats.coupling->entries.push_back({c.rows[i], c.cols[c.colIndex[e]], c.values[e]});
        }
      }
    }
  }
  if (options.collectCoupling) stats.coupling->sortEntries();
  stats.primalWithoutMass = primal.value();
  state.epsilon = data.eps;
  stats.wallSeconds = seconds(t0, Clock::now());
  return stats;
}

BalanceReport balanceMeasures(std::vector<std::vector<double>>& marginals,
                              std::span<const double> targets) {
  const std::size_t n = marginals.size();
  if (targets.size() != n) throw ConsistencyError("balanceMeasures: target count mismatch");
  BalanceReport rep;
  if (n == 0) return rep;
  const std::size_t cols = marginals[0].size();
  std::vector<double> dev(n);
  CompensatedSum totalMass, totalTarget;
  for (std::size_t i = 0; i < n; ++i) {
    if (marginals[i].size() != cols) throw ConsistencyError("balanceMeasures: ragged columns");
    const double m = compensatedSum(marginals[i]);
    dev[i] = m - targets[i];
    totalMass += m;
    totalTarget += targets[i];
  }
  const double scale = std::max(std::abs(totalTarget.value()), 1e-300);
  if (std::abs(totalMass.value() - totalTarget.value()) > 1e-9 * scale) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "balanceMeasures: total mass " << totalMass.value() << " differs from target "
        << totalTarget.value();
    throw ConsistencyError(msg.str());
  }
  std::vector<std::size_t> donors, receivers;
  for (std::size_t i = 0; i < n; ++i) {
    if (dev[i] > 0.0) donors.push_back(i);
    if (dev[i] < 0.0) receivers.push_back(i);
  }
  std::vector<std::size_t> order(cols);
  auto transfer = [&](std::vector<double>& from, std::vector<double>& to, double amount) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return from[a] > from[b]; });
    double left = amount;
    for (int pass = 0; pass < 2 && left > 0.0; ++pass) {
      for (std::size_t k : order) {
        if (left <= 0.0) break;
        if (!(from[k] > 0.0)) break;
        const bool shared = to[k] > 0.0;
        if ((pass == 0) != shared) continue;
        const double t = std::min(left, from[k]);
        from[k] -= t;
        to[k] += t;
        left -= t;
        rep.moved += t;
        if (!shared) ++rep.createdEntries;
      }
    }
  };
  std::size_t di = 0, ri = 0;
  while (di < donors.size() && ri < receivers.size()) {
    const std::size_t d = donors[di], r = receivers[ri];
    const double amount = std::min(dev[d], -dev[r]);
    transfer(marginals[d], marginals[r], amount);
    if (amount == dev[d]) {
      dev[d] = 0.0;
      dev[r] += amount;
      ++di;
      if (dev[r] == 0.0) ++ri;
    } else {
      dev[r] = 0.0;
      dev[d] -= amount;
      ++ri;
    }
  }
  return rep;
}

BalanceReport balanceMeasures(std::vector<SparseMarginal>& marginals,
                              std::span<const double> targets) {
  std::vector<const SparseMarginal*> parts;
  for (const auto& m : marginals) parts.push_back(&m);
  const SparseMarginal all = SparseMarginal::sum(parts);
  std::vector<std::vector<double>> dense(marginals.size(), std::vector<double>(all.size(), 0.0));
  for (std::size_t i = 0; i < marginals.size(); ++i) {
    std::size_t k = 0;
    for (std::size_t e = 0; e < marginals[i].size(); ++e) {
      while (all.index[k] != marginals[i].index[e]) ++k;
      dense[i][k] = marginals[i].mass[e];
    }
  }
  const BalanceReport rep = balanceMeasures(dense, targets);
  for (std::size_t i = 0; i < marginals.size(); ++i) {
    SparseMarginal m;
    for (std::size_t k = 0; k < all.size(); ++k) {
      if (dense[i][k] > 0.0) {
        m.index.push_back(all.index[k]);
        m.mass.push_back(dense[i][k]);
      }
    }
    marginals[i] = std::move(m);
  }
  return rep;
}

SparseMarginal truncateMarginal(const SparseMarginal& m, double floor) {
  if (floor < 0.0) throw DomainError("truncation floor must be nonnegative");
  SparseMarginal out;
  out.index.reserve(m.size());
  out.mass.reserve(m.size());
  for (std::size_t k = 0; k < m.size(); ++k) {
    if (m.mass[k] >= floor && m.mass[k] > 0.0) {
      out.index.push_back(m.index[k]);
      out.mass.push_back(m.mass[k]);
    }
  }
  return out;
}

AssembledCoupling assembleCoupling(const CellState& state, Label label, const PartitionSet& p,
                                   const ProblemData& data, const EngineConfig& config,
                                   const Executor& executor, double kernelMass) {
  CellState scratch = state;
  SweepOptions opts;
  opts.collectCoupling = true;
  opts.computePrimal = true;
  SweepStats s = sweep(scratch, label, p, data, config, executor, opts);
  AssembledCoupling out;
  out.coupling = std::move(*s.coupling);
  out.primalScore = s.primalWithoutMass + kernelMass;
  std::tie(out.xMarginalL1, out.yMarginalL1) = marginalErrors(out.coupling, *data.mu, *data.nu);
  return out;
}

std::pair<double, double> marginalErrors(const SparseCoupling& pi, const DiscreteMeasure& mu,
                                         const DiscreteMeasure& nu) {
  const auto px = pi.xMarginal();
  const auto py = pi.yMarginal();
  CompensatedSum ex, ey;
  for (std::size_t x = 0; x < mu.size(); ++x) ex += std::abs(px[x] - mu[x]);
  for (std::size_t y = 0; y < nu.size(); ++y) ey += std::abs(py[y] - nu[y]);
  return {ex.value(), ey.value()};
}

}  // namespace domdec
