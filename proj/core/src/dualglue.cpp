#include "domdec/dualglue.hpp"

#include "domdec/errors.hpp"

#include <Eigen/Dense>
#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>

namespace domdec {

namespace {

// Online log-sum-exp accumulator.
struct LogSum {
  double m = -kInf;
  double s = 0.0;
  void add(double v) {
    if (v == -kInf) return;
    if (v > m) {
      s = s * std::exp(m - v) + 1.0;
      m = v;
    } else {
      s += std::exp(v - m);
    }
  }
  double value() const { return s > 0.0 ? m + std::log(s) : -kInf; }
};

std::vector<std::size_t> positionsInGroups(const CompositePartition& cp, std::size_t xSize) {
  std::vector<std::size_t> pos(xSize, 0);
  for (const auto& xs : cp.groupX) {
    for (std::size_t k = 0; k < xs.size(); ++k) pos[xs[k]] = k;
  }
  return pos;
}

// Per basic cell: bounding box of its X points and max over the cell of alpha/eps + log mu.
struct CellBounds {
  struct Box {
    double rmin, rmax, cmin, cmax;
    double top;  // max alpha/eps + log mu
    std::size_t count;
  };
  std::vector<Box> boxes;

  CellBounds(const BasicPartition& cells, const CostOracle& cost, const std::vector<double>& alpha,
             const DiscreteMeasure& mu, double eps) {
    const auto& pts = cost.xPoints();
    boxes.reserve(cells.size());
    for (const auto& cell : cells.cells) {
      Box b{kInf, -kInf, kInf, -kInf, -kInf, 0};
      for (Index x : cell) {
        const auto& q = pts[x];
        b.rmin = std::min(b.rmin, q.r);
        b.rmax = std::max(b.rmax, q.r);
        b.cmin = std::min(b.cmin, q.c);
        b.cmax = std::max(b.cmax, q.c);
        if (mu[x] > 0.0) {
          b.top = std::max(b.top, alpha[x] / eps + std::log(mu[x]));
          ++b.count;
        }
      }
      boxes.push_back(b);
    }
  }

  static double minSqDist(const Box& b, const Point2& y) {
    const double dr = std::max({0.0, b.rmin - y.r, y.r - b.rmax});
    const double dc = std::max({0.0, b.cmin - y.c, y.c - b.cmax});
    return dr * dr + dc * dc;
  }
};

bool usablePruning(const BasicPartition* cells, const CostOracle& cost) {
  return cells != nullptr && !cost.isDense() && !cost.xPoints().empty();
}

}  // namespace

GlueGraph buildGlueGraph(const CellState& state, const PartitionSet& p, const DiscreteMeasure& mu,
                         double eps, Index root, GlueAverage average) {
  GlueGraph g;
  g.vertexCount = p.a.size();
  g.root = root;
  const std::size_t xSize = mu.size();
  const auto posA = positionsInGroups(p.a, xSize);
  const auto posB = positionsInGroups(p.b, xSize);
  for (std::size_t gb = 0; gb < p.b.size(); ++gb) {
    std::map<Index, std::vector<Index>> overlap;  // A group -> basic cells in JA ∩ JB
    for (Index i : p.b.groups[gb]) overlap[p.a.groupOf[i]].push_back(i);
    if (overlap.size() < 2) continue;
    struct Side {
      Index ga;
      double l1, l2;
    };
    std::vector<Side> sides;
    const auto& alphaB = state.potentialsB[gb];
    for (const auto& [ga, cells] : overlap) {
      const auto& alphaA = state.potentialsA[ga];
      LogSum s1, s2;
      CompensatedSum mass, mean;
      for (Index i : cells) {
        for (Index x : p.basic.cells[i]) {
          if (!(mu[x] > 0.0)) continue;
          const double d = (alphaA[posA[x]] - alphaB[posB[x]]) / eps;
          const double lm = std::log(mu[x]);
          s1.add(d + lm);
          s2.add(-d + lm);
          mass += mu[x];
          mean += mu[x] * d;
        }
      }
      if (!(mass.value() > 0.0)) continue;
      if (average == GlueAverage::Geometric) {
        const double m = mean.value() / mass.value();
        sides.push_back({ga, m, -m});
      } else {
        const double lmass = std::log(mass.value());
        sides.push_back({ga, s1.value() - lmass, s2.value() - lmass});
      }
    }
    for (const auto& a : sides) {
      for (const auto& b : sides) {
        if (a.ga == b.ga) continue;
        g.edges.push_back({a.ga, b.ga, static_cast<Index>(gb), a.l1 + b.l2});
      }
    }
  }
  return g;
}

double glueObjective(const GlueGraph& graph, const std::vector<double>& V) {
  CompensatedSum acc;
  for (const auto& e : graph.edges) {
    const double r = (V[e.to] - V[e.from]) - e.logq;
    acc += r * r;
  }
  return acc.value();
}

HelmholtzFit helmholtzFit(const GlueGraph& graph) {
  const std::size_t n = graph.vertexCount;
  HelmholtzFit fit;
  fit.V.assign(n, 0.0);
  if (n == 0) return fit;
  if (graph.root >= n) throw ConfigError("glue root out of range");
  std::vector<std::vector<Index>> adj(n);
  for (const auto& e : graph.edges) {
    if (e.from >= n || e.to >= n) throw ConsistencyError("glue edge outside the vertex set");
    adj[e.from].push_back(e.to);
    adj[e.to].push_back(e.from);
  }
  std::vector<int> comp(n, -1);
  std::vector<std::vector<Index>> members;
  auto flood = [&](Index start) {
    const int id = static_cast<int>(members.size());
    members.emplace_back();
    std::deque<Index> q{start};
    comp[start] = id;
    while (!q.empty()) {
      const Index v = q.front();
      q.pop_front();
      members.back().push_back(v);
      for (Index w : adj[v]) {
        if (comp[w] < 0) {
          comp[w] = id;
          q.push_back(w);
        }
      }
    }
  };
  flood(graph.root);
  for (Index v = 0; v < n; ++v) {
    if (comp[v] < 0) flood(v);
  }
  fit.components = static_cast<int>(members.size());
  fit.disconnected = fit.components > 1;

  for (std::size_t c = 0; c < members.size(); ++c) {
    auto vs = members[c];
    const Index root = c == 0 ? graph.root : *std::min_element(vs.begin(), vs.end());
    std::sort(vs.begin(), vs.end());
    std::vector<long> local(n, -1);
    long m = 0;
    for (Index v : vs) {
      if (v != root) local[v] = m++;
    }
    if (m == 0) continue;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
    std::vector<Eigen::Triplet<double>> trip;
    for (const auto& e : graph.edges) {
      if (comp[e.from] != static_cast<int>(c)) continue;
      const long a = local[e.to], b = local[e.from];
      // residual row: V(to) - V(from) - w
      if (a >= 0) {
        trip.emplace_back(a, a, 1.0);
        rhs[a] += e.logq;
      }
      if (b >= 0) {
        trip.emplace_back(b, b, 1.0);
        rhs[b] -= e.logq;
      }
      if (a >= 0 && b >= 0) {
        trip.emplace_back(a, b, -1.0);
        trip.emplace_back(b, a, -1.0);
      }
    }
    Eigen::SparseMatrix<double> lap(m, m);
    lap.setFromTriplets(trip.begin(), trip.end());
    Eigen::VectorXd sol;
    if (m <= 4096) {
      const Eigen::MatrixXd dense(lap);
      sol = dense.ldlt().solve(rhs);
    } else {
      Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper> cg;
      cg.setTolerance(1e-14);
      cg.setMaxIterations(static_cast<int>(10 * m));
      cg.compute(lap);
      sol = cg.solve(rhs);
    }
    fit.normalResidual = std::max(fit.normalResidual, (lap * sol - rhs).cwiseAbs().maxCoeff());
    for (Index v : vs) {
      if (local[v] >= 0) fit.V[v] = sol[local[v]];
    }
  }
  fit.objective = glueObjective(graph, fit.V);
  return fit;
}

std::vector<double> rootPathPotential(const GlueGraph& graph) {
  const std::size_t n = graph.vertexCount;
  std::vector<double> V(n, 0.0);
  std::vector<char> seen(n, 0);
  std::vector<std::vector<const GlueEdge*>> out(n);
  for (const auto& e : graph.edges) out[e.from].push_back(&e);
  auto bfs = [&](Index start) {
    std::deque<Index> q{start};
    seen[start] = 1;
    while (!q.empty()) {
      const Index v = q.front();
      q.pop_front();
      for (const GlueEdge* e : out[v]) {
        if (!seen[e->to]) {
          seen[e->to] = 1;
          V[e->to] = V[v] + e->logq;
          q.push_back(e->to);
        }
      }
    }
  };
  if (n > 0) bfs(graph.root);
  for (Index v = 0; v < n; ++v) {
    if (!seen[v]) bfs(v);
  }
  return V;
}

std::vector<double> bestResponseBeta(const std::vector<double>& alpha, const DiscreteMeasure& mu,
                                     const DiscreteMeasure& nu, const CostOracle& cost, double eps,
                                     const BasicPartition* cells) {
  std::vector<double> beta(nu.size(), 0.0);
  if (!usablePruning(cells, cost)) {
    for (std::size_t y = 0; y < nu.size(); ++y) {
      if (!(nu[y] > 0.0)) continue;
      LogSum ls;
      for (std::size_t x = 0; x < mu.size(); ++x) {
        if (!(mu[x] > 0.0)) continue;
        ls.add((alpha[x] - cost(static_cast<Index>(x), static_cast<Index>(y))) / eps + std::log(mu[x]));
      }
      beta[y] = -eps * ls.value();
    }
    return beta;
  }
  const CellBounds cb(*cells, cost, alpha, mu, eps);
  std::vector<double> logMu(mu.size(), -kInf);
  for (std::size_t x = 0; x < mu.size(); ++x) {
    if (mu[x] > 0.0) logMu[x] = std::log(mu[x]);
  }
  const auto& ypts = cost.yPoints();
  std::vector<double> ub(cells->size());
  std::vector<char> done(cells->size());
  for (std::size_t y = 0; y < nu.size(); ++y) {
    if (!(nu[y] > 0.0)) continue;
    std::size_t best = 0;
    for (std::size_t i = 0; i < cells->size(); ++i) {
      ub[i] = cb.boxes[i].top - CellBounds::minSqDist(cb.boxes[i], ypts[y]) / eps;
      if (ub[i] > ub[best]) best = i;
    }
    LogSum ls;
    auto evalCell = [&](std::size_t i) {
      for (Index x : cells->cells[i]) {
        if (logMu[x] == -kInf) continue;
        ls.add((alpha[x] - cost(x, static_cast<Index>(y))) / eps + logMu[x]);
      }
    };
    std::fill(done.begin(), done.end(), 0);
    evalCell(best);
    done[best] = 1;
    const double cutoff = ls.value() - 60.0;
    for (std::size_t i = 0; i < cells->size(); ++i) {
      if (!done[i] && ub[i] >= cutoff) evalCell(i);
    }
    beta[y] = -eps * ls.value();
  }
  return beta;
}

double globalDualScore(const std::vector<double>& alpha, const std::vector<double>& beta,
                       const DiscreteMeasure& mu, const DiscreteMeasure& nu, const CostOracle& cost,
                       double eps, double kernelMass, const BasicPartition* cells) {
  if (!usablePruning(cells, cost)) {
    return dualScore(alpha, beta, mu, nu, cost, eps, kernelMass);
  }
  if (alpha.size() != mu.size() || beta.size() != nu.size()) {
    throw ConsistencyError("globalDualScore: potential sizes do not match the measures");
  }
  CompensatedSum linear;
  for (std::size_t x = 0; x < mu.size(); ++x) {
    if (mu[x] == 0.0) continue;
    if (!std::isfinite(alpha[x])) return -kInf;
    linear += alpha[x] / eps * mu[x];
  }
  for (std::size_t y = 0; y < nu.size(); ++y) {
    if (nu[y] == 0.0) continue;
    if (!std::isfinite(beta[y])) return -kInf;
    linear += beta[y] / eps * nu[y];
  }
  const CellBounds cb(*cells, cost, alpha, mu, eps);
  const auto& ypts = cost.yPoints();
  CompensatedSum cross;
  for (std::size_t y = 0; y < nu.size(); ++y) {
    if (nu[y] == 0.0) continue;
    const double by = beta[y] / eps;
    double row = 0.0;
    for (std::size_t i = 0; i < cells->size(); ++i) {
      const auto& b = cb.boxes[i];
      if (b.count == 0) continue;
      const double logBound =
          b.top + by - CellBounds::minSqDist(b, ypts[y]) / eps + std::log(static_cast<double>(b.count));
      const double bound = std::exp(logBound);
      if (bound < 1e-22) {
        row += bound;
        continue;
      }
      for (Index x : cells->cells[i]) {
        if (mu[x] == 0.0) continue;
        row += std::exp((alpha[x] + beta[y] - cost(x, static_cast<Index>(y))) / eps) * mu[x];
      }
    }
    cross += row * nu[y];
  }
  const double value = linear.value() - cross.value() + kernelMass;
  return std::isnan(value) ? -kInf : value;
}

GluedDuals glueDuals(const CellState& state, const std::vector<double>& V, const PartitionSet& p,
                     const ProblemData& data, const GlueOptions& options) {
  const auto& mu = *data.mu;
  const auto& nu = *data.nu;
  const auto& cost = *data.cost;
  const double eps = data.eps;
  if (V.size() != p.a.size()) throw ConsistencyError("glue potential does not match the A groups");
  GluedDuals out;
  out.alpha.assign(mu.size(), 0.0);
  for (std::size_t g = 0; g < p.a.size(); ++g) {
    const auto& xs = p.a.groupX[g];
    const auto& pot = state.potentialsA[g];
    for (std::size_t k = 0; k < xs.size(); ++k) out.alpha[xs[k]] = pot[k] + eps * V[g];
  }
  if (options.polishY) {
    out.beta = bestResponseBeta(out.alpha, mu, nu, cost, eps, &p.basic);
    return out;
  }
  std::vector<double> num(nu.size(), 0.0), den(nu.size(), 0.0);
  for (std::size_t g = 0; g < p.a.size(); ++g) {
    std::vector<const SparseMarginal*> parts;
    for (Index i : p.a.groups[g]) parts.push_back(&state.basicMarginals[i]);
    const SparseMarginal cell = SparseMarginal::sum(parts);
    const auto& xs = p.a.groupX[g];
    const auto& pot = state.potentialsA[g];
    for (std::size_t e = 0; e < cell.size(); ++e) {
      const Index y = cell.index[e];
      if (!(nu[y] > 0.0)) continue;
      LogSum ls;
      for (std::size_t k = 0; k < xs.size(); ++k) {
        if (!(mu[xs[k]] > 0.0)) continue;
        ls.add((pot[k] - cost(xs[k], y)) / eps + std::log(mu[xs[k]]));
      }
      const double b = eps * (std::log(cell.mass[e] / nu[y]) - ls.value());
      num[y] += cell.mass[e] * (b - eps * V[g]);
      den[y] += cell.mass[e];
    }
  }
  out.beta.assign(nu.size(), 0.0);
  std::vector<Index> missing;
  for (std::size_t y = 0; y < nu.size(); ++y) {
    if (!(nu[y] > 0.0)) continue;
    if (den[y] > 0.0) {
      out.beta[y] = num[y] / den[y];
    } else {
      missing.push_back(static_cast<Index>(y));
    }
  }
  if (!missing.empty()) {
    out.fallbackPoints = missing.size();
    for (Index y : missing) {
      LogSum ls;
      for (std::size_t x = 0; x < mu.size(); ++x) {
        if (!(mu[x] > 0.0)) continue;
        ls.add((out.alpha[x] - cost(static_cast<Index>(x), y)) / eps + std::log(mu[x]));
      }
      out.beta[y] = -eps * ls.value();
    }
  }
  return out;
}

double relativePDGap(double primal, double dual, double kernelMass) {
  return (primal - dual) / (primal - kernelMass);
}

double relativeDualScore(double dualSingle, double dualDomdec, double kernelMass) {
  return (dualSingle - dualDomdec) / (dualDomdec - kernelMass);
}

Certificate certificate(const CellState& state, const PartitionSet& p, const ProblemData& data,
                        const AssembledCoupling& primal, double kernelMass,
                        const GlueOptions& options, std::optional<double> baselineDual) {
  Certificate cert;
  cert.kernelMass = kernelMass;
  cert.primalScore = primal.primalScore;
  cert.xMarginalL1 = primal.xMarginalL1;
  cert.yMarginalL1 = primal.yMarginalL1;
  const GlueGraph graph = buildGlueGraph(state, p, *data.mu, data.eps, 0, options.average);
  cert.fit = helmholtzFit(graph);
  cert.duals = glueDuals(state, cert.fit.V, p, data, options);
  cert.dualScore = globalDualScore(cert.duals.alpha, cert.duals.beta, *data.mu, *data.nu,
                                   *data.cost, data.eps, kernelMass, &p.basic);
  cert.relativePDGap = relativePDGap(cert.primalScore, cert.dualScore, kernelMass);
  if (baselineDual) {
    cert.relativeDualScore = relativeDualScore(*baselineDual, cert.dualScore, kernelMass);
  }
  return cert;
}

}  // namespace domdec
