#include "domdec/partition.hpp"

#include "domdec/errors.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <string>

namespace domdec {

namespace {

// Index runs for a 1D axis of `n` cells: pairs starting at `start`, with
// leading/trailing singletons as needed.
std::vector<std::vector<int>> axisRuns(int n, int start) {
  std::vector<std::vector<int>> runs;
  int k = 0;
  if (start == 1) {
    runs.push_back({0});
    k = 1;
  }
  while (k < n) {
    if (k + 1 < n) {
      runs.push_back({k, k + 1});
      k += 2;
    } else {
      runs.push_back({k});
      k += 1;
    }
  }
  return runs;
}

void finishComposite(CompositePartition& cp, const BasicPartition& basic) {
  cp.groupOf.assign(basic.size(), 0);
  cp.groupX.assign(cp.groups.size(), {});
  cp.cellOffsets.assign(cp.groups.size(), {});
  for (std::size_t g = 0; g < cp.groups.size(); ++g) {
    auto& xs = cp.groupX[g];
    auto& off = cp.cellOffsets[g];
    off.push_back(0);
    for (Index i : cp.groups[g]) {
      cp.groupOf[i] = static_cast<Index>(g);
      xs.insert(xs.end(), basic.cells[i].begin(), basic.cells[i].end());
      off.push_back(xs.size());
    }
  }
}

CompositePartition gridComposite(Label label, int cellsPerAxis, const BasicPartition& basic) {
  const auto runs = axisRuns(cellsPerAxis, label == Label::A ? 0 : 1);
  CompositePartition cp;
  cp.label = label;
  for (const auto& rr : runs) {
    for (const auto& cc : runs) {
      std::vector<Index> g;
      for (int r : rr) {
        for (int c : cc) g.push_back(static_cast<Index>(r * cellsPerAxis + c));
      }
      cp.groups.push_back(std::move(g));
    }
  }
  finishComposite(cp, basic);
  return cp;
}

CompositePartition chainComposite(Label label, int n, const BasicPartition& basic) {
  CompositePartition cp;
  cp.label = label;
  for (const auto& run : axisRuns(n, label == Label::A ? 0 : 1)) {
    std::vector<Index> g;
    for (int k : run) g.push_back(static_cast<Index>(k));
    cp.groups.push_back(std::move(g));
  }
  finishComposite(cp, basic);
  return cp;
}

void fillMasses(BasicPartition& basic, const DiscreteMeasure& mu) {
  basic.cellMasses.assign(basic.size(), 0.0);
  for (std::size_t i = 0; i < basic.size(); ++i) {
    CompensatedSum acc;
    for (Index x : basic.cells[i]) acc += mu[x];
    basic.cellMasses[i] = acc.value();
    if (!(basic.cellMasses[i] > 0.0)) {
      throw DomainError("basic cell " + std::to_string(i) +
                        " has zero mass; apply a mass floor at ingestion");
    }
  }
}

}  // namespace

PartitionSet buildGridPartitions(const GridGeometry& geometry, const DiscreteMeasure& mu,
                                 int cellSize) {
  if (mu.size() != geometry.size()) {
    throw ConsistencyError("measure is not aligned with the grid");
  }
  if (cellSize < 1 || geometry.side() % cellSize != 0) {
    throw ConfigError("cell size " + std::to_string(cellSize) + " does not divide grid side " +
                      std::to_string(geometry.side()));
  }
  const int nc = geometry.side() / cellSize;
  if (nc < 2) {
    throw ConfigError("cell size " + std::to_string(cellSize) +
                      " leaves a single basic cell; at least 2 x 2 cells are required");
  }
  PartitionSet p;
  auto& basic = p.basic;
  basic.cellSize = cellSize;
  basic.cellsPerAxis = nc;
  basic.cells.assign(static_cast<std::size_t>(nc) * nc, {});
  basic.cellOf.assign(geometry.size(), 0);
  for (int r = 0; r < geometry.side(); ++r) {
    for (int c = 0; c < geometry.side(); ++c) {
      const Index cell = static_cast<Index>((r / cellSize) * nc + c / cellSize);
      const Index x = geometry.flat(r, c);
      basic.cells[cell].push_back(x);
      basic.cellOf[x] = cell;
    }
  }
  fillMasses(basic, mu);
  p.a = gridComposite(Label::A, nc, basic);
  p.b = gridComposite(Label::B, nc, basic);
  return p;
}

PartitionSet buildChainPartitions(const DiscreteMeasure& mu) {
  const int n = static_cast<int>(mu.size());
  if (n < 3) throw ConfigError("chain partitions need at least 3 cells");
  PartitionSet p;
  auto& basic = p.basic;
  basic.cells.resize(static_cast<std::size_t>(n));
  basic.cellOf.resize(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    basic.cells[static_cast<std::size_t>(k)] = {static_cast<Index>(k)};
    basic.cellOf[static_cast<std::size_t>(k)] = static_cast<Index>(k);
  }
  fillMasses(basic, mu);
  p.a = chainComposite(Label::A, n, basic);
  p.b = chainComposite(Label::B, n, basic);
  return p;
}

PartitionSet buildChainPartitions(int n) {
  if (n < 3) throw ConfigError("chain partitions need at least 3 cells");
  return buildChainPartitions(DiscreteMeasure::uniform(static_cast<std::size_t>(n)));
}

void validatePartitions(const PartitionSet& p, std::size_t xSize) {
  std::vector<int> seen(xSize, 0);
  for (const auto& cell : p.basic.cells) {
    for (Index x : cell) {
      if (x >= xSize || seen[x]++) throw ConsistencyError("basic cells overlap or exceed X");
    }
  }
  if (std::find(seen.begin(), seen.end(), 0) != seen.end()) {
    throw ConsistencyError("basic cells do not cover X");
  }
  for (const CompositePartition* cp : {&p.a, &p.b}) {
    std::vector<int> used(p.basic.size(), 0);
    for (const auto& g : cp->groups) {
      for (Index i : g) {
        if (i >= p.basic.size() || used[i]++) {
          throw ConsistencyError(std::string("composite partition ") + labelName(cp->label) +
                                 " is not a partition of the basic cells");
        }
      }
    }
    if (std::find(used.begin(), used.end(), 0) != used.end()) {
      throw ConsistencyError(std::string("composite partition ") + labelName(cp->label) +
                             " misses basic cells");
    }
  }
  for (const auto& g : p.a.groups) {
    for (std::size_t s = 0; s < g.size(); ++s) {
      for (std::size_t t = s + 1; t < g.size(); ++t) {
        if (p.b.groupOf[g[s]] == p.b.groupOf[g[t]]) {
          throw ConsistencyError("basic cells " + std::to_string(g[s]) + " and " +
                                 std::to_string(g[t]) + " share both an A and a B group");
        }
      }
    }
  }
}

PartitionGraph buildPartitionGraph(const PartitionSet& p, Index rootGroup) {
  if (rootGroup >= p.a.size()) throw ConfigError("root group out of range");
  PartitionGraph g;
  g.vertexCount = p.basic.size();
  g.rootGroup = rootGroup;
  std::vector<std::vector<Index>> adj(g.vertexCount);
  for (const CompositePartition* cp : {&p.a, &p.b}) {
    for (std::size_t k = 0; k < cp->groups.size(); ++k) {
      const auto& grp = cp->groups[k];
      for (std::size_t s = 0; s < grp.size(); ++s) {
        for (std::size_t t = s + 1; t < grp.size(); ++t) {
          g.edges.push_back({grp[s], grp[t], cp->label, static_cast<Index>(k)});
          adj[grp[s]].push_back(grp[t]);
          adj[grp[t]].push_back(grp[s]);
        }
      }
    }
  }
  g.cellDistance.assign(g.vertexCount, -1);
  std::deque<Index> queue;
  for (Index i : p.a.groups[rootGroup]) {
    g.cellDistance[i] = 0;
    queue.push_back(i);
  }
  while (!queue.empty()) {
    const Index i = queue.front();
    queue.pop_front();
    for (Index j : adj[i]) {
      if (g.cellDistance[j] < 0) {
        g.cellDistance[j] = g.cellDistance[i] + 1;
        queue.push_back(j);
      }
    }
  }
  for (std::size_t i = 0; i < g.vertexCount; ++i) {
    if (g.cellDistance[i] < 0) {
      throw ConsistencyError("partition graph is disconnected at basic cell " + std::to_string(i));
    }
    g.diameterM = std::max(g.diameterM, g.cellDistance[i]);
  }
  return g;
}

double threeCellBound(double mass2, double mass13, double cNorm, double eps) {
  if (!(eps > 0.0)) throw DomainError("eps must be positive");
  if (!(mass13 > 0.0) || mass2 < 0.0) throw DomainError("cell masses must be positive");
  return 1.0 / (1.0 + std::exp(-2.0 * cNorm / eps) * mass2 / mass13);
}

double nCellBound(int M, std::size_t N, double muMin, double cNorm, double eps, bool* vacuous) {
  if (!(eps > 0.0)) throw DomainError("eps must be positive");
  if (!(muMin > 0.0)) throw DomainError("muMin must be positive");
  // bound = 1 / (1 + r), r = muMin^{2M+1} / (2MN e^{(6M+7)c/eps}), evaluated in logs.
  const double logA = std::log(2.0 * std::max(M, 0) * static_cast<double>(N)) +
                      (6.0 * M + 7.0) * cNorm / eps;
  const double logR = (2.0 * M + 1.0) * std::log(muMin) - logA;
  const double r = std::exp(logR);
  const double value = M == 0 ? 0.0 : 1.0 / (1.0 + r);
  if (vacuous) *vacuous = M > 0 && value >= 1.0;
  return value;
}

RateBounds rateBounds(const PartitionSet& p, const PartitionGraph& g, double cNorm, double eps) {
  RateBounds out;
  const auto& masses = p.basic.cellMasses;
  const bool threeShape = p.basic.size() == 3 && p.a.groups.size() == 2 &&
                          p.a.groups[0] == std::vector<Index>{0, 1} &&
                          p.a.groups[1] == std::vector<Index>{2} && p.b.groups.size() == 2 &&
                          p.b.groups[0] == std::vector<Index>{0} &&
                          p.b.groups[1] == std::vector<Index>{1, 2};
  if (threeShape) out.threeCell = threeCellBound(masses[1], masses[0] + masses[2], cNorm, eps);
  const double muMin = *std::min_element(masses.begin(), masses.end());
  out.nCell = nCellBound(g.diameterM, p.basic.size(), muMin, cNorm, eps, &out.nCellVacuous);
  return out;
}

}  // namespace domdec
