#include "domdec/multiscale.hpp"

#include "domdec/errors.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <string>

namespace domdec {

std::vector<double> coarsen(const std::vector<double>& fine, int side) {
  const int half = side / 2;
  std::vector<double> out(static_cast<std::size_t>(half) * half, 0.0);
  for (int r = 0; r < side; ++r) {
    for (int c = 0; c < side; ++c) {
      out[static_cast<std::size_t>((r / 2) * half + c / 2)] += fine[static_cast<std::size_t>(r * side + c)];
    }
  }
  return out;
}

Index MultiscaleHierarchy::parentPoint(std::size_t k, Index x) const noexcept {
  const int side = layers[k].geometry.side();
  const int half = side / 2;
  const int r = static_cast<int>(x) / side, c = static_cast<int>(x) % side;
  return static_cast<Index>((r / 2) * half + c / 2);
}

Index MultiscaleHierarchy::parentCell(std::size_t k, Index i) const noexcept {
  return parentCells[k][i];
}

MultiscaleHierarchy buildHierarchy(const DiscreteMeasure& mu, const DiscreteMeasure& nu, int side,
                                   int cellSize) {
  if (!isPowerOfTwo(side) || side < 8) {
    throw ConfigError("image side must be a power of two >= 8, got " + std::to_string(side));
  }
  const std::size_t count = static_cast<std::size_t>(side) * side;
  if (mu.size() != count || nu.size() != count) {
    throw ConsistencyError("images do not match the declared side");
  }
  if (cellSize < 1 || !isPowerOfTwo(cellSize) || cellSize > side / 2) {
    throw ConfigError("cell size must be a power of two dividing side/2");
  }
  MultiscaleHierarchy h;
  h.n = std::countr_zero(static_cast<unsigned>(side));
  const int levels = h.n - 2;
  std::vector<std::vector<double>> muW(static_cast<std::size_t>(levels)), nuW(static_cast<std::size_t>(levels));
  muW.back() = mu.weights();
  nuW.back() = nu.weights();
  for (int k = levels - 1; k > 0; --k) {
    const int s = 1 << (k + 3);
    muW[static_cast<std::size_t>(k - 1)] = coarsen(muW[static_cast<std::size_t>(k)], s);
    nuW[static_cast<std::size_t>(k - 1)] = coarsen(nuW[static_cast<std::size_t>(k)], s);
  }
  h.layers.resize(static_cast<std::size_t>(levels));
  h.parentCells.resize(static_cast<std::size_t>(levels));
  for (int k = 0; k < levels; ++k) {
    auto& L = h.layers[static_cast<std::size_t>(k)];
    L.level = k + 3;
    L.geometry = GridGeometry(1 << L.level, std::ldexp(1.0, h.n - L.level));
    L.mu = DiscreteMeasure(std::move(muW[static_cast<std::size_t>(k)]));
    L.nu = DiscreteMeasure(std::move(nuW[static_cast<std::size_t>(k)]));
    L.cellSize = std::min(cellSize, 1 << (L.level - 1));
    L.partitions = buildGridPartitions(L.geometry, L.mu, L.cellSize);
    L.cost = CostOracle::grid(L.geometry, L.geometry);
    if (k > 0) {
      const auto& coarse = h.layers[static_cast<std::size_t>(k - 1)].partitions.basic;
      auto& pc = h.parentCells[static_cast<std::size_t>(k)];
      pc.resize(L.partitions.basic.size());
      for (std::size_t i = 0; i < L.partitions.basic.size(); ++i) {
        const auto& cell = L.partitions.basic.cells[i];
        const Index parent = coarse.cellOf[h.parentPoint(static_cast<std::size_t>(k), cell.front())];
        for (Index x : cell) {
          if (coarse.cellOf[h.parentPoint(static_cast<std::size_t>(k), x)] != parent) {
            throw ConsistencyError("fine basic cell " + std::to_string(i) +
                                   " straddles coarse basic cells");
          }
        }
        pc[i] = parent;
      }
    }
  }
  return h;
}

std::vector<Stage> buildSchedule(int n) {
  if (n < 3) throw ConfigError("schedule needs n >= 3");
  std::vector<Stage> out;
  for (int l = 3; l <= n; ++l) {
    const double dx = std::ldexp(1.0, n - l);
    const double d2 = dx * dx;
    out.push_back({l, 2.0 * d2, 4});
    out.push_back({l, d2, 2});
    out.push_back({l, 0.5 * d2, 2});
  }
  out.push_back({n, 0.25, 2});
  return out;
}

int totalSweeps(const std::vector<Stage>& schedule) {
  return std::accumulate(schedule.begin(), schedule.end(), 0,
                         [](int acc, const Stage& s) { return acc + s.sweeps; });
}

CellState refineMarginals(const CellState& coarse, const MultiscaleHierarchy& h, std::size_t fineLayer) {
  if (fineLayer == 0 || fineLayer >= h.layers.size()) throw ConfigError("invalid fine layer");
  const Layer& C = h.layers[fineLayer - 1];
  const Layer& F = h.layers[fineLayer];
  const auto& cb = C.partitions.basic;
  const auto& fb = F.partitions.basic;
  if (coarse.basicMarginals.size() != cb.size()) {
    throw ConsistencyError("coarse state does not match the coarse partition");
  }
  {
    std::vector<double> sum(C.nu.size(), 0.0);
    for (std::size_t j = 0; j < cb.size(); ++j) {
      const auto& m = coarse.basicMarginals[j];
      const double mass = m.totalMass();
      if (std::abs(mass - cb.cellMasses[j]) > 1e-9 * cb.cellMasses[j]) {
        throw ConsistencyError("coarse basic marginal " + std::to_string(j) +
                               " does not carry its cell mass");
      }
      for (std::size_t e = 0; e < m.size(); ++e) sum[m.index[e]] += m.mass[e];
    }
    double l1 = 0.0;
    for (std::size_t y = 0; y < sum.size(); ++y) l1 += std::abs(sum[y] - C.nu[y]);
    if (l1 > 1e-6) throw ConsistencyError("coarse basic marginals do not sum to nu");
  }
  const int fs = F.geometry.side();
  CellState out;
  out.epsilon = coarse.epsilon;
  out.basicMarginals.resize(fb.size());
  std::vector<std::pair<Index, double>> buf;
  for (std::size_t i = 0; i < fb.size(); ++i) {
    const Index j = h.parentCell(fineLayer, static_cast<Index>(i));
    const double factor = fb.cellMasses[i] / cb.cellMasses[j];
    const auto& m = coarse.basicMarginals[j];
    buf.clear();
    for (std::size_t e = 0; e < m.size(); ++e) {
      const double nuHat = C.nu[m.index[e]];
      if (!(nuHat > 0.0)) continue;
      const double w = m.mass[e] / nuHat * factor;
      const int cr = static_cast<int>(m.index[e]) / C.geometry.side();
      const int cc = static_cast<int>(m.index[e]) % C.geometry.side();
      for (int dr = 0; dr < 2; ++dr) {
        for (int dc = 0; dc < 2; ++dc) {
          const Index y = static_cast<Index>((2 * cr + dr) * fs + 2 * cc + dc);
          const double v = F.nu[y] * w;
          if (v > 0.0) buf.emplace_back(y, v);
        }
      }
    }
    std::sort(buf.begin(), buf.end());
    auto& fm = out.basicMarginals[i];
    fm.index.reserve(buf.size());
    fm.mass.reserve(buf.size());
    for (const auto& [y, v] : buf) {
      fm.index.push_back(y);
      fm.mass.push_back(v);
    }
  }
  out.potentialsA.resize(F.partitions.a.size());
  for (std::size_t g = 0; g < F.partitions.a.size(); ++g) {
    out.potentialsA[g].assign(F.partitions.a.groupX[g].size(), 0.0);
  }
  out.potentialsB.resize(F.partitions.b.size());
  for (std::size_t g = 0; g < F.partitions.b.size(); ++g) {
    out.potentialsB[g].assign(F.partitions.b.groupX[g].size(), 0.0);
  }
  return out;
}

std::vector<double> interpolatePotential(const std::vector<double>& coarse, const GridGeometry& coarseGeom,
                                         const GridGeometry& fineGeom) {
  const int cs = coarseGeom.side();
  const int fs = fineGeom.side();
  if (fs != 2 * cs || coarse.size() != coarseGeom.size()) {
    throw ConsistencyError("interpolatePotential: grids are not one dyadic level apart");
  }
  auto at = [&](int r, int c) { return coarse[static_cast<std::size_t>(r * cs + c)]; };
  auto axis = [&](int f, int& i0, double& t) {
    const double x = 0.5 * f;
    i0 = std::clamp(static_cast<int>(std::floor(x)), 0, std::max(cs - 2, 0));
    t = x - i0;
  };
  std::vector<double> out(fineGeom.size());
  for (int r = 0; r < fs; ++r) {
    int r0;
    double tr;
    axis(r, r0, tr);
    for (int c = 0; c < fs; ++c) {
      int c0;
      double tc;
      axis(c, c0, tc);
      double v;
      if (cs == 1) {
        v = at(0, 0);
      } else {
        v = (1 - tr) * (1 - tc) * at(r0, c0) + (1 - tr) * tc * at(r0, c0 + 1) +
            tr * (1 - tc) * at(r0 + 1, c0) + tr * tc * at(r0 + 1, c0 + 1);
      }
      out[static_cast<std::size_t>(r * fs + c)] = v;
    }
  }
  return out;
}

void seedPotentials(CellState& state, const PartitionSet& p, const std::vector<double>& alpha) {
  for (const CompositePartition* cp : {&p.a, &p.b}) {
    auto& pots = state.potentials(cp->label);
    pots.resize(cp->size());
    for (std::size_t g = 0; g < cp->size(); ++g) {
      const auto& xs = cp->groupX[g];
      pots[g].resize(xs.size());
      for (std::size_t k = 0; k < xs.size(); ++k) pots[g][k] = alpha[xs[k]];
    }
  }
}

}  // namespace domdec
