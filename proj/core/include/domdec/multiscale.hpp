#pragma once

// Dyadic image hierarchy, coarse-to-fine initialization of basic marginals
// and potentials, and the per-layer eps schedule.

#include "domdec/engine.hpp"
#include "domdec/measures.hpp"
#include "domdec/partition.hpp"

#include <vector>

namespace domdec {

struct Layer {
  int level = 0;  // grid has 2^level points per axis
  GridGeometry geometry{8, 1.0};
  DiscreteMeasure mu;
  DiscreteMeasure nu;
  int cellSize = 0;
  PartitionSet partitions;
  CostOracle cost = CostOracle::grid(GridGeometry{8, 1.0}, GridGeometry{8, 1.0});
};

/// layers[0] is level 3, layers.back() the input resolution.
struct MultiscaleHierarchy {
  int n = 0;
  std::vector<Layer> layers;

  /// Parent pixel on layer k-1 of pixel x on layer k.
  Index parentPoint(std::size_t k, Index x) const noexcept;
  /// Parent basic cell on layer k-1 of basic cell i on layer k.
  Index parentCell(std::size_t k, Index i) const noexcept;
  std::vector<std::vector<Index>> parentCells;  // per layer k >= 1
};

MultiscaleHierarchy buildHierarchy(const DiscreteMeasure& mu, const DiscreteMeasure& nu, int side,
                                   int cellSize);

/// 2 x 2 block sums of an image with the given side.
std::vector<double> coarsen(const std::vector<double>& fine, int side);

struct Stage {
  int level = 0;
  double eps = 0.0;
  int sweeps = 0;
};

/// Per level l = 3..n: (2 dx^2, 4), (dx^2, 2), (dx^2 / 2, 2) with dx = 2^{n-l};
/// the finest level appends (0.25, 2).
std::vector<Stage> buildSchedule(int n);
int totalSweeps(const std::vector<Stage>& schedule);

/// nu_i(y) = nu(y) nû_{Pa(i)}(pa(y)) / nû(pa(y)) * mu(X_i) / mû(X̂_{Pa(i)}), 0/0 = 0.
/// Potentials of the result are zero; use refinePotentials to fill them.
CellState refineMarginals(const CellState& coarse, const MultiscaleHierarchy& h, std::size_t fineLayer);

/// Bilinear interpolation (linear extrapolation at the far boundary) of a coarse
/// potential on the X grid of layer k-1 onto layer k.
std::vector<double> interpolatePotential(const std::vector<double>& coarse, const GridGeometry& coarseGeom,
                                         const GridGeometry& fineGeom);

/// Restricts a global X potential to every A and B group as warm starts.
void seedPotentials(CellState& state, const PartitionSet& p, const std::vector<double>& alpha);

}  // namespace domdec
