#pragma once

// Basic and composite partitions of the X index set, the induced partition
// graph and the contraction-rate bounds evaluated on it.

#include "domdec/measures.hpp"

#include <optional>
#include <vector>

namespace domdec {

enum class Label { A, B };

inline const char* labelName(Label l) noexcept { return l == Label::A ? "A" : "B"; }

struct BasicPartition {
  std::vector<std::vector<Index>> cells;  // X indices per basic cell, ascending
  std::vector<double> cellMasses;         // ||mu_i||
  std::vector<Index> cellOf;              // x -> basic cell
  int cellSize = 1;                       // pixels per axis (1 for abstract chains)
  int cellsPerAxis = 0;                   // 0 for non-grid partitions

  std::size_t size() const noexcept { return cells.size(); }
};

/// A partition of the basic cells. groupX[g] concatenates the X indices of the
/// group's basic cells in group order; cellOffsets[g] delimits them.
struct CompositePartition {
  Label label = Label::A;
  std::vector<std::vector<Index>> groups;
  std::vector<Index> groupOf;  // basic cell -> group
  std::vector<std::vector<Index>> groupX;
  std::vector<std::vector<std::size_t>> cellOffsets;  // size |group| + 1

  std::size_t size() const noexcept { return groups.size(); }
};

struct PartitionSet {
  BasicPartition basic;
  CompositePartition a;
  CompositePartition b;

  const CompositePartition& byLabel(Label l) const noexcept { return l == Label::A ? a : b; }
};

/// s x s pixel blocks, 2 x 2 blocks of cells for A and the offset-by-one tiling for B.
PartitionSet buildGridPartitions(const GridGeometry& geometry, const DiscreteMeasure& mu,
                                 int cellSize);

/// Singleton basic cells with A = {0,1},{2,3},... and B = {0},{1,2},...
PartitionSet buildChainPartitions(const DiscreteMeasure& mu);
PartitionSet buildChainPartitions(int n);

/// Structural checks; throws ConsistencyError on violation.
void validatePartitions(const PartitionSet& p, std::size_t xSize);

struct PartitionGraph {
  struct Edge {
    Index i;
    Index j;
    Label via;
    Index group;
  };
  std::size_t vertexCount = 0;
  std::vector<Edge> edges;
  Index rootGroup = 0;
  std::vector<int> cellDistance;  // D(i)
  int diameterM = 0;              // max D
};

/// Edges join basic cells sharing a composite cell; D is the breadth-first
/// distance to the cells of A-group `rootGroup`. Throws ConsistencyError when
/// the graph is disconnected.
PartitionGraph buildPartitionGraph(const PartitionSet& p, Index rootGroup = 0);

struct RateBounds {
  std::optional<double> threeCell;
  double nCell = 1.0;
  bool nCellVacuous = false;
};

/// (1 + exp(-2 c/eps) m2 / m13)^-1.
double threeCellBound(double mass2, double mass13, double cNorm, double eps);

/// 2MN e^{(6M+7)c/eps} / (muMin^{2M+1} + 2MN e^{(6M+7)c/eps}); *vacuous is set when
/// the value rounds to 1.
double nCellBound(int M, std::size_t N, double muMin, double cNorm, double eps,
                  bool* vacuous = nullptr);

/// threeCell is filled only for the three-cell shape A = {{0,1},{2}}, B = {{0},{1,2}}.
RateBounds rateBounds(const PartitionSet& p, const PartitionGraph& g, double cNorm, double eps);

}  // namespace domdec
