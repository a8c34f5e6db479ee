#pragma once

// Hand-built partitions shared by several suites.

#include "domdec/measures.hpp"
#include "domdec/partition.hpp"

#include <Eigen/Core>

#include <vector>

namespace fixture {

using namespace domdec;

inline CompositePartition composite(Label l, const BasicPartition& basic,
                                    std::vector<std::vector<Index>> groups) {
  CompositePartition cp;
  cp.label = l;
  cp.groupOf.resize(basic.size());
  for (std::size_t g = 0; g < groups.size(); ++g) {
    std::vector<Index> xs;
    std::vector<std::size_t> off{0};
    for (Index i : groups[g]) {
      cp.groupOf[i] = static_cast<Index>(g);
      xs.insert(xs.end(), basic.cells[i].begin(), basic.cells[i].end());
      off.push_back(xs.size());
    }
    cp.groupX.push_back(xs);
    cp.cellOffsets.push_back(off);
  }
  cp.groups = std::move(groups);
  return cp;
}

// Three cells of a 1D uniform grid on [0, 1] split at 48 and 80 of 128 points.
struct LineBands {
  DiscreteMeasure mu = DiscreteMeasure::uniform(128);
  CostOracle cost = CostOracle::dense(Eigen::MatrixXd::Zero(1, 1));
  PartitionSet p;
  Eigen::MatrixXd c;

  LineBands() {
    std::vector<Point2> pts(128);
    for (int i = 0; i < 128; ++i) pts[i] = {i / 127.0, 0.0};
    cost = CostOracle::squaredEuclidean(pts, pts);
    c.resize(128, 128);
    for (int x = 0; x < 128; ++x)
      for (int y = 0; y < 128; ++y) c(x, y) = cost(x, y);
    p.basic.cells.resize(3);
    p.basic.cellOf.resize(128);
    for (Index x = 0; x < 128; ++x) {
      const Index cell = x < 48 ? 0 : (x < 80 ? 1 : 2);
      p.basic.cells[cell].push_back(x);
      p.basic.cellOf[x] = cell;
    }
    p.basic.cellMasses = {48.0 / 128, 32.0 / 128, 48.0 / 128};
    p.a = composite(Label::A, p.basic, {{0, 1}, {2}});
    p.b = composite(Label::B, p.basic, {{0}, {1, 2}});
  }
};

}  // namespace fixture
