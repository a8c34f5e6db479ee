#pragma once

// Domain decomposition engine: alternating sweeps over the composite cells of
// A and B, each solving a local entropic problem for the cell's X points
// against the sum of its basic Y-marginals.

#include "domdec/executor.hpp"
#include "domdec/measures.hpp"
#include "domdec/partition.hpp"
#include "domdec/sinkhorn.hpp"

#include <optional>
#include <span>
#include <vector>

namespace domdec {

struct ProblemData {
  const DiscreteMeasure* mu = nullptr;
  const DiscreteMeasure* nu = nullptr;
  const CostOracle* cost = nullptr;
  double eps = 1.0;
};

struct CellState {
  std::vector<SparseMarginal> basicMarginals;   // nu_i
  std::vector<std::vector<double>> potentialsA;  // alpha on groupX of each A group
  std::vector<std::vector<double>> potentialsB;
  double epsilon = 1.0;

  std::vector<std::vector<double>>& potentials(Label l) noexcept {
    return l == Label::A ? potentialsA : potentialsB;
  }
  const std::vector<std::vector<double>>& potentials(Label l) const noexcept {
    return l == Label::A ? potentialsA : potentialsB;
  }
  std::size_t entryCount() const noexcept;
};

struct EngineConfig {
  double errTol = 1e-4;
  double truncationFloor = 1e-15;
  SinkhornConfig sinkhorn;
  int safeguardAttempts = 3;
};

struct SweepOptions {
  bool collectCoupling = false;
  bool computePrimal = false;
};

struct SweepStats {
  Label label = Label::A;
  double eps = 0.0;
  std::vector<int> perCellIterations;
  double xMarginalErrorSum = 0.0;
  double massBalanced = 0.0;
  std::size_t createdEntries = 0;  // balancing transfers that created receiver points
  std::size_t entriesBeforeTruncation = 0;
  std::size_t entriesAfterTruncation = 0;
  std::size_t maxKernelEntries = 0;
  int safeguardCells = 0;
  double sinkhornSeconds = 0.0;
  double balanceSeconds = 0.0;
  double truncateSeconds = 0.0;
  double wallSeconds = 0.0;
  /// Sum over cells of the primal score without ||K|| (with computePrimal).
  double primalWithoutMass = 0.0;
  std::optional<SparseCoupling> coupling;  // with collectCoupling
};

/// nu_i = ||mu_i|| nu, zero potentials.
CellState initializeProductState(const PartitionSet& p, const DiscreteMeasure& nu, double eps);

/// nu_i = restriction of pi's Y-marginal to X_i.
CellState initializeFromCoupling(const PartitionSet& p, const SparseCoupling& pi, double eps);

/// One half-iteration over the composite partition with `label`.
SweepStats sweep(CellState& state, Label label, const PartitionSet& p, const ProblemData& data,
                 const EngineConfig& config, const Executor& executor,
                 const SweepOptions& options = {});

struct BalanceReport {
  double moved = 0.0;
  std::size_t createdEntries = 0;
};

/// Dense core: marginals[i][k] over a shared column set. Transfers mass from
/// cells with surplus to cells with deficit, pairing them in ascending order,
/// first on columns where both hold mass and the donor's largest entries first.
/// Throws ConsistencyError when the totals differ beyond 1e-9 relative.
BalanceReport balanceMeasures(std::vector<std::vector<double>>& marginals,
                              std::span<const double> targets);

/// Sparse form: columns are the union of the supports.
BalanceReport balanceMeasures(std::vector<SparseMarginal>& marginals,
                              std::span<const double> targets);

/// Entries below `floor` (and nonpositive entries) removed, others untouched.
SparseMarginal truncateMarginal(const SparseMarginal& m, double floor);

struct AssembledCoupling {
  SparseCoupling coupling;
  double primalScore = 0.0;  // KL(pi | K)
  double xMarginalL1 = 0.0;
  double yMarginalL1 = 0.0;
};

/// Solves every cell of `label` from the current state (the state is not
/// modified) and accumulates the coupling and KL(pi | K) cell by cell.
AssembledCoupling assembleCoupling(const CellState& state, Label label, const PartitionSet& p,
                                   const ProblemData& data, const EngineConfig& config,
                                   const Executor& executor, double kernelMass);

/// Marginal L1 errors of a coupling against mu and nu.
std::pair<double, double> marginalErrors(const SparseCoupling& pi, const DiscreteMeasure& mu,
                                         const DiscreteMeasure& nu);

}  // namespace domdec
