#pragma once

// End-to-end multiscale solve: hierarchy, eps schedule, refinement between
// layers, and the final primal/dual certificate.

#include "domdec/dualglue.hpp"
#include "domdec/engine.hpp"
#include "domdec/executor.hpp"
#include "domdec/multiscale.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace domdec {

struct SolveOptions {
  int cellSize = 4;
  EngineConfig engine;
  GlueOptions glue;
  int workers = 1;
  /// Finest layer only with product initialization, same eps ladder and sweep counts.
  bool flat = false;
  std::optional<std::uint64_t> seed;  // recorded in the report only
  /// Replaces the standard schedule (levels must be non-decreasing).
  std::optional<std::vector<Stage>> schedule;
};

struct StageReport {
  int level = 0;
  double eps = 0.0;
  int sweeps = 0;
  long long sinkhornIterations = 0;
  int safeguardCells = 0;
  double sinkhornSeconds = 0.0;
  double balanceSeconds = 0.0;
  double truncateSeconds = 0.0;
  double refineSeconds = 0.0;  // layer transition preceding the stage
  double wallSeconds = 0.0;
  std::size_t maxEntries = 0;  // stored nu_i entries, max over the stage's sweeps
  std::size_t endEntries = 0;
  std::size_t maxKernelEntries = 0;
  double massBalanced = 0.0;
  std::size_t createdEntries = 0;
};

struct SolveReport {
  int side = 0;
  int n = 0;
  int cellSize = 0;
  bool flat = false;
  std::vector<StageReport> stages;
  int totalSweeps = 0;
  double finalEpsilon = 0.0;
  double primalScore = 0.0;
  double dualScore = 0.0;
  double kernelMass = 0.0;
  double relativePDGap = 0.0;
  double xMarginalL1 = 0.0;
  double yMarginalL1 = 0.0;
  double transportCost = 0.0;  // sum c dpi
  std::size_t maxEntries = 0;
  std::size_t finalEntries = 0;
  double entriesPerPixel = 0.0;
  std::size_t glueFallbackPoints = 0;
  double glueObjective = 0.0;
  bool glueDisconnected = false;
  int workerCount = 1;
  std::optional<std::uint64_t> seed;
  double sinkhornSeconds = 0.0;
  double balanceSeconds = 0.0;
  double truncateSeconds = 0.0;
  double refineSeconds = 0.0;
  double certificateSeconds = 0.0;
  double totalSeconds = 0.0;
};

struct SolveResult {
  SolveReport report;
  CellState state;         // final layer
  PartitionSet partitions;  // final layer
  GridGeometry geometry{8, 1.0};
  SparseCoupling coupling;
  GluedDuals duals;
};

/// mu, nu on a side x side grid (unit spacing at the finest layer).
SolveResult solveMultiscale(const DiscreteMeasure& mu, const DiscreteMeasure& nu, int side,
                            const SolveOptions& options = {});

/// Stage list actually run: the multiscale schedule, or for flat runs the same
/// stages relabelled to the finest level.
std::vector<Stage> solveSchedule(int n, bool flat);

/// 2 (side/8)^2 halved down to finalEps: the eps values of the multiscale schedule.
std::vector<double> referenceLadder(int side, double finalEps = 0.25);

struct ReferenceReport {
  std::vector<double> ladder;
  int iterations = 0;
  double primalScore = 0.0;
  double dualScore = 0.0;
  double kernelMass = 0.0;
  double relativePDGap = 0.0;
  double xMarginalL1 = 0.0;
  double yMarginalL1 = 0.0;
  double transportCost = 0.0;
  double seconds = 0.0;
  SparseCoupling coupling;
  std::vector<double> alpha;
  std::vector<double> beta;
};

/// Dense log-domain single Sinkhorn (no truncation) with Linf stopping at `tol`.
ReferenceReport referenceBaseline(const DiscreteMeasure& mu, const DiscreteMeasure& nu, int side,
                                  double finalEps = 0.25, double tol = 1e-9);

void to_json(nlohmann::json& j, const StageReport& s);
void to_json(nlohmann::json& j, const ReferenceReport& r);
void to_json(nlohmann::json& j, const SolveReport& r);

/// Score fields only, for determinism comparisons.
std::vector<double> scoreFields(const SolveReport& r);

}  // namespace domdec
