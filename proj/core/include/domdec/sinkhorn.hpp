#pragma once

// Log-stabilized Sinkhorn sub-solver for one (cell-sized or global) entropic
// transport problem, a Newton variant for tiny dense problems that must be
// solved to machine precision, and the dense single-Sinkhorn reference.

#include "domdec/measures.hpp"

#include <span>
#include <vector>

namespace domdec {

/// Sparse block of a kernel-type matrix over rows x cols in CSR form. For a
/// kernel, values are k(x,y) mu(x) nu(y); for a coupling they are masses.
struct KernelBlock {
  std::vector<Index> rows;  // global X indices
  std::vector<Index> cols;  // global Y indices
  std::vector<std::size_t> rowStart;
  std::vector<Index> colIndex;  // local column per entry
  std::vector<double> values;
  double epsilon = 1.0;

  std::size_t entryCount() const noexcept { return values.size(); }
};

/// K = exp(-c/eps) (mu ⊗ nu) on rows x cols, entries that underflow omitted.
KernelBlock buildKernelBlock(std::vector<Index> rows, std::vector<Index> cols,
                             const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                             const CostOracle& cost, double eps);

struct TruncationOutcome {
  KernelBlock block;
  bool emptyRowOrColumn = false;
};

/// Keeps entry (x,y) iff exp((alpha(x)+beta(y))/eps) * value >= theta * rowScale(x) * colScale(y).
/// With unit scales this is the rule (u ⊗ v) K >= theta; the Sinkhorn solver
/// passes the target marginal densities so that the rule is relative to dmu^/dmu.
TruncationOutcome truncateKernel(const KernelBlock& block, std::span<const double> alpha,
                                 std::span<const double> beta, double theta,
                                 std::span<const double> rowScale = {},
                                 std::span<const double> colScale = {});

struct SinkhornProblem {
  std::vector<Index> rows;
  std::vector<double> muHat;  // X target on rows
  std::vector<double> muRef;  // mu restricted to rows
  std::vector<Index> cols;
  std::vector<double> nuHat;  // Y target on cols
  std::vector<double> nuRef;  // nu restricted to cols
  const CostOracle* cost = nullptr;
  double eps = 1.0;
};

enum class StopNorm { L1, Linf };

struct SinkhornConfig {
  double theta = 1e-10;
  double absorptionBound = 20.0;
  int checkEvery = 10;
  int maxIterations = 10000;
  StopNorm norm = StopNorm::L1;
  /// Damped Newton on the semi-dual with an exact Y best response (dense, theta ignored).
  bool exact = false;
};

enum class SinkhornStatus { Converged, Infeasible, MaxIterations };

const char* statusName(SinkhornStatus s) noexcept;

struct SinkhornResult {
  SinkhornStatus status = SinkhornStatus::Converged;
  std::vector<double> alpha;  // eps log u on rows
  std::vector<double> beta;   // eps log v on cols
  KernelBlock coupling;       // pi after the final Y-iteration
  double xMarginalError = 0.0;
  int iterations = 0;  // Y-iterations (Newton steps in exact mode)
  int absorptions = 0;
  std::size_t kernelEntries = 0;  // largest truncated kernel held
};

/// Alternating Y/X iterations starting with a Y-iteration from alpha = initAlpha.
/// L1 mode stops when the post-Y X-marginal error is <= ||muHat|| errTol; Linf mode
/// when its largest entry is <= errTol. Never throws on non-convergence: the
/// status carries Infeasible (truncation emptied a row) or MaxIterations.
SinkhornResult sinkhornSolve(const SinkhornProblem& problem, std::span<const double> initAlpha,
                             double errTol, const SinkhornConfig& config);

/// Identity in the log-potential representation.
std::pair<std::vector<double>, std::vector<double>> rescalePotentials(
    std::vector<double> alpha, std::vector<double> beta, double epsOld, double epsNew);

/// u_new = u_old^(epsOld / epsNew): the same map for raw scalings.
double rescaleScaling(double u, double epsOld, double epsNew);

/// Full-support problem between mu and nu (zero-mass points dropped).
SinkhornProblem globalProblem(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                              const CostOracle& cost, double eps);

struct ReferenceResult {
  SinkhornResult result;
  SinkhornProblem problem;
  std::vector<double> alphaFull;  // on all of X (0 where mu = 0)
  std::vector<double> betaFull;
  std::vector<double> ladder;
  int totalIterations = 0;
};

/// Single Sinkhorn over the full product along an eps ladder, stopping each stage
/// at Linf X-marginal error <= tol. Ladder stages keep kernel entries above
/// ladderTheta; the last eps is then repeated on the untruncated kernel.
/// Throws ConvergenceError.
ReferenceResult referenceSolve(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                               const CostOracle& cost, std::vector<double> ladder,
                               double tol = 1e-9, int maxIterations = 200000,
                               double ladderTheta = 1e-10);

/// Coupling as a global sparse coupling.
SparseCoupling toSparseCoupling(const KernelBlock& block, std::size_t xSize, std::size_t ySize);

}  // namespace domdec
