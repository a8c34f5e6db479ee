#pragma once

// Three-cell and chain instances on which domain decomposition converges
// slowly, contraction-factor extraction from sub-optimality traces, and the
// comparison against the theoretical rate bounds.

#include "domdec/engine.hpp"
#include "domdec/measures.hpp"
#include "domdec/partition.hpp"

#include <Eigen/Core>

#include <string>
#include <vector>

namespace domdec {

struct WorstCaseInstance {
  std::string name;
  Eigen::MatrixXd costMatrix;
  CostOracle cost = CostOracle::dense(Eigen::MatrixXd::Zero(1, 1));
  DiscreteMeasure mu;
  DiscreteMeasure nu;
  SparseCoupling initialCoupling;
  PartitionSet partitions;
  double epsilon = 1.0;
  double q = 0.0;  // three-cell middle mass; 0 for chains
};

/// mu = nu = (p, q, p), p = (1-q)/2; c = 0 on the diagonal, 1 on (0,2) and (2,0), 10 elsewhere.
WorstCaseInstance makeThreeCell(double q, double eps);

/// mu = nu uniform on N points; c = 0 on the diagonal, 1 on (0,N-1) and (N-1,0), 10 elsewhere.
WorstCaseInstance makeChain(int n, double eps = 1.4);

/// Entropic optimum of the whole instance, solved with the Newton variant.
Eigen::MatrixXd optimalCoupling(const WorstCaseInstance& instance);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

LineFit fitLine(const std::vector<double>& x, const std::vector<double>& y);

struct TraceOptions {
  int minSweeps = 20;
  int maxSweeps = 2000;
  bool stopAtFloor = true;
  double floor = 1e-14;
  double subTolerance = 1e-13;
};

struct ConvergenceTrace {
  std::vector<double> delta;  // delta[l] = KL(pi^l | pi*), l = 0 is the initial coupling
  double lambda = 1.0;
  double r2 = 0.0;
  std::size_t fitBegin = 0;  // sweeps [fitBegin, fitEnd) entered the fit
  std::size_t fitEnd = 0;
  bool floorReached = false;  // the fit was restricted to the pre-floor segment
  bool shortWindow = false;   // fewer than 20 points were available
};

/// Fits log delta over the last half (at least 20 points) of the pre-floor segment.
void fitContraction(ConvergenceTrace& trace, double floor = 1e-14);

/// Runs `sweeps` alternating A/B sweeps with exact sub-solves.
ConvergenceTrace runTrace(const WorstCaseInstance& instance, int sweeps);
/// Runs until delta reaches the floor (or maxSweeps).
ConvergenceTrace runTrace(const WorstCaseInstance& instance, const TraceOptions& options);

struct BoundReport {
  double empiricalLambda = 1.0;
  double theoreticalBound = 1.0;  // three-cell bound for three-cell instances, n-cell otherwise
  bool vacuous = false;           // lambda >= 1 or the bound rounds to 1
  // Three-cell transformed quantities.
  double epsTransformed = 0.0;       // -log(1/lambda - 1)
  double epsTransformedBound = 0.0;  // 2 c/eps - log(q/(1-q))
  double qTransformed = 0.0;         // 1/lambda - 1
  double qTransformedBound = 0.0;    // exp(-2 c/eps) q/(1-q)
};

BoundReport boundComparison(const ConvergenceTrace& trace, const WorstCaseInstance& instance);

struct StepCheck {
  std::size_t violations = 0;
  double worstExcess = -kInf;  // max of delta[l] - bound * delta[l - lag]
};

/// delta[l] <= bound * delta[l - lag] + slack for every l > lag (l >= 2 when lag = 1).
StepCheck checkStepBound(const std::vector<double>& delta, double bound, std::size_t lag,
                         double slack = 1e-9);

}  // namespace domdec
