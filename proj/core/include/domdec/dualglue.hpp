#pragma once

// Global dual candidate from per-cell potentials: a least-squares vertex
// potential V on the A-cell graph fixes the relative offsets of the A-cell
// potentials, after which X and Y potentials are assembled globally.

#include "domdec/engine.hpp"
#include "domdec/measures.hpp"
#include "domdec/partition.hpp"

#include <optional>
#include <vector>

namespace domdec {

/// One oriented edge. The fit asks V(to) - V(from) to match logq.
struct GlueEdge {
  Index from;
  Index to;
  Index via;  // B group whose overlaps define the weight
  double logq;
};

struct GlueGraph {
  std::size_t vertexCount = 0;
  std::vector<GlueEdge> edges;  // both orientations of every A pair sharing a B group
  Index root = 0;

  std::size_t undirectedCount() const noexcept { return edges.size() / 2; }
};

enum class GlueAverage {
  /// log ⨏ e^{d/eps} dmu, with d = alphaA - alphaB on the overlap.
  Arithmetic,
  /// ⨏ d/eps dmu. Equal to Arithmetic when d is constant on the overlap, and not
  /// dominated by low-mass points whose potentials are poorly determined.
  Geometric,
};

/// log q(J1,J2) = log ⨏_{J1∩JB} e^{(αA1-αB)/eps} dmu + log ⨏_{J2∩JB} e^{(αB-αA2)/eps} dmu
/// (Arithmetic) or the same with mu-averages of the exponents (Geometric).
GlueGraph buildGlueGraph(const CellState& state, const PartitionSet& p, const DiscreteMeasure& mu,
                         double eps, Index root = 0, GlueAverage average = GlueAverage::Geometric);

struct HelmholtzFit {
  std::vector<double> V;
  double objective = 0.0;     // sum of squared edge residuals
  double normalResidual = 0.0;  // max-norm residual of the normal equations
  int components = 1;
  bool disconnected = false;
};

/// Minimizes sum_e ((V(to) - V(from)) - logq_e)^2 with V(root) = 0, one gauge per
/// connected component.
HelmholtzFit helmholtzFit(const GlueGraph& graph);

double glueObjective(const GlueGraph& graph, const std::vector<double>& V);

/// Potential obtained by summing weights along breadth-first paths from the root.
std::vector<double> rootPathPotential(const GlueGraph& graph);

struct GlueOptions {
  GlueAverage average = GlueAverage::Geometric;
  /// Exact best response to the glued X potential instead of the averaged cell potentials.
  bool polishY = true;
};

struct GluedDuals {
  std::vector<double> alpha;  // on X
  std::vector<double> beta;   // on Y
  std::size_t fallbackPoints = 0;  // Y points without A-cell mass, filled by best response
};

GluedDuals glueDuals(const CellState& state, const std::vector<double>& V, const PartitionSet& p,
                     const ProblemData& data, const GlueOptions& options = {});

/// beta(y) = eps log(nu^(y)/nu(y)) - eps log sum_x exp((alpha(x) - c(x,y))/eps) mu(x) with
/// nu^ = nu, evaluated blockwise over basic cells with a distance bound to skip
/// negligible blocks (exact when `cells` is null).
std::vector<double> bestResponseBeta(const std::vector<double>& alpha, const DiscreteMeasure& mu,
                                     const DiscreteMeasure& nu, const CostOracle& cost, double eps,
                                     const BasicPartition* cells = nullptr);

/// J(u, v) over the full product. With `cells`, blocks whose bound is below
/// 1e-22 nu(y) contribute their bound instead, which keeps the value a lower bound.
double globalDualScore(const std::vector<double>& alpha, const std::vector<double>& beta,
                       const DiscreteMeasure& mu, const DiscreteMeasure& nu, const CostOracle& cost,
                       double eps, double kernelMass, const BasicPartition* cells = nullptr);

struct Certificate {
  double primalScore = 0.0;
  double dualScore = 0.0;
  double kernelMass = 0.0;
  double relativePDGap = 0.0;
  double xMarginalL1 = 0.0;
  double yMarginalL1 = 0.0;
  std::optional<double> relativeDualScore;
  HelmholtzFit fit;
  GluedDuals duals;
};

/// (primal - dual) / (primal - ||K||).
double relativePDGap(double primal, double dual, double kernelMass);
/// (J_single - J_dd) / (J_dd - ||K||).
double relativeDualScore(double dualSingle, double dualDomdec, double kernelMass);

Certificate certificate(const CellState& state, const PartitionSet& p, const ProblemData& data,
                        const AssembledCoupling& primal, double kernelMass,
                        const GlueOptions& options = {},
                        std::optional<double> baselineDual = std::nullopt);

}  // namespace domdec
