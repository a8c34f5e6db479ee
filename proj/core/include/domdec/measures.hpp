#pragma once

// Value types shared by every solver layer: grids, discrete measures, sparse
// marginals, transport costs and the entropic scores (KL divergence, dual J).
//
// Dual variables are carried as log-potentials alpha = eps * log(u) throughout;
// scalings u = exp(alpha / eps) only ever appear inside kernel evaluations.

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <utility>
#include <vector>

namespace domdec {

using Index = std::uint32_t;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Neumaier-compensated accumulator; scores over large supports go through this.
class CompensatedSum {
 public:
  CompensatedSum& operator+=(double v) noexcept {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v)) {
      comp_ += (sum_ - t) + v;
    } else {
      comp_ += (v - t) + sum_;
    }
    sum_ = t;
    return *this;
  }
  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

double compensatedSum(std::span<const double> values) noexcept;

struct Point2 {
  double r = 0.0;
  double c = 0.0;
};

/// Square Cartesian grid with `side` points per axis; point (r, c) sits at
/// (r * spacing, c * spacing). Flat indices are row-major.
class GridGeometry {
 public:
  GridGeometry(int side, double spacing);

  int side() const noexcept { return side_; }
  double spacing() const noexcept { return spacing_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(side_) * side_; }
  int log2Side() const noexcept;

  Point2 point(Index flat) const noexcept {
    return {static_cast<double>(flat / side_) * spacing_,
            static_cast<double>(flat % side_) * spacing_};
  }
  Index flat(int row, int col) const noexcept {
    return static_cast<Index>(row * side_ + col);
  }

 private:
  int side_;
  double spacing_;
};

bool isPowerOfTwo(long long v) noexcept;

/// Nonnegative finite weights over an index set (pixels of a grid, or abstract points).
class DiscreteMeasure {
 public:
  DiscreteMeasure() = default;
  explicit DiscreteMeasure(std::vector<double> weights);

  static DiscreteMeasure uniform(std::size_t n);

  std::size_t size() const noexcept { return weights_.size(); }
  double operator[](std::size_t i) const noexcept { return weights_[i]; }
  const std::vector<double>& weights() const noexcept { return weights_; }
  double totalMass() const noexcept { return total_; }
  bool isProbability(double tol = 1e-12) const noexcept;

  DiscreteMeasure normalized() const;
  /// Adds floorTotal / n to every weight and renormalizes to unit mass.
  DiscreteMeasure withMassFloor(double floorTotal = 1e-9) const;

 private:
  std::vector<double> weights_;
  double total_ = 0.0;
};

/// Sparse nonnegative vector over Y indices, entries sorted by index.
struct SparseMarginal {
  std::vector<Index> index;
  std::vector<double> mass;

  std::size_t size() const noexcept { return index.size(); }
  bool empty() const noexcept { return index.empty(); }
  double totalMass() const noexcept;
  double at(Index y) const noexcept;  // 0 when absent

  static SparseMarginal fromDense(std::span<const double> dense, double scale = 1.0);
  /// Pointwise sum of sorted marginals.
  static SparseMarginal sum(std::span<const SparseMarginal* const> parts);
};

/// Transport cost c(x, y): squared Euclidean between two point clouds (grids,
/// 1D discretizations) or an explicit dense matrix for hand-built instances.
class CostOracle {
 public:
  static CostOracle grid(const GridGeometry& x, const GridGeometry& y);
  static CostOracle squaredEuclidean(std::vector<Point2> xs, std::vector<Point2> ys);
  static CostOracle dense(Eigen::MatrixXd matrix);

  std::size_t xSize() const noexcept { return xs_.empty() ? static_cast<std::size_t>(matrix_.rows()) : xs_.size(); }
  std::size_t ySize() const noexcept { return ys_.empty() ? static_cast<std::size_t>(matrix_.cols()) : ys_.size(); }
  bool isDense() const noexcept { return dense_; }
  bool isGrid() const noexcept { return gridSide_ > 0; }

  double operator()(Index x, Index y) const noexcept {
    if (dense_) return matrix_(x, y);
    const double dr = xs_[x].r - ys_[y].r;
    const double dc = xs_[x].c - ys_[y].c;
    return dr * dr + dc * dc;
  }

  /// sup of c over the product of supports.
  double supBound() const noexcept { return supBound_; }

  const std::vector<Point2>& xPoints() const noexcept { return xs_; }
  const std::vector<Point2>& yPoints() const noexcept { return ys_; }

  /// ||K|| = sum_{x,y} exp(-c/eps) mu(x) nu(y).
  double kernelMass(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double eps) const;

 private:
  CostOracle() = default;
  void computeSupBound();

  bool dense_ = false;
  int gridSide_ = 0;       // > 0 when both sides are the same grid
  double gridSpacing_ = 0.0;
  Eigen::MatrixXd matrix_;
  std::vector<Point2> xs_;
  std::vector<Point2> ys_;
  double supBound_ = 0.0;
};

/// Coordinate-form coupling, entries sorted by (x, y).
struct SparseCoupling {
  struct Entry {
    Index x;
    Index y;
    double mass;
  };
  std::size_t xSize = 0;
  std::size_t ySize = 0;
  std::vector<Entry> entries;

  void sortEntries();
  double totalMass() const noexcept;
  std::vector<double> xMarginal() const;
  std::vector<double> yMarginal() const;

  static SparseCoupling fromDense(const Eigen::MatrixXd& dense);
  Eigen::MatrixXd toDense() const;
};

/// phi(s) = s log s - s + 1 with phi(0) = 1. Throws DomainError for s < 0 or non-finite s.
double phi(double s);

/// KL(pi | ref) = sum phi(dpi/dref) dref over the union of supports. +inf when pi
/// charges a point outside supp(ref). Throws ConsistencyError on mismatched shapes.
double klDivergence(const SparseCoupling& pi, const SparseCoupling& ref);
double klDivergence(const Eigen::MatrixXd& pi, const Eigen::MatrixXd& ref);

/// Reference measure K = exp(-c/eps) (mu ⊗ nu) materialized densely (small instances only).
Eigen::MatrixXd denseKernel(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                            const CostOracle& cost, double eps);

/// sum over supp(pi) of [pi log(pi / K) - pi]; add ||K|| to obtain KL(pi | K).
double klToKernelWithoutMass(const SparseCoupling& pi, const DiscreteMeasure& mu,
                             const DiscreteMeasure& nu, const CostOracle& cost, double eps);

/// Dual objective J(u, v) for u = exp(alpha/eps), v = exp(beta/eps) over mu, nu,
/// evaluated exactly over the full product. Returns -inf when a potential is
/// non-finite on a point of positive mass.
double dualScore(std::span<const double> alpha, std::span<const double> beta,
                 const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                 const CostOracle& cost, double eps, double kernelMass);

}  // namespace domdec
