#include "domdec/measures.hpp"

#include "domdec/errors.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <sstream>
#include <string>

namespace domdec {

double compensatedSum(std::span<const double> values) noexcept {
  CompensatedSum acc;
  for (double v : values) acc += v;
  return acc.value();
}

bool isPowerOfTwo(long long v) noexcept { return v > 0 && (v & (v - 1)) == 0; }

GridGeometry::GridGeometry(int side, double spacing) : side_(side), spacing_(spacing) {
  if (!isPowerOfTwo(side)) {
    throw ConfigError("grid side must be a power of two, got " + std::to_string(side));
  }
  if (!(spacing > 0.0) || !std::isfinite(spacing)) {
    throw ConfigError("grid spacing must be positive and finite");
  }
}

int GridGeometry::log2Side() const noexcept {
  return std::countr_zero(static_cast<unsigned>(side_));
}

DiscreteMeasure::DiscreteMeasure(std::vector<double> weights) : weights_(std::move(weights)) {
  CompensatedSum acc;
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    const double w = weights_[i];
    if (!std::isfinite(w) || w < 0.0) {
      std::ostringstream msg;
      msg << "measure weight " << i << " is negative or non-finite (" << w << ")";
      throw DomainError(msg.str());
    }
    acc += w;
  }
  total_ = acc.value();
}

DiscreteMeasure DiscreteMeasure::uniform(std::size_t n) {
  return DiscreteMeasure(std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

bool DiscreteMeasure::isProbability(double tol) const noexcept {
  return std::abs(total_ - 1.0) <= tol;
}

DiscreteMeasure DiscreteMeasure::normalized() const {
  if (!(total_ > 0.0)) throw DomainError("cannot normalize a measure with zero mass");
  std::vector<double> w(weights_);
  for (double& v : w) v /= total_;
  return DiscreteMeasure(std::move(w));
}

DiscreteMeasure DiscreteMeasure::withMassFloor(double floorTotal) const {
  if (weights_.empty()) throw DomainError("empty measure");
  const double base = total_ > 0.0 ? total_ : 1.0;
  std::vector<double> w(weights_);
  const double add = floorTotal * base / static_cast<double>(w.size());
  for (double& v : w) v += add;
  return DiscreteMeasure(std::move(w)).normalized();
}

double SparseMarginal::totalMass() const noexcept { return compensatedSum(mass); }

double SparseMarginal::at(Index y) const noexcept {
  const auto it = std::lower_bound(index.begin(), index.end(), y);
  if (it == index.end() || *it != y) return 0.0;
  return mass[static_cast<std::size_t>(it - index.begin())];
}

SparseMarginal SparseMarginal::fromDense(std::span<const double> dense, double scale) {
  SparseMarginal out;
  for (std::size_t y = 0; y < dense.size(); ++y) {
    const double m = dense[y] * scale;
    if (m > 0.0) {
      out.index.push_back(static_cast<Index>(y));
      out.mass.push_back(m);
    }
  }
  return out;
}

SparseMarginal SparseMarginal::sum(std::span<const SparseMarginal* const> parts) {
  SparseMarginal out;
  if (parts.empty()) return out;
  if (parts.size() == 1) return *parts[0];
  // k-way merge; parts are few (<= 4 for grid partitions).
  std::vector<std::size_t> pos(parts.size(), 0);
  for (;;) {
    Index next = std::numeric_limits<Index>::max();
    bool any = false;
    for (std::size_t p = 0; p < parts.size(); ++p) {
      if (pos[p] < parts[p]->size()) {
        next = std::min(next, parts[p]->index[pos[p]]);
        any = true;
      }
    }
    if (!any) break;
    double m = 0.0;
    for (std::size_t p = 0; p < parts.size(); ++p) {
      if (pos[p] < parts[p]->size() && parts[p]->index[pos[p]] == next) {
        m += parts[p]->mass[pos[p]];
        ++pos[p];
      }
    }
    out.index.push_back(next);
    out.mass.push_back(m);
  }
  return out;
}

CostOracle CostOracle::grid(const GridGeometry& x, const GridGeometry& y) {
  CostOracle c;
  c.xs_.resize(x.size());
  c.ys_.resize(y.size());
  for (std::size_t i = 0; i < x.size(); ++i) c.xs_[i] = x.point(static_cast<Index>(i));
  for (std::size_t j = 0; j < y.size(); ++j) c.ys_[j] = y.point(static_cast<Index>(j));
  if (x.side() == y.side() && x.spacing() == y.spacing()) {
    c.gridSide_ = x.side();
    c.gridSpacing_ = x.spacing();
  }
  c.computeSupBound();
  return c;
}

CostOracle CostOracle::squaredEuclidean(std::vector<Point2> xs, std::vector<Point2> ys) {
  if (xs.empty() || ys.empty()) throw DomainError("empty point cloud");
  CostOracle c;
  c.xs_ = std::move(xs);
  c.ys_ = std::move(ys);
  c.computeSupBound();
  return c;
}

CostOracle CostOracle::dense(Eigen::MatrixXd matrix) {
  if (matrix.size() == 0) throw DomainError("empty cost matrix");
  if (!matrix.allFinite() || matrix.minCoeff() < 0.0) {
    throw DomainError("cost matrix must be finite and nonnegative");
  }
  CostOracle c;
  c.dense_ = true;
  c.matrix_ = std::move(matrix);
  c.supBound_ = c.matrix_.maxCoeff();
  return c;
}

void CostOracle::computeSupBound() {
  // Bounding boxes give the exact max squared distance for grids and a tight
  // bound for general clouds.
  auto box = [](const std::vector<Point2>& p) {
    Point2 lo{kInf, kInf}, hi{-kInf, -kInf};
    for (const auto& q : p) {
      lo.r = std::min(lo.r, q.r);
      lo.c = std::min(lo.c, q.c);
      hi.r = std::max(hi.r, q.r);
      hi.c = std::max(hi.c, q.c);
    }
    return std::pair{lo, hi};
  };
  const auto [xl, xh] = box(xs_);
  const auto [yl, yh] = box(ys_);
  const double dr = std::max(xh.r - yl.r, yh.r - xl.r);
  const double dc = std::max(xh.c - yl.c, yh.c - xl.c);
  supBound_ = dr * dr + dc * dc;
}

double CostOracle::kernelMass(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                              double eps) const {
  if (mu.size() != xSize() || nu.size() != ySize()) {
    throw ConsistencyError("kernelMass: measure sizes do not match the cost");
  }
  if (gridSide_ > 0) {
    // exp(-|x-y|^2/eps) factorizes over the axes: two 1D passes.
    const int n = gridSide_;
    std::vector<double> g(static_cast<std::size_t>(n));
    for (int d = 0; d < n; ++d) {
      const double dist = d * gridSpacing_;
      g[static_cast<std::size_t>(d)] = std::exp(-dist * dist / eps);
    }
    const auto& w = nu.weights();
    std::vector<double> rowPass(static_cast<std::size_t>(n) * n, 0.0);
    for (int r = 0; r < n; ++r) {
      for (int cx = 0; cx < n; ++cx) {
        double s = 0.0;
        for (int cy = 0; cy < n; ++cy) {
          s += g[static_cast<std::size_t>(std::abs(cx - cy))] * w[static_cast<std::size_t>(r * n + cy)];
        }
        rowPass[static_cast<std::size_t>(r * n + cx)] = s;
      }
    }
    CompensatedSum total;
    for (int rx = 0; rx < n; ++rx) {
      for (int cx = 0; cx < n; ++cx) {
        double s = 0.0;
        for (int ry = 0; ry < n; ++ry) {
          s += g[static_cast<std::size_t>(std::abs(rx - ry))] * rowPass[static_cast<std::size_t>(ry * n + cx)];
        }
        total += mu[static_cast<std::size_t>(rx * n + cx)] * s;
      }
    }
    return total.value();
  }
  CompensatedSum total;
  for (std::size_t x = 0; x < xSize(); ++x) {
    if (mu[x] == 0.0) continue;
    double s = 0.0;
    for (std::size_t y = 0; y < ySize(); ++y) {
      s += std::exp(-(*this)(static_cast<Index>(x), static_cast<Index>(y)) / eps) * nu[y];
    }
    total += mu[x] * s;
  }
  return total.value();
}

void SparseCoupling::sortEntries() {
  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    return a.x != b.x ? a.x < b.x : a.y < b.y;
  });
}

double SparseCoupling::totalMass() const noexcept {
  CompensatedSum acc;
  for (const auto& e : entries) acc += e.mass;
  return acc.value();
}

std::vector<double> SparseCoupling::xMarginal() const {
  std::vector<double> m(xSize, 0.0);
  for (const auto& e : entries) m[e.x] += e.mass;
  return m;
}

std::vector<double> SparseCoupling::yMarginal() const {
  std::vector<double> m(ySize, 0.0);
  for (const auto& e : entries) m[e.y] += e.mass;
  return m;
}

SparseCoupling SparseCoupling::fromDense(const Eigen::MatrixXd& dense) {
  SparseCoupling out;
  out.xSize = static_cast<std::size_t>(dense.rows());
  out.ySize = static_cast<std::size_t>(dense.cols());
  for (Eigen::Index x = 0; x < dense.rows(); ++x) {
    for (Eigen::Index y = 0; y < dense.cols(); ++y) {
      if (dense(x, y) != 0.0) {
        out.entries.push_back({static_cast<Index>(x), static_cast<Index>(y), dense(x, y)});
      }
    }
  }
  return out;
}

Eigen::MatrixXd SparseCoupling::toDense() const {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(xSize),
                                            static_cast<Eigen::Index>(ySize));
  for (const auto& e : entries) d(e.x, e.y) += e.mass;
  return d;
}

double phi(double s) {
  if (!std::isfinite(s) || s < 0.0) {
    throw DomainError("phi: argument must be finite and nonnegative");
  }
  if (s == 0.0) return 1.0;
  // s log s - s + 1 = (1+d) log1p(d) - d: no cancellation near s = 1.
  const double d = s - 1.0;
  return (1.0 + d) * std::log1p(d) - d;
}

namespace {

// Contribution phi(p/r) r of one point of the union support.
double klTerm(double p, double r) {
  if (p < 0.0 || r < 0.0) throw DomainError("klDivergence: negative entry");
  if (p == 0.0) return r;
  if (r == 0.0) return kInf;
  const double s = p / r;
  if (std::isfinite(s)) return r * phi(s);
  return p * (std::log(p) - std::log(r)) - p + r;
}

}  // namespace

double klDivergence(const SparseCoupling& pi, const SparseCoupling& ref) {
  if (pi.xSize != ref.xSize || pi.ySize != ref.ySize) {
    throw ConsistencyError("klDivergence: couplings live on different index spaces");
  }
  CompensatedSum acc;
  std::size_t i = 0, j = 0;
  auto before = [](const SparseCoupling::Entry& a, const SparseCoupling::Entry& b) {
    return a.x != b.x ? a.x < b.x : a.y < b.y;
  };
  while (i < pi.entries.size() || j < ref.entries.size()) {
    if (j == ref.entries.size() || (i < pi.entries.size() && before(pi.entries[i], ref.entries[j]))) {
      const double t = klTerm(pi.entries[i].mass, 0.0);
      if (std::isinf(t)) return kInf;
      acc += t;
      ++i;
    } else if (i == pi.entries.size() || before(ref.entries[j], pi.entries[i])) {
      acc += klTerm(0.0, ref.entries[j].mass);
      ++j;
    } else {
      acc += klTerm(pi.entries[i].mass, ref.entries[j].mass);
      ++i;
      ++j;
    }
  }
  return acc.value();
}

double klDivergence(const Eigen::MatrixXd& pi, const Eigen::MatrixXd& ref) {
  if (pi.rows() != ref.rows() || pi.cols() != ref.cols()) {
    throw ConsistencyError("klDivergence: couplings live on different index spaces");
  }
  CompensatedSum acc;
  for (Eigen::Index x = 0; x < pi.rows(); ++x) {
    for (Eigen::Index y = 0; y < pi.cols(); ++y) {
      const double t = klTerm(pi(x, y), ref(x, y));
      if (std::isinf(t)) return kInf;
      acc += t;
    }
  }
  return acc.value();
}

Eigen::MatrixXd denseKernel(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                            const CostOracle& cost, double eps) {
  const auto nx = static_cast<Eigen::Index>(mu.size());
  const auto ny = static_cast<Eigen::Index>(nu.size());
  Eigen::MatrixXd k(nx, ny);
  for (Eigen::Index x = 0; x < nx; ++x) {
    for (Eigen::Index y = 0; y < ny; ++y) {
      k(x, y) = std::exp(-cost(static_cast<Index>(x), static_cast<Index>(y)) / eps) *
                mu[static_cast<std::size_t>(x)] * nu[static_cast<std::size_t>(y)];
    }
  }
  return k;
}

double klToKernelWithoutMass(const SparseCoupling& pi, const DiscreteMeasure& mu,
                             const DiscreteMeasure& nu, const CostOracle& cost, double eps) {
  CompensatedSum acc;
  for (const auto& e : pi.entries) {
    if (e.mass <= 0.0) continue;
    const double m = mu[e.x], n = nu[e.y];
    if (m <= 0.0 || n <= 0.0) return kInf;
    const double logRatio = std::log(e.mass) - std::log(m) - std::log(n) + cost(e.x, e.y) / eps;
    acc += e.mass * logRatio - e.mass;
  }
  return acc.value();
}

double dualScore(std::span<const double> alpha, std::span<const double> beta,
                 const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                 const CostOracle& cost, double eps, double kernelMass) {
  if (alpha.size() != mu.size() || beta.size() != nu.size()) {
    throw ConsistencyError("dualScore: potential sizes do not match the measures");
  }
  CompensatedSum acc;
  for (std::size_t x = 0; x < mu.size(); ++x) {
    if (mu[x] == 0.0) continue;
    if (!std::isfinite(alpha[x])) return -kInf;
    acc += alpha[x] / eps * mu[x];
  }
  for (std::size_t y = 0; y < nu.size(); ++y) {
    if (nu[y] == 0.0) continue;
    if (!std::isfinite(beta[y])) return -kInf;
    acc += beta[y] / eps * nu[y];
  }
  CompensatedSum cross;
  for (std::size_t x = 0; x < mu.size(); ++x) {
    if (mu[x] == 0.0) continue;
    double s = 0.0;
    for (std::size_t y = 0; y < nu.size(); ++y) {
      if (nu[y] == 0.0) continue;
      s += std::exp((alpha[x] + beta[y] - cost(static_cast<Index>(x), static_cast<Index>(y))) / eps) * nu[y];
    }
    cross += s * mu[x];
  }
  const double value = acc.value() - cross.value() + kernelMass;
  return std::isnan(value) ? -kInf : value;
}

}  // namespace domdec
