#include "domdec/sinkhorn.hpp"

#include "domdec/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

namespace domdec {

namespace {

bool sameMass(double a, double b, double rel) {
  return std::abs(a - b) <= rel * std::max({std::abs(a), std::abs(b), 1e-300});
}

void checkProblem(const SinkhornProblem& p, std::span<const double> initAlpha) {
  if (p.cost == nullptr) throw ConfigError("sinkhorn problem without cost");
  if (!(p.eps > 0.0) || !std::isfinite(p.eps)) throw DomainError("eps must be positive");
  const std::size_t nx = p.rows.size(), ny = p.cols.size();
  if (nx == 0 || ny == 0) throw ConsistencyError("sinkhorn problem with empty support");
  if (p.muHat.size() != nx || p.muRef.size() != nx || p.nuHat.size() != ny ||
      p.nuRef.size() != ny || initAlpha.size() != nx) {
    throw ConsistencyError("sinkhorn problem arrays have inconsistent sizes");
  }
  for (std::size_t i = 0; i < nx; ++i) {
    if (!(p.muHat[i] > 0.0) || !(p.muRef[i] > 0.0)) {
      throw DomainError("sinkhorn rows must carry positive mass");
    }
    if (!std::isfinite(initAlpha[i])) throw DomainError("initial potential is not finite");
  }
  for (std::size_t j = 0; j < ny; ++j) {
    if (!(p.nuHat[j] > 0.0) || !(p.nuRef[j] > 0.0)) {
      throw DomainError("sinkhorn columns must carry positive mass");
    }
  }
  const double mx = compensatedSum(p.muHat), my = compensatedSum(p.nuHat);
  if (!sameMass(mx, my, 1e-9)) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "marginal totals differ: " << mx << " vs " << my;
    throw ConsistencyError(msg.str());
  }
}

std::vector<double> logOf(const std::vector<double>& v) {
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::log(v[i]);
  return out;
}

// Absorbed variables a = alpha + eps log mu, b = beta + eps log nu, so that
// pi(x,y) = exp((a(x) + b(y) - c(x,y)) / eps) * ut(x) * vt(y) with the stored
// stabilized kernel G = exp((a + b - c)/eps).
class Stabilized {
 public:
  Stabilized(const SinkhornProblem& p, std::span<const double> initAlpha, double theta)
      : p_(p), eps_(p.eps), theta_(theta), nx_(p.rows.size()), ny_(p.cols.size()) {
    logMuHat_ = logOf(p.muHat);
    logNuHat_ = logOf(p.nuHat);
    logMuRef_ = logOf(p.muRef);
    logNuRef_ = logOf(p.nuRef);
    a_.resize(nx_);
    for (std::size_t i = 0; i < nx_; ++i) a_[i] = initAlpha[i] + eps_ * logMuRef_[i];
    b_.assign(ny_, 0.0);
    ut_.assign(nx_, 1.0);
    vt_.assign(ny_, 1.0);
  }

  // Log-domain Y-iteration, then truncation. Returns the number of Y-iterations
  // spent, or -1 when a row stays empty.
  int rebuild() {
    logY();
    int spent = 1;
    if (!truncate()) {
      logX();
      logY();
      ++spent;
      if (!truncate()) return -1;
    }
    return spent;
  }

  void absorb() {
    for (std::size_t i = 0; i < nx_; ++i) a_[i] += eps_ * std::log(ut_[i]);
    for (std::size_t j = 0; j < ny_; ++j) b_[j] += eps_ * std::log(vt_[j]);
    std::fill(ut_.begin(), ut_.end(), 1.0);
    std::fill(vt_.begin(), vt_.end(), 1.0);
  }

  bool needsAbsorption(double bound) const {
    const double hi = std::exp(bound), lo = std::exp(-bound);
    for (double u : ut_) {
      if (!(u <= hi && u >= lo)) return true;
    }
    for (double v : vt_) {
      if (!(v <= hi && v >= lo)) return true;
    }
    return false;
  }

  // s(x) = sum_y G(x,y) vt(y); returns false if some s(x) vanished.
  bool rowSums(std::vector<double>& s) const {
    s.assign(nx_, 0.0);
    for (std::size_t i = 0; i < nx_; ++i) {
      double acc = 0.0;
      for (std::size_t e = rowStart_[i]; e < rowStart_[i + 1]; ++e) acc += g_[e] * vt_[col_[e]];
      s[i] = acc;
      if (!(acc > 0.0) || !std::isfinite(acc)) return false;
    }
    return true;
  }

  double xError(const std::vector<double>& s, StopNorm norm) const {
    double err = 0.0;
    for (std::size_t i = 0; i < nx_; ++i) {
      const double d = std::abs(ut_[i] * s[i] - p_.muHat[i]);
      err = norm == StopNorm::L1 ? err + d : std::max(err, d);
    }
    return err;
  }

  void xIteration(const std::vector<double>& s) {
    for (std::size_t i = 0; i < nx_; ++i) ut_[i] = p_.muHat[i] / s[i];
  }

  bool yIteration() {
    colAcc_.assign(ny_, 0.0);
    for (std::size_t i = 0; i < nx_; ++i) {
      const double u = ut_[i];
      for (std::size_t e = rowStart_[i]; e < rowStart_[i + 1]; ++e) colAcc_[col_[e]] += g_[e] * u;
    }
    for (std::size_t j = 0; j < ny_; ++j) {
      if (!(colAcc_[j] > 0.0) || !std::isfinite(colAcc_[j])) return false;
      vt_[j] = p_.nuHat[j] / colAcc_[j];
    }
    return true;
  }

  std::size_t entries() const noexcept { return g_.size(); }

  void finish(SinkhornResult& r) const {
    r.alpha.resize(nx_);
    r.beta.resize(ny_);
    for (std::size_t i = 0; i < nx_; ++i) {
      r.alpha[i] = a_[i] + eps_ * std::log(ut_[i]) - eps_ * logMuRef_[i];
    }
    for (std::size_t j = 0; j < ny_; ++j) {
      r.beta[j] = b_[j] + eps_ * std::log(vt_[j]) - eps_ * logNuRef_[j];
    }
    auto& c = r.coupling;
    c.rows = p_.rows;
    c.cols = p_.cols;
    c.epsilon = eps_;
    c.rowStart = rowStart_;
    c.colIndex = col_;
    c.values.resize(g_.size());
    for (std::size_t i = 0; i < nx_; ++i) {
      for (std::size_t e = rowStart_[i]; e < rowStart_[i + 1]; ++e) {
        c.values[e] = g_[e] * ut_[i] * vt_[col_[e]];
      }
    }
  }

 private:
  double cost(std::size_t i, std::size_t j) const { return (*p_.cost)(p_.rows[i], p_.cols[j]); }

  void logY() {
    std::vector<double> m(ny_, -kInf), s(ny_, 0.0);
    for (std::size_t i = 0; i < nx_; ++i) {
      const double ai = a_[i];
      for (std::size_t j = 0; j < ny_; ++j) {
        const double v = (ai - cost(i, j)) / eps_;
        if (v > m[j]) {
          s[j] = s[j] * std::exp(m[j] - v) + 1.0;
          m[j] = v;
        } else {
          s[j] += std::exp(v - m[j]);
        }
      }
    }
    for (std::size_t j = 0; j < ny_; ++j) {
      b_[j] = eps_ * logNuHat_[j] - eps_ * (m[j] + std::log(s[j]));
    }
    std::fill(vt_.begin(), vt_.end(), 1.0);
  }

  void logX() {
    for (std::size_t i = 0; i < nx_; ++i) {
      double m = -kInf, s = 0.0;
      for (std::size_t j = 0; j < ny_; ++j) {
        const double v = (b_[j] - cost(i, j)) / eps_;
        if (v > m) {
          s = s * std::exp(m - v) + 1.0;
          m = v;
        } else {
          s += std::exp(v - m);
        }
      }
      a_[i] = eps_ * logMuHat_[i] - eps_ * (m + std::log(s));
    }
    std::fill(ut_.begin(), ut_.end(), 1.0);
  }

  // Keeps pi(x,y) >= theta * muHat(x) * nuHat(y) for the current (absorbed) state.
  bool truncate() {
    rowStart_.assign(nx_ + 1, 0);
    col_.clear();
    g_.clear();
    const double logTheta = theta_ > 0.0 ? std::log(theta_) : -kInf;
    bool ok = true;
    std::vector<char> colHit(ny_, 0);
    for (std::size_t i = 0; i < nx_; ++i) {
      for (std::size_t j = 0; j < ny_; ++j) {
        const double lg = (a_[i] + b_[j] - cost(i, j)) / eps_;
        if (lg < logTheta + logMuHat_[i] + logNuHat_[j]) continue;
        const double g = std::exp(lg);
        if (!(g > 0.0)) continue;
        col_.push_back(static_cast<Index>(j));
        g_.push_back(g);
        colHit[j] = 1;
      }
      rowStart_[i + 1] = g_.size();
      if (rowStart_[i + 1] == rowStart_[i]) ok = false;
    }
    if (std::find(colHit.begin(), colHit.end(), 0) != colHit.end()) ok = false;
    return ok;
  }

  const SinkhornProblem& p_;
  double eps_;
  double theta_;
  std::size_t nx_, ny_;
  std::vector<double> logMuHat_, logNuHat_, logMuRef_, logNuRef_;
  std::vector<double> a_, b_, ut_, vt_;
  std::vector<std::size_t> rowStart_;
  std::vector<Index> col_;
  std::vector<double> g_;
  std::vector<double> colAcc_;
};

double threshold(const SinkhornProblem& p, double errTol, StopNorm norm) {
  return norm == StopNorm::L1 ? compensatedSum(p.muHat) * errTol : errTol;
}

SinkhornResult solveStabilized(const SinkhornProblem& p, std::span<const double> initAlpha,
                               double errTol, const SinkhornConfig& cfg) {
  SinkhornResult r;
  Stabilized st(p, initAlpha, cfg.theta);
  const double thr = threshold(p, errTol, cfg.norm);
  const int checkEvery = std::max(cfg.checkEvery, 1);
  int k = st.rebuild();
  if (k < 0) {
    r.status = SinkhornStatus::Infeasible;
    r.iterations = 2;
    st.finish(r);
    return r;
  }
  r.kernelEntries = st.entries();
  std::vector<double> s;
  double err = kInf;
  for (;;) {
    if (!st.rowSums(s)) {
      r.status = SinkhornStatus::Infeasible;
      break;
    }
    if (k == 1 || k % checkEvery == 0 || k >= cfg.maxIterations) {
      err = st.xError(s, cfg.norm);
      if (err <= thr) {
        r.status = SinkhornStatus::Converged;
        break;
      }
      if (k >= cfg.maxIterations) {
        r.status = SinkhornStatus::MaxIterations;
        break;
      }
    }
    st.xIteration(s);
    if (st.needsAbsorption(cfg.absorptionBound)) {
      st.absorb();
      const int spent = st.rebuild();
      ++r.absorptions;
      if (spent < 0) {
        r.status = SinkhornStatus::Infeasible;
        k += 2;
        break;
      }
      k += spent;
      r.kernelEntries = std::max(r.kernelEntries, st.entries());
      continue;
    }
    if (!st.yIteration()) {
      r.status = SinkhornStatus::Infeasible;
      break;
    }
    ++k;
  }
  r.iterations = k;
  r.xMarginalError = err;
  st.finish(r);
  return r;
}

// Semi-dual Newton: z = a/eps on rows, b the exact Y best response.
class NewtonSolver {
 public:
  NewtonSolver(const SinkhornProblem& p, std::span<const double> initAlpha)
      : p_(p), nx_(p.rows.size()), ny_(p.cols.size()) {
    ceps_.resize(static_cast<Eigen::Index>(nx_), static_cast<Eigen::Index>(ny_));
    for (std::size_t i = 0; i < nx_; ++i) {
      for (std::size_t j = 0; j < ny_; ++j) {
        ceps_(i, j) = (*p.cost)(p.rows[i], p.cols[j]) / p.eps;
      }
    }
    logNuHat_ = logOf(p.nuHat);
    logMuRef_ = logOf(p.muRef);
    logNuRef_ = logOf(p.nuRef);
    z_.resize(static_cast<Eigen::Index>(nx_));
    for (std::size_t i = 0; i < nx_; ++i) z_[i] = initAlpha[i] / p.eps + logMuRef_[i];
    muHat_ = Eigen::Map<const Eigen::VectorXd>(p.muHat.data(), static_cast<Eigen::Index>(nx_));
  }

  // Fills pi and bz for the given z; returns the concave semi-dual value.
  double evaluate(const Eigen::VectorXd& z, Eigen::MatrixXd& pi, Eigen::VectorXd& bz) const {
    pi.resize(static_cast<Eigen::Index>(nx_), static_cast<Eigen::Index>(ny_));
    bz.resize(static_cast<Eigen::Index>(ny_));
    CompensatedSum f;
    for (std::size_t i = 0; i < nx_; ++i) f += p_.muHat[i] * z[i];
    for (std::size_t j = 0; j < ny_; ++j) {
      double m = -kInf;
      for (std::size_t i = 0; i < nx_; ++i) m = std::max(m, z[i] - ceps_(i, j));
      double s = 0.0;
      for (std::size_t i = 0; i < nx_; ++i) s += std::exp(z[i] - ceps_(i, j) - m);
      bz[j] = logNuHat_[j] - (m + std::log(s));
      for (std::size_t i = 0; i < nx_; ++i) pi(i, j) = std::exp(z[i] + bz[j] - ceps_(i, j));
      f += p_.nuHat[j] * bz[j];
    }
    return f.value();
  }

  double error(const Eigen::MatrixXd& pi, StopNorm norm, Eigen::VectorXd* residual) const {
    Eigen::VectorXd r = muHat_ - pi.rowwise().sum();
    if (residual) *residual = r;
    return norm == StopNorm::L1 ? r.cwiseAbs().sum() : r.cwiseAbs().maxCoeff();
  }

  SinkhornResult run(double thr, StopNorm norm, int maxSteps) {
    SinkhornResult r;
    Eigen::MatrixXd pi;
    Eigen::VectorXd bz, residual;
    double f = evaluate(z_, pi, bz);
    double err = error(pi, norm, &residual);
    int steps = 0;
    int polish = 0;
    const Eigen::Index n = static_cast<Eigen::Index>(nx_);
    while (nx_ > 1 && steps < maxSteps) {
      if (err <= thr && polish >= 2) break;
      // Laplacian of the row-coupling graph, assembled off-diagonal first.
      Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
      for (std::size_t j = 0; j < ny_; ++j) {
        const double inv = 1.0 / p_.nuHat[j];
        for (Eigen::Index x = 0; x < n; ++x) {
          for (Eigen::Index y = x + 1; y < n; ++y) {
            const double w = pi(x, j) * pi(y, j) * inv;
            h(x, y) -= w;
            h(y, x) -= w;
          }
        }
      }
      for (Eigen::Index x = 0; x < n; ++x) h(x, x) = -(h.row(x).sum() - h(x, x));
      Eigen::VectorXd delta = Eigen::VectorXd::Zero(n);
      delta.head(n - 1) = h.topLeftCorner(n - 1, n - 1).ldlt().solve(residual.head(n - 1));
      if (!delta.allFinite()) break;
      const double slope = residual.dot(delta);
      Eigen::MatrixXd piTry;
      Eigen::VectorXd bzTry, resTry;
      bool accepted = false;
      for (double t = 1.0; t > 1e-12; t *= 0.5) {
        const Eigen::VectorXd zTry = z_ + t * delta;
        const double fTry = evaluate(zTry, piTry, bzTry);
        const double errTry = error(piTry, norm, &resTry);
        if (fTry >= f + 1e-4 * t * slope || errTry < err) {
          z_ = zTry;
          f = fTry;
          pi.swap(piTry);
          bz.swap(bzTry);
          residual.swap(resTry);
          if (err <= thr) ++polish;
          const bool improved = errTry < err;
          err = errTry;
          accepted = true;
          if (!improved && err <= thr) polish = 2;
          break;
        }
      }
      ++steps;
      if (!accepted) break;
    }
    r.status = err <= thr ? SinkhornStatus::Converged : SinkhornStatus::MaxIterations;
    r.iterations = std::max(steps, 1);
    r.xMarginalError = err;
    r.alpha.resize(nx_);
    r.beta.resize(ny_);
    for (std::size_t i = 0; i < nx_; ++i) r.alpha[i] = p_.eps * (z_[i] - logMuRef_[i]);
    for (std::size_t j = 0; j < ny_; ++j) r.beta[j] = p_.eps * (bz[j] - logNuRef_[j]);
    auto& c = r.coupling;
    c.rows = p_.rows;
    c.cols = p_.cols;
    c.epsilon = p_.eps;
    c.rowStart.assign(nx_ + 1, 0);
    for (std::size_t i = 0; i < nx_; ++i) {
      for (std::size_t j = 0; j < ny_; ++j) {
        if (pi(i, j) > 0.0) {
          c.colIndex.push_back(static_cast<Index>(j));
          c.values.push_back(pi(i, j));
        }
      }
      c.rowStart[i + 1] = c.values.size();
    }
    r.kernelEntries = c.values.size();
    return r;
  }

 private:
  const SinkhornProblem& p_;
  std::size_t nx_, ny_;
  Eigen::MatrixXd ceps_;
  std::vector<double> logNuHat_, logMuRef_, logNuRef_;
  Eigen::VectorXd z_;
  Eigen::VectorXd muHat_;
};

}  // namespace

const char* statusName(SinkhornStatus s) noexcept {
  switch (s) {
    case SinkhornStatus::Converged:
      return "converged";
    case SinkhornStatus::Infeasible:
      return "infeasible";
    case SinkhornStatus::MaxIterations:
      return "max-iterations";
  }
  return "unknown";
}

KernelBlock buildKernelBlock(std::vector<Index> rows, std::vector<Index> cols,
                             const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                             const CostOracle& cost, double eps) {
  if (!(eps > 0.0)) throw DomainError("eps must be positive");
  KernelBlock k;
  k.rows = std::move(rows);
  k.cols = std::move(cols);
  k.epsilon = eps;
  k.rowStart.assign(k.rows.size() + 1, 0);
  for (std::size_t i = 0; i < k.rows.size(); ++i) {
    for (std::size_t j = 0; j < k.cols.size(); ++j) {
      const double v = std::exp(-cost(k.rows[i], k.cols[j]) / eps) * mu[k.rows[i]] * nu[k.cols[j]];
      if (v > 0.0) {
        k.colIndex.push_back(static_cast<Index>(j));
        k.values.push_back(v);
      }
    }
    k.rowStart[i + 1] = k.values.size();
  }
  return k;
}

TruncationOutcome truncateKernel(const KernelBlock& block, std::span<const double> alpha,
                                 std::span<const double> beta, double theta,
                                 std::span<const double> rowScale,
                                 std::span<const double> colScale) {
  if (theta < 0.0 || theta >= 1.0) throw DomainError("theta must lie in [0, 1)");
  if (alpha.size() != block.rows.size() || beta.size() != block.cols.size()) {
    throw ConsistencyError("truncateKernel: potential sizes do not match the block");
  }
  TruncationOutcome out;
  auto& t = out.block;
  t.rows = block.rows;
  t.cols = block.cols;
  t.epsilon = block.epsilon;
  t.rowStart.assign(block.rows.size() + 1, 0);
  std::vector<char> colHit(block.cols.size(), 0);
  for (std::size_t i = 0; i < block.rows.size(); ++i) {
    const double rs = rowScale.empty() ? 1.0 : rowScale[i];
    for (std::size_t e = block.rowStart[i]; e < block.rowStart[i + 1]; ++e) {
      const Index j = block.colIndex[e];
      const double cs = colScale.empty() ? 1.0 : colScale[j];
      const double scaled = std::exp((alpha[i] + beta[j]) / block.epsilon) * block.values[e];
      if (scaled >= theta * rs * cs && block.values[e] > 0.0) {
        t.colIndex.push_back(j);
        t.values.push_back(block.values[e]);
        colHit[j] = 1;
      }
    }
    t.rowStart[i + 1] = t.values.size();
    if (t.rowStart[i + 1] == t.rowStart[i]) out.emptyRowOrColumn = true;
  }
  if (std::find(colHit.begin(), colHit.end(), 0) != colHit.end()) out.emptyRowOrColumn = true;
  return out;
}

SinkhornResult sinkhornSolve(const SinkhornProblem& problem, std::span<const double> initAlpha,
                             double errTol, const SinkhornConfig& config) {
  checkProblem(problem, initAlpha);
  if (!(errTol > 0.0)) throw DomainError("errTol must be positive");
  if (config.exact) {
    NewtonSolver newton(problem, initAlpha);
    return newton.run(threshold(problem, errTol, config.norm), config.norm,
                      std::max(config.maxIterations, 1));
  }
  return solveStabilized(problem, initAlpha, errTol, config);
}

std::pair<std::vector<double>, std::vector<double>> rescalePotentials(
    std::vector<double> alpha, std::vector<double> beta, double epsOld, double epsNew) {
  if (!(epsOld > 0.0) || !(epsNew > 0.0)) throw DomainError("eps must be positive");
  return {std::move(alpha), std::move(beta)};
}

double rescaleScaling(double u, double epsOld, double epsNew) {
  if (!(epsOld > 0.0) || !(epsNew > 0.0)) throw DomainError("eps must be positive");
  if (epsOld == epsNew) return u;
  return std::exp(std::log(u) * epsOld / epsNew);
}

SinkhornProblem globalProblem(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                              const CostOracle& cost, double eps) {
  if (mu.size() != cost.xSize() || nu.size() != cost.ySize()) {
    throw ConsistencyError("measures do not match the cost");
  }
  SinkhornProblem p;
  p.cost = &cost;
  p.eps = eps;
  for (std::size_t x = 0; x < mu.size(); ++x) {
    if (mu[x] > 0.0) {
      p.rows.push_back(static_cast<Index>(x));
      p.muHat.push_back(mu[x]);
      p.muRef.push_back(mu[x]);
    }
  }
  for (std::size_t y = 0; y < nu.size(); ++y) {
    if (nu[y] > 0.0) {
      p.cols.push_back(static_cast<Index>(y));
      p.nuHat.push_back(nu[y]);
      p.nuRef.push_back(nu[y]);
    }
  }
  return p;
}

ReferenceResult referenceSolve(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                               const CostOracle& cost, std::vector<double> ladder, double tol,
                               int maxIterations, double ladderTheta) {
  if (ladder.empty()) throw ConfigError("empty eps ladder");
  ReferenceResult out;
  out.ladder = ladder;
  out.problem = globalProblem(mu, nu, cost, ladder.front());
  SinkhornConfig cfg;
  cfg.norm = StopNorm::Linf;
  cfg.maxIterations = maxIterations;
  std::vector<double> alpha(out.problem.rows.size(), 0.0);
  auto stage = [&](double eps, double theta) {
    out.problem.eps = eps;
    cfg.theta = theta;
    out.result = sinkhornSolve(out.problem, alpha, tol, cfg);
    out.totalIterations += out.result.iterations;
    if (out.result.status != SinkhornStatus::Converged) {
      std::ostringstream msg;
      msg << "reference sinkhorn " << statusName(out.result.status) << " at eps=" << eps;
      throw ConvergenceError(msg.str(), out.result.xMarginalError);
    }
    alpha = out.result.alpha;
  };
  for (double eps : ladder) stage(eps, ladderTheta);
  if (ladderTheta > 0.0) stage(ladder.back(), 0.0);
  out.alphaFull.assign(mu.size(), 0.0);
  out.betaFull.assign(nu.size(), 0.0);
  for (std::size_t i = 0; i < out.problem.rows.size(); ++i) {
    out.alphaFull[out.problem.rows[i]] = out.result.alpha[i];
  }
  for (std::size_t j = 0; j < out.problem.cols.size(); ++j) {
    out.betaFull[out.problem.cols[j]] = out.result.beta[j];
  }
  return out;
}

SparseCoupling toSparseCoupling(const KernelBlock& block, std::size_t xSize, std::size_t ySize) {
  SparseCoupling c;
  c.xSize = xSize;
  c.ySize = ySize;
  c.entries.reserve(block.values.size());
  for (std::size_t i = 0; i < block.rows.size(); ++i) {
    for (std::size_t e = block.rowStart[i]; e < block.rowStart[i + 1]; ++e) {
      c.entries.push_back({block.rows[i], block.cols[block.colIndex[e]], block.values[e]});
    }
  }
  c.sortEntries();
  return c;
}

}  // namespace domdec
