#pragma once

// Independent reference computations for tests: plain-domain scaling loops and
// direct formula evaluations, sharing no code with the library.

#include <Eigen/Core>

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

namespace oracle {

/// sum p log(p/r) - p + r with 0 log 0 = 0, +inf when p > 0 = r.
inline double kl(const Eigen::MatrixXd& p, const Eigen::MatrixXd& r) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const double a = p.data()[i], b = r.data()[i];
    if (a == 0.0) {
      s += b;
    } else if (b == 0.0) {
      return INFINITY;
    } else {
      s += a * std::log(a / b) - a + b;
    }
  }
  return s;
}

/// exp(-C/eps) mu(x) nu(y).
inline Eigen::MatrixXd kernel(const Eigen::MatrixXd& cost, const std::vector<double>& mu,
                              const std::vector<double>& nu, double eps) {
  Eigen::MatrixXd k(cost.rows(), cost.cols());
  for (Eigen::Index x = 0; x < cost.rows(); ++x)
    for (Eigen::Index y = 0; y < cost.cols(); ++y)
      k(x, y) = std::exp(-cost(x, y) / eps) * mu[x] * nu[y];
  return k;
}

struct Scaling {
  Eigen::MatrixXd pi;
  Eigen::VectorXd u;  // plain scalings with pi = diag(u) K diag(v)
  Eigen::VectorXd v;
  int iterations = 0;
};

/// Plain-domain fixed point on a dense kernel K that already carries mu ⊗ nu:
/// v = nu / K^T u, u = mu / K v, until the row-sum error is below tol (Linf).
inline Scaling scaling(const Eigen::MatrixXd& k, const std::vector<double>& mu,
                       const std::vector<double>& nu, double tol = 1e-13, int maxIter = 1000000) {
  Scaling s;
  s.u = Eigen::VectorXd::Ones(k.rows());
  s.v = Eigen::VectorXd::Ones(k.cols());
  for (int it = 0; it < maxIter; ++it) {
    Eigen::VectorXd ktu = k.transpose() * s.u;
    for (Eigen::Index y = 0; y < k.cols(); ++y) s.v(y) = nu[y] / ktu(y);
    Eigen::VectorXd kv = k * s.v;
    double err = 0.0;
    for (Eigen::Index x = 0; x < k.rows(); ++x) err = std::max(err, std::abs(s.u(x) * kv(x) - mu[x]));
    s.iterations = it + 1;
    if (err <= tol) break;
    for (Eigen::Index x = 0; x < k.rows(); ++x) s.u(x) = mu[x] / kv(x);
  }
  // Finish on a Y update so that the column sums are exact even without convergence.
  Eigen::VectorXd ktu = k.transpose() * s.u;
  for (Eigen::Index y = 0; y < k.cols(); ++y) s.v(y) = nu[y] / ktu(y);
  s.pi = s.u.asDiagonal() * k * s.v.asDiagonal();
  return s;
}

/// Random strictly positive probability vector.
inline std::vector<double> randomProbability(std::mt19937_64& rng, int n, double lo = 0.05) {
  std::uniform_real_distribution<double> d(lo, 1.0);
  std::vector<double> w(n);
  double t = 0.0;
  for (auto& x : w) t += (x = d(rng));
  for (auto& x : w) x /= t;
  return w;
}

/// Random element of Pi(mu, nu): scaling of a random positive matrix to the marginals.
inline Eigen::MatrixXd randomCoupling(std::mt19937_64& rng, const std::vector<double>& mu,
                                      const std::vector<double>& nu) {
  std::uniform_real_distribution<double> d(0.01, 1.0);
  Eigen::MatrixXd m(mu.size(), nu.size());
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = d(rng);
  return scaling(m, mu, nu, 1e-15, 100000).pi;
}

}  // namespace oracle
