#pragma once

// Small derivative-free and least-squares optimizers used by the fits.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <utility>
#include <vector>

namespace wgmol::opt {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct ScalarOptimum {
  double x = 0.0;
  double value = 0.0;
  int iterations = 0;
};

/// Maximum of a unimodal function on [lo, hi].
inline ScalarOptimum golden_section_max(const std::function<double(double)>& f, double lo, double hi,
                                        double xtol = 1e-10, int max_iter = 500) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a), d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  int it = 0;
  while (std::abs(b - a) > xtol * std::max(1.0, std::abs(a) + std::abs(b)) && it < max_iter) {
    ++it;
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  const double x = 0.5 * (a + b);
  return {x, f(x), it};
}

/// Grid scan followed by golden-section refinement around the best grid point.
inline ScalarOptimum scan_and_refine_max(const std::function<double(double)>& f, double lo, double hi, int grid = 201,
                                         double xtol = 1e-12) {
  int best = 0;
  double best_val = -std::numeric_limits<double>::infinity();
  const double step = (hi - lo) / (grid - 1);
  for (int k = 0; k < grid; ++k) {
    const double v = f(lo + k * step);
    if (v > best_val) {
      best_val = v;
      best = k;
    }
  }
  const double a = lo + std::max(0, best - 1) * step;
  const double b = lo + std::min(grid - 1, best + 1) * step;
  return golden_section_max(f, a, b, xtol);
}

struct MinimizeResult {
  VectorXd x;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

struct NelderMeadOptions {
  int max_iterations = 4000;
  double ftol = 1e-14;
  double xtol = 1e-10;
};

inline MinimizeResult nelder_mead(const std::function<double(const VectorXd&)>& f, const VectorXd& x0,
                                  const VectorXd& steps, const NelderMeadOptions& o = {}) {
  const Eigen::Index n = x0.size();
  std::vector<VectorXd> pts(n + 1, x0);
  std::vector<double> vals(n + 1);
  for (Eigen::Index k = 0; k < n; ++k) pts[k + 1](k) += steps(k);
  for (Eigen::Index k = 0; k <= n; ++k) vals[k] = f(pts[k]);

  std::vector<int> order(n + 1);
  MinimizeResult res;
  for (int it = 0; it < o.max_iterations; ++it) {
    res.iterations = it + 1;
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return vals[a] < vals[b]; });
    const int best = order.front(), worst = order.back(), second = order[n - 1];

    double spread = 0.0;
    for (int k = 1; k <= n; ++k) spread = std::max(spread, (pts[order[k]] - pts[best]).cwiseAbs().maxCoeff());
    if (std::abs(vals[worst] - vals[best]) <= o.ftol * (std::abs(vals[best]) + 1e-300) && spread <= o.xtol) {
      res.converged = true;
      break;
    }

    VectorXd centroid = VectorXd::Zero(n);
    for (int k = 0; k <= n; ++k)
      if (k != worst) centroid += pts[k];
    centroid /= double(n);

    const VectorXd xr = centroid + (centroid - pts[worst]);
    const double fr = f(xr);
    if (fr < vals[best]) {
      const VectorXd xe = centroid + 2.0 * (centroid - pts[worst]);
      const double fe = f(xe);
      if (fe < fr) {
        pts[worst] = xe;
        vals[worst] = fe;
      } else {
        pts[worst] = xr;
        vals[worst] = fr;
      }
      continue;
    }
    if (fr < vals[second]) {
      pts[worst] = xr;
      vals[worst] = fr;
      continue;
    }
    const bool outside = fr < vals[worst];
    const VectorXd xc = outside ? VectorXd(centroid + 0.5 * (xr - centroid))
                                : VectorXd(centroid + 0.5 * (pts[worst] - centroid));
    const double fc = f(xc);
    if (fc < std::min(fr, vals[worst])) {
      pts[worst] = xc;
      vals[worst] = fc;
      continue;
    }
    for (int k = 0; k <= n; ++k) {
      if (k == best) continue;
      pts[k] = pts[best] + 0.5 * (pts[k] - pts[best]);
      vals[k] = f(pts[k]);
    }
  }
  const auto it = std::min_element(vals.begin(), vals.end());
  res.x = pts[std::size_t(it - vals.begin())];
  res.value = *it;
  return res;
}

using ResidualFn = std::function<VectorXd(const VectorXd&)>;

/// Central-difference Jacobian.
inline MatrixXd numeric_jacobian(const ResidualFn& r, const VectorXd& x, double rel_step = 1e-6) {
  const VectorXd r0 = r(x);
  MatrixXd j(r0.size(), x.size());
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    const double h = rel_step * std::max(1.0, std::abs(x(k)));
    VectorXd xp = x, xm = x;
    xp(k) += h;
    xm(k) -= h;
    j.col(k) = (r(xp) - r(xm)) / (2.0 * h);
  }
  return j;
}

struct LeastSquaresOptions {
  int max_iterations = 200;
  double xtol = 1e-12;
  double ftol = 1e-15;
  double jacobian_step = 1e-6;
};

struct LeastSquaresResult {
  VectorXd x;
  VectorXd residual;
  MatrixXd jacobian;
  double residual_norm = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Levenberg-Marquardt with multiplicative damping and numeric Jacobian.
inline LeastSquaresResult levenberg_marquardt(const ResidualFn& r, const VectorXd& x0,
                                              const LeastSquaresOptions& o = {}) {
  LeastSquaresResult res;
  VectorXd x = x0;
  VectorXd rx = r(x);
  double cost = rx.squaredNorm();
  double lambda = 1e-3;
  for (int it = 0; it < o.max_iterations; ++it) {
    res.iterations = it + 1;
    const MatrixXd j = numeric_jacobian(r, x, o.jacobian_step);
    const MatrixXd jtj = j.transpose() * j;
    const VectorXd g = j.transpose() * rx;
    bool improved = false;
    for (int tries = 0; tries < 30; ++tries) {
      MatrixXd a = jtj;
      a.diagonal() += lambda * jtj.diagonal().cwiseMax(1e-300);
      const VectorXd step = a.ldlt().solve(-g);
      const VectorXd xn = x + step;
      const VectorXd rn = r(xn);
      const double cn = rn.squaredNorm();
      if (std::isfinite(cn) && cn <= cost) {
        const bool small_step = step.norm() <= o.xtol * (x.norm() + o.xtol);
        const bool small_gain = cost - cn <= o.ftol * cost;
        x = xn;
        rx = rn;
        cost = cn;
        lambda = std::max(lambda * 0.3, 1e-12);
        improved = true;
        if (small_step || small_gain || cost == 0.0) res.converged = true;
        break;
      }
      lambda *= 10.0;
    }
    if (!improved) {
      // No descent direction left: stationary to working precision.
      res.converged = true;
      break;
    }
    if (res.converged) break;
  }
  res.x = x;
  res.residual = rx;
  res.residual_norm = std::sqrt(cost);
  res.jacobian = numeric_jacobian(r, x, o.jacobian_step);
  return res;
}

struct Uncertainty {
  VectorXd standard_errors;
  bool rank_deficient = false;
  double condition = 0.0;
};

/// Standard errors from the Gauss-Newton covariance s^2 (J^T J)^-1.
inline Uncertainty standard_errors(const MatrixXd& j, const VectorXd& residual, double rank_tol = 1e-10) {
  Uncertainty u;
  const Eigen::Index m = j.rows(), p = j.cols();
  Eigen::JacobiSVD<MatrixXd> svd(j, Eigen::ComputeThinV);
  const VectorXd s = svd.singularValues();
  u.condition = s(0) > 0 ? s(0) / std::max(s(p - 1), 1e-300) : std::numeric_limits<double>::infinity();
  u.rank_deficient = s(p - 1) <= rank_tol * s(0);
  const double dof = double(std::max<Eigen::Index>(1, m - p));
  const double s2 = residual.squaredNorm() / dof;
  VectorXd inv = VectorXd::Zero(p);
  for (Eigen::Index k = 0; k < p; ++k)
    inv(k) = s(k) > rank_tol * s(0) ? 1.0 / (s(k) * s(k)) : 0.0;
  const MatrixXd cov = svd.matrixV() * inv.asDiagonal() * svd.matrixV().transpose() * s2;
  u.standard_errors = cov.diagonal().cwiseMax(0.0).cwiseSqrt();
  return u;
}

}  // namespace wgmol::opt
