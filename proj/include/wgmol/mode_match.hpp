#pragma once

// Temporal filters matched to exponentially decaying emission, and the
// quadrature used to apply them on a uniform time grid.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <vector>

#include "wgmol/errors.hpp"

namespace wgmol {

struct TimeGrid {
  double start = 0.0;  // s
  double step = 0.0;
  std::size_t size = 0;

  static TimeGrid over(double start, double duration, std::size_t n) {
    if (n < 2) throw InvalidParameter("time grid needs at least 2 points");
    if (!(duration > 0.0)) throw InvalidParameter("time window must be > 0");
    return {start, duration / double(n - 1), n};
  }

  double at(std::size_t k) const { return start + step * double(k); }
  double duration() const { return step * double(size - 1); }
  std::vector<double> times() const {
    std::vector<double> t(size);
    for (std::size_t k = 0; k < size; ++k) t[k] = at(k);
    return t;
  }
};

/// Composite Simpson weights for an odd number of points, trapezoid otherwise.
inline std::vector<double> quadrature_weights(const TimeGrid& g) {
  std::vector<double> w(g.size, g.step);
  if (g.size % 2 == 1 && g.size >= 3) {
    for (std::size_t k = 0; k < g.size; ++k) w[k] = g.step / 3.0 * (k == 0 || k + 1 == g.size ? 1.0 : (k % 2 ? 4.0 : 2.0));
  } else {
    w.front() *= 0.5;
    w.back() *= 0.5;
  }
  return w;
}

/// Fraction of an exponentially decaying photon emitted within the window.
inline double capture_efficiency(double decay_rate, double window) {
  if (!(decay_rate > 0.0)) throw InvalidParameter("decay rate must be > 0");
  if (!(window > 0.0)) throw InvalidParameter("window must be > 0");
  return -std::expm1(-decay_rate * window);
}

struct ModeMatchResult {
  TimeGrid grid;
  std::vector<double> filter;   // normalized on the window, real
  std::vector<double> weights;  // quadrature weights
  double decay_rate = 0.0;
  double window = 0.0;
  double efficiency = 0.0;  // overlap of the filter with the full emission
};

/// f(t) = sqrt(Gamma / (1 - e^{-Gamma T})) e^{-Gamma t / 2} on [start, start + T].
inline ModeMatchResult matched_filter(double decay_rate, double window, std::size_t n_points, double start = 0.0) {
  ModeMatchResult m;
  m.efficiency = capture_efficiency(decay_rate, window);
  m.grid = TimeGrid::over(start, window, n_points);
  m.weights = quadrature_weights(m.grid);
  m.decay_rate = decay_rate;
  m.window = window;
  const double norm = std::sqrt(decay_rate / m.efficiency);
  for (std::size_t k = 0; k < n_points; ++k) m.filter.push_back(norm * std::exp(-0.5 * decay_rate * (m.grid.at(k) - start)));
  return m;
}

/// Projection of a sampled field amplitude onto the filter: int f(t) a(t) dt.
inline std::complex<double> mode_match(const std::vector<std::complex<double>>& field, const ModeMatchResult& f) {
  if (field.size() != f.filter.size()) throw InvalidParameter("field record and filter have different lengths");
  std::complex<double> acc = 0.0;
  for (std::size_t k = 0; k < field.size(); ++k) acc += f.weights[k] * f.filter[k] * field[k];
  return acc;
}

/// int int f(t) g(t') G(t, t') dt dt' for a correlation matrix sampled on the filter grids.
inline std::complex<double> mode_match(const Eigen::MatrixXcd& g_matrix, const ModeMatchResult& f,
                                       const ModeMatchResult& g) {
  if (std::size_t(g_matrix.rows()) != f.filter.size() || std::size_t(g_matrix.cols()) != g.filter.size())
    throw InvalidParameter("correlation matrix does not match the filter grids");
  std::complex<double> acc = 0.0;
  for (Eigen::Index i = 0; i < g_matrix.rows(); ++i)
    for (Eigen::Index j = 0; j < g_matrix.cols(); ++j)
      acc += f.weights[i] * f.filter[i] * g.weights[j] * g.filter[j] * g_matrix(i, j);
  return acc;
}

}  // namespace wgmol
