#pragma once

// Two-photon Raman coupling between |s> and |a> through a virtual level
// detuned by delta from |2->, modelled as a driven non-Hermitian two-level
// system in the doubly rotating frame.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "wgmol/couplings.hpp"
#include "wgmol/errors.hpp"
#include "wgmol/molecule.hpp"
#include "wgmol/optimize.hpp"
#include "wgmol/parallel.hpp"

namespace wgmol {

using Matrix2c = Eigen::Matrix2cd;

struct RamanConfig {
  double omega_plus = 0.0;   // pump on waveguide S (a <-> virtual), rad/s
  double omega_minus = 0.0;  // pump on waveguide A (s <-> virtual)
  double rabi_plus = 0.0;
  double rabi_minus = 0.0;
  double delta = 0.0;  // virtual level sits delta below |2->
  PortCouplings couplings;
  double omega_s = 0.0;
  double omega_a = 0.0;
  Mode driven = Mode::s;  // probe enters through the home port of this state

  /// Pumps placed on the two-photon resonance, delta below |2->.
  static RamanConfig on_resonance(const EigenSystem& sys, const PortCouplings& c, double delta, double rabi) {
    RamanConfig cfg;
    cfg.omega_s = sys.energy(Level::s);
    cfg.omega_a = sys.energy(Level::a);
    cfg.omega_plus = sys.energy(Level::two_minus) - cfg.omega_a - delta;
    cfg.omega_minus = sys.energy(Level::two_minus) - cfg.omega_s - delta;
    cfg.rabi_plus = rabi;
    cfg.rabi_minus = rabi;
    cfg.delta = delta;
    cfg.couplings = c;
    return cfg;
  }

  RamanConfig with_rabi(double rabi) const {
    RamanConfig c = *this;
    c.rabi_plus = rabi;
    c.rabi_minus = rabi;
    return c;
  }

  /// Mismatch of the pump difference from the |s>-|a> splitting.
  double two_photon_detuning() const { return (omega_plus - omega_minus) - (omega_s - omega_a); }

  void validate() const {
    if (delta == 0.0 || !std::isfinite(delta)) throw InvalidParameter("Raman detuning delta must be nonzero");
    if (!(rabi_plus >= 0.0) || !(rabi_minus >= 0.0)) throw InvalidParameter("pump amplitudes must be >= 0");
    couplings.validate();
  }
};

/// Effective Hamiltonian in the {|s>, |a>} basis.
inline Matrix2c raman_hamiltonian(const RamanConfig& cfg) {
  cfg.validate();
  const cplx i(0.0, 1.0);
  const auto& c = cfg.couplings;
  Matrix2c h;
  h(0, 0) = -2.0 * cfg.rabi_plus * cfg.rabi_plus / (4.0 * cfg.delta) - i * c.gamma1(Mode::s) / 2.0;
  h(1, 1) = -2.0 * cfg.rabi_minus * cfg.rabi_minus / (4.0 * cfg.delta) - i * c.gamma1(Mode::a) / 2.0;
  h(0, 1) = h(1, 0) = -2.0 * cfg.rabi_plus * cfg.rabi_minus / (4.0 * cfg.delta);
  // The undriven level sits in a frame shifted by the pump difference.
  if (cfg.driven == Mode::s)
    h(1, 1) += cfg.two_photon_detuning();
  else
    h(0, 0) -= cfg.two_photon_detuning();
  return h;
}

struct ConversionPoint {
  cplx r;
  cplx t;
};

/// Reflection into the probed waveguide and conversion into the other one at
/// probe detuning `detuning` from the driven state.
inline ConversionPoint conversion_at(const Matrix2c& h, const PortCouplings& c, Mode driven, double detuning) {
  const cplx i(0.0, 1.0);
  const Matrix2c m = h - detuning * Matrix2c::Identity();
  const cplx det = m.determinant();
  if (std::abs(det) <= 1e-300) throw NumericalError("H_R - w I is singular");
  const Matrix2c k = m.inverse();
  const double cross = std::sqrt(c.gamma_s * c.gamma_a);
  if (driven == Mode::s) return {1.0 + i * c.gamma_s * k(0, 0), i * cross * k(0, 1)};
  return {1.0 + i * c.gamma_a * k(1, 1), i * cross * k(1, 0)};
}

struct ConversionSpectra {
  std::vector<double> detunings;            // probe detuning from the driven state, rad/s
  std::vector<double> probe_frequencies;    // lab frame
  std::vector<double> converted_frequencies;  // lab frame, output waveguide
  std::vector<cplx> r;
  std::vector<cplx> t;
  std::vector<double> r2;
  std::vector<double> t2;
};

inline ConversionSpectra conversion_spectra(const RamanConfig& cfg, const std::vector<double>& probe_grid) {
  const Matrix2c h = raman_hamiltonian(cfg);
  ConversionSpectra out;
  const double pump_difference = cfg.omega_plus - cfg.omega_minus;
  const double ref = cfg.driven == Mode::s ? cfg.omega_s : cfg.omega_a;
  for (double d : probe_grid) {
    if (!std::isfinite(d)) throw InvalidParameter("probe grid must be finite");
    const auto p = conversion_at(h, cfg.couplings, cfg.driven, d);
    out.detunings.push_back(d);
    out.probe_frequencies.push_back(ref + d);
    // Energy conservation through s -> virtual -> a (or back).
    out.converted_frequencies.push_back(cfg.driven == Mode::s ? ref + d - pump_difference : ref + d + pump_difference);
    out.r.push_back(p.r);
    out.t.push_back(p.t);
    out.r2.push_back(std::norm(p.r));
    out.t2.push_back(std::norm(p.t));
  }
  return out;
}

/// Upper bound of |t|^2 over probe frequency and pump amplitude.
inline double peak_transmittance_bound(const PortCouplings& c) {
  return 1.0 / ((1.0 + c.gamma_s_x / c.gamma_s) * (1.0 + c.gamma_a_x / c.gamma_a));
}

struct PumpOptimum {
  double closed_form = 0.0;   // (Gamma_a Gamma_s)^(1/4) sqrt(delta)
  double matched = 0.0;       // same with total decay rates
  double numerical = 0.0;     // maximizer of peak |t|^2
  double peak_transmittance = 0.0;
  double peak_detuning = 0.0;
};

namespace detail {

struct Peak {
  double detuning;
  double value;
};

/// Maximum of |t|^2 over probe detuning for a fixed configuration.
inline Peak max_transmittance(const RamanConfig& cfg) {
  const Matrix2c h = raman_hamiltonian(cfg);
  const double stark = 0.5 * (h(0, 0).real() + h(1, 1).real());
  const double coupling = std::abs(h(0, 1));
  const double width = 0.5 * (cfg.couplings.gamma1(Mode::s) + cfg.couplings.gamma1(Mode::a));
  const double half = 3.0 * (coupling + width) + 0.5 * std::abs(h(0, 0).real() - h(1, 1).real());
  auto f = [&](double d) { return std::norm(conversion_at(h, cfg.couplings, cfg.driven, d).t); };
  const auto best = opt::scan_and_refine_max(f, stark - half, stark + half, 801, 1e-14);
  return {best.x, best.value};
}

}  // namespace detail

inline PumpOptimum optimal_pump(const PortCouplings& c, double delta, Mode driven = Mode::s) {
  c.validate();
  if (!(delta > 0.0)) throw InvalidParameter("optimal pump requires delta > 0");
  PumpOptimum out;
  out.closed_form = std::pow(c.gamma_a * c.gamma_s, 0.25) * std::sqrt(delta);
  out.matched = std::pow(c.gamma1(Mode::a) * c.gamma1(Mode::s), 0.25) * std::sqrt(delta);

  RamanConfig cfg;
  cfg.delta = delta;
  cfg.couplings = c;
  cfg.driven = driven;
  auto peak = [&](double rabi) { return detail::max_transmittance(cfg.with_rabi(rabi)).value; };
  const auto best = opt::scan_and_refine_max(peak, 0.2 * out.matched, 3.0 * out.matched, 281, 1e-12);
  out.numerical = best.x;
  const auto p = detail::max_transmittance(cfg.with_rabi(best.x));
  out.peak_transmittance = p.value;
  out.peak_detuning = p.detuning;
  return out;
}

struct RamanMap {
  std::vector<double> rabi;   // rows
  std::vector<double> probe;  // columns, detuning from the driven state
  Eigen::MatrixXd t2;
  Eigen::MatrixXd r2;
};

inline RamanMap sweep_pump_amplitude(const RamanConfig& templ, const std::vector<double>& rabi_grid,
                                     const std::vector<double>& probe_grid, int workers = 1) {
  if (rabi_grid.empty() || probe_grid.empty()) throw InvalidParameter("Raman sweep grids must be nonempty");
  templ.validate();
  RamanMap map{rabi_grid, probe_grid, Eigen::MatrixXd(rabi_grid.size(), probe_grid.size()),
               Eigen::MatrixXd(rabi_grid.size(), probe_grid.size())};
  parallel_for(rabi_grid.size(), workers, [&](std::size_t row) {
    const auto spec = conversion_spectra(templ.with_rabi(rabi_grid[row]), probe_grid);
    for (std::size_t col = 0; col < probe_grid.size(); ++col) {
      map.t2(Eigen::Index(row), Eigen::Index(col)) = spec.t2[col];
      map.r2(Eigen::Index(row), Eigen::Index(col)) = spec.r2[col];
    }
  });
  return map;
}

/// Local maxima of |t|^2 for one pump amplitude, refined off-grid. The
/// leftmost and rightmost entries are the two Raman branches once split.
struct BranchPoint {
  double detuning;
  double t2;
  double r2;
};

inline std::vector<BranchPoint> transmission_peaks(const RamanConfig& cfg, const std::vector<double>& probe_grid) {
  const Matrix2c h = raman_hamiltonian(cfg);
  auto t2 = [&](double d) { return std::norm(conversion_at(h, cfg.couplings, cfg.driven, d).t); };
  std::vector<double> v;
  for (double d : probe_grid) v.push_back(t2(d));
  std::vector<BranchPoint> peaks;
  for (std::size_t k = 1; k + 1 < v.size(); ++k) {
    if (!(v[k] > v[k - 1] && v[k] >= v[k + 1])) continue;
    const auto best = opt::golden_section_max(t2, probe_grid[k - 1], probe_grid[k + 1], 1e-14);
    peaks.push_back({best.x, best.value, std::norm(conversion_at(h, cfg.couplings, cfg.driven, best.x).r)});
  }
  return peaks;
}

}  // namespace wgmol
