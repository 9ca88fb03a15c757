#pragma once

// Two-tone (Autler-Townes) spectroscopy: a weak probe on 0 <-> x reflects
// off the molecule while a pump dresses x <-> u. The reflection spectrum is
// computed from the steady state of the full master equation.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <vector>

#include "wgmol/errors.hpp"
#include "wgmol/lindblad.hpp"
#include "wgmol/optimize.hpp"
#include "wgmol/parallel.hpp"
#include "wgmol/scattering.hpp"

namespace wgmol {

struct AutlerTownesConfig {
  Level probe_upper = Level::a;
  Port probe_port = Port::A;
  double probe_rabi = 0.0;  // 0: one tenth of the probed transition's radiative rate
  Level pump_upper = Level::two_minus;
  Port pump_port = Port::S;
  double pump_rabi = 0.0;
  double pump_detuning = 0.0;
  std::vector<double> probe_detunings;  // from the 0 <-> x transition, rad/s
  int workers = 1;
};

struct AutlerTownesResult {
  ComplexSpectrum spectrum;
  std::vector<double> detunings;
  double splitting = std::numeric_limits<double>::quiet_NaN();  // model-fitted dressing Rabi rate
  double dip_separation = std::numeric_limits<double>::quiet_NaN();
  double fitted_upper_linewidth = std::numeric_limits<double>::quiet_NaN();
  double fitted_pump_detuning = std::numeric_limits<double>::quiet_NaN();
  double probe_rabi = 0.0;
  Warnings warnings;
};

/// Weak-probe reflection of a pumped ladder 0 -> x -> u:
/// r = 1 - Gamma_p / (g1 - i d + (W/2)^2 / (g2 - i (d + dc))).
inline cplx ladder_reflectance(double d, double gamma_probe, double g1, double rabi_pump, double g2, double dc) {
  const cplx i(0.0, 1.0);
  return 1.0 - gamma_probe / (g1 - i * d + 0.25 * rabi_pump * rabi_pump / (g2 - i * (d + dc)));
}

namespace detail {

/// Local minima of |r| with linear refinement, strongest first.
inline std::vector<std::size_t> dips(const std::vector<double>& mag) {
  std::vector<std::size_t> idx;
  for (std::size_t k = 1; k + 1 < mag.size(); ++k)
    if (mag[k] < mag[k - 1] && mag[k] <= mag[k + 1]) idx.push_back(k);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return mag[a] < mag[b]; });
  return idx;
}

/// Vertex of the parabola through three neighbouring samples.
inline double parabolic_vertex(const std::vector<double>& x, const std::vector<double>& y, std::size_t k) {
  const double x0 = x[k - 1], x1 = x[k], x2 = x[k + 1];
  const double y0 = y[k - 1], y1 = y[k], y2 = y[k + 1];
  const double den = (x0 - x1) * (x0 - x2) * (x1 - x2);
  const double a = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / den;
  const double b = (x2 * x2 * (y0 - y1) + x1 * x1 * (y2 - y0) + x0 * x0 * (y1 - y2)) / den;
  if (a <= 0.0) return x1;
  return std::clamp(-b / (2.0 * a), x0, x2);
}

}  // namespace detail

inline AutlerTownesResult autler_townes_spectrum(const MoleculeModel& m, const AutlerTownesConfig& cfg) {
  if (!find_transition(m.transitions, Level::ground, cfg.probe_upper, cfg.probe_port))
    throw InvalidParameter("probe transition 0<->" + std::string(to_string(cfg.probe_upper)) +
                           " is forbidden on port " + std::string(to_string(cfg.probe_port)));
  if (!find_transition(m.transitions, cfg.probe_upper, cfg.pump_upper, cfg.pump_port))
    throw InvalidParameter("pump transition " + std::string(to_string(cfg.probe_upper)) + "<->" +
                           std::string(to_string(cfg.pump_upper)) + " is forbidden on port " +
                           std::string(to_string(cfg.pump_port)));
  if (excitation_of(cfg.pump_upper) != excitation_of(cfg.probe_upper) + 1)
    throw InvalidParameter("pump must connect the probed state to the next manifold");
  if (!(cfg.pump_rabi >= 0.0)) throw InvalidParameter("pump amplitude must be >= 0");
  if (cfg.probe_detunings.size() < 5) throw InvalidParameter("need at least 5 probe detunings");
  for (std::size_t k = 1; k < cfg.probe_detunings.size(); ++k)
    if (!(cfg.probe_detunings[k] > cfg.probe_detunings[k - 1]))
      throw InvalidParameter("probe detunings must be strictly increasing");

  const double gamma_probe = m.decay.rate(cfg.probe_upper, Level::ground, cfg.probe_port);
  if (!(gamma_probe > 0.0)) throw InvalidParameter("probed transition does not radiate into the probe port");
  AutlerTownesResult res;
  res.probe_rabi = cfg.probe_rabi > 0.0 ? cfg.probe_rabi : 0.1 * gamma_probe;
  const auto jumps = m.decay.jump_operators();
  const double w_probe = m.frequency(Level::ground, cfg.probe_upper);
  const double w_pump = m.frequency(cfg.probe_upper, cfg.pump_upper) + cfg.pump_detuning;
  const int lower = index_of(Level::ground), upper = index_of(cfg.probe_upper);

  const std::size_t n = cfg.probe_detunings.size();
  std::vector<cplx> r(n);
  parallel_for(n, cfg.workers, [&](std::size_t k) {
    const std::vector<CwDrive> drives = {
        {Level::ground, cfg.probe_upper, res.probe_rabi, w_probe + cfg.probe_detunings[k], 0.0},
        {cfg.probe_upper, cfg.pump_upper, cfg.pump_rabi, w_pump, 0.0}};
    const auto ss = steady_state(rotating_frame_hamiltonian(m, drives), jumps);
    const cplx sigma = ss.rho(upper, lower);  // <|lower><upper|>
    r[k] = 1.0 - cplx(0.0, 2.0) * gamma_probe * sigma / res.probe_rabi;
  });

  res.detunings = cfg.probe_detunings;
  res.spectrum.frequencies.reserve(n);
  for (double d : cfg.probe_detunings) res.spectrum.frequencies.push_back(w_probe + d);
  res.spectrum.values = r;
  res.spectrum.port = cfg.probe_port;
  res.spectrum.drive_amplitude = res.probe_rabi;
  res.spectrum.model_version = "ladder-steady-state/1";

  std::vector<double> mag(n);
  for (std::size_t k = 0; k < n; ++k) mag[k] = std::abs(r[k]);
  const auto found = detail::dips(mag);
  if (found.size() >= 2) {
    const double x0 = detail::parabolic_vertex(res.detunings, mag, found[0]);
    const double x1 = detail::parabolic_vertex(res.detunings, mag, found[1]);
    res.dip_separation = std::abs(x1 - x0);
  } else {
    res.warnings.push_back("Autler-Townes doublet unresolved: fewer than two dips in the probe window");
  }

  // Model fit of the dressed-ladder line shape. The probe-side rates are fixed
  // by the decay model; the dressing amplitude, the width of the upper state
  // and the pump detuning are free.
  const double g1 = 0.5 * m.decay.total(cfg.probe_upper) + m.decay.dephasing[upper];
  const double g2_model = 0.5 * m.decay.total(cfg.pump_upper) + 0.5 * m.decay.total(cfg.probe_upper) +
                          m.decay.dephasing[index_of(cfg.pump_upper)];
  const double unit = std::max(g1, 1e-300);
  auto residual = [&](const Eigen::VectorXd& x) {
    Eigen::VectorXd out(2 * n);
    for (std::size_t k = 0; k < n; ++k) {
      const cplx diff =
          ladder_reflectance(res.detunings[k], gamma_probe, g1, std::abs(x(0)) * unit, std::abs(x(1)) * unit, x(2) * unit) -
          r[k];
      out(Eigen::Index(2 * k)) = diff.real();
      out(Eigen::Index(2 * k + 1)) = diff.imag();
    }
    return out;
  };
  const double seed_rabi = std::isfinite(res.dip_separation) ? res.dip_separation : std::max(cfg.pump_rabi, g1);
  Eigen::VectorXd best;
  double best_cost = std::numeric_limits<double>::infinity();
  for (double fr : {0.7, 1.0, 1.3})
    for (double fg : {0.5, 1.0, 2.0}) {
      Eigen::VectorXd x0(3);
      x0 << fr * seed_rabi / unit, fg * g2_model / unit, 0.0;
      const double c = residual(x0).squaredNorm();
      if (c < best_cost) {
        best_cost = c;
        best = x0;
      }
    }
  const auto simplex = opt::nelder_mead([&](const Eigen::VectorXd& x) { return residual(x).squaredNorm(); }, best,
                                        best.cwiseAbs().cwiseMax(0.1) * 0.1);
  const auto lm = opt::levenberg_marquardt(residual, simplex.x);
  res.splitting = std::abs(lm.x(0)) * unit;
  res.fitted_upper_linewidth = std::abs(lm.x(1)) * unit;
  res.fitted_pump_detuning = lm.x(2) * unit;
  if (res.splitting < g1 + res.fitted_upper_linewidth)
    res.warnings.push_back("dressing amplitude is below the combined linewidth; splitting is not resolved");
  return res;
}

}  // namespace wgmol
