#pragma once

// Single-tone reflection off a driven, saturable transition at the end of a
// waveguide, and global fits of that model to multi-power spectra.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cstdint>
#include <cmath>
#include <complex>
#include <random>
#include <string>
#include <vector>

#include "wgmol/couplings.hpp"
#include "wgmol/errors.hpp"
#include "wgmol/optimize.hpp"

namespace wgmol {

inline constexpr const char* kReflectanceModelVersion = "two-level-saturation/1";

struct DriveTone {
  Port port = Port::S;
  double frequency = 0.0;  // rad/s
  double amplitude = 0.0;  // Rabi rate, rad/s
  double phase = 0.0;

  void validate() const {
    if (!(amplitude >= 0.0)) throw InvalidParameter("drive amplitude must be >= 0");
  }
};

struct ComplexSpectrum {
  std::vector<double> frequencies;  // rad/s, strictly increasing
  std::vector<cplx> values;
  Port port = Port::S;
  double drive_amplitude = 0.0;
  std::string model_version = kReflectanceModelVersion;

  std::size_t size() const { return frequencies.size(); }

  void validate() const {
    if (frequencies.size() != values.size()) throw InvalidParameter("spectrum frequency/value size mismatch");
    for (std::size_t k = 1; k < frequencies.size(); ++k)
      if (!(frequencies[k] > frequencies[k - 1]))
        throw InvalidParameter("spectrum frequencies must be strictly increasing");
  }
};

/// Parameters of one resonance as seen from the probing waveguide.
struct ResonanceModel {
  double mode_frequency = 0.0;  // rad/s
  double gamma = 0.0;           // into the probing waveguide
  double gamma_other = 0.0;     // into every other channel
  double gamma_phi = 0.0;       // pure dephasing
  double scale = 1.0;           // Rabi rate per unit nominal drive amplitude

  double gamma1() const { return gamma + gamma_other; }
  double gamma2() const { return 0.5 * gamma1() + gamma_phi; }

  /// The probing port picks which of (direct, cross) acts as `gamma`.
  static ResonanceModel from_couplings(double mode_frequency, const PortCouplings& c, Mode state, Port probed) {
    const double g = c.into(state, probed);
    return {mode_frequency, g, c.gamma1(state) - g, c.dephasing(state), 1.0};
  }
};

namespace detail {

inline cplx two_level_reflectance(double detuning, double gamma, double gamma1, double gamma2, double rabi) {
  if (gamma == 0.0) return 1.0;
  const cplx i(0.0, 1.0);
  const cplx num = i * gamma * gamma1 * (detuning - i * gamma2);
  const double den = rabi * rabi * gamma2 + gamma1 * (detuning * detuning + gamma2 * gamma2);
  return 1.0 - num / den;
}

}  // namespace detail

/// r at probe frequency `frequency` for drive amplitude `rabi` (rad/s).
inline cplx reflectance(const ResonanceModel& m, double frequency, double rabi) {
  return detail::two_level_reflectance(frequency - m.mode_frequency, m.gamma, m.gamma1(), m.gamma2(), rabi);
}

inline cplx reflectance(double mode_frequency, const PortCouplings& c, Mode state, Port probed_port,
                        const DriveTone& tone) {
  c.validate();
  tone.validate();
  if (tone.port != probed_port) throw InvalidParameter("drive tone must enter through the probed port");
  return reflectance(ResonanceModel::from_couplings(mode_frequency, c, state, probed_port), tone.frequency,
                     tone.amplitude);
}

/// Drive amplitude at which the on-resonance reflection vanishes:
/// Omega^2 = Gamma1 (Gamma - Gamma2).
inline double magic_amplitude(const PortCouplings& c, Mode state, Port probed) {
  c.validate();
  const auto m = ResonanceModel::from_couplings(0.0, c, state, probed);
  const double excess = m.gamma - m.gamma2();
  if (excess < 0.0)
    throw NoSolution("transition is under-coupled to the probed port; reflection never reaches zero");
  return std::sqrt(m.gamma1() * excess);
}

inline double magic_amplitude(const PortCouplings& c, Mode state) { return magic_amplitude(c, state, home_port(state)); }

/// Low-power IQ-circle diameter Gamma/Gamma2 (2 Gamma/Gamma1 without dephasing).
inline double iq_circle_diameter(const PortCouplings& c, Mode state, Port probed) {
  const auto m = ResonanceModel::from_couplings(0.0, c, state, probed);
  return m.gamma / m.gamma2();
}

inline std::vector<double> linspace(double lo, double hi, std::size_t n) {
  std::vector<double> v(n);
  if (n == 1) {
    v[0] = lo;
    return v;
  }
  for (std::size_t k = 0; k < n; ++k) v[k] = lo + (hi - lo) * double(k) / double(n - 1);
  return v;
}

inline ComplexSpectrum iq_circle(double mode_frequency, const PortCouplings& c, Mode state, Port port, double amplitude,
                                 double frequency_span, std::size_t n_points) {
  if (n_points < 3) throw InvalidParameter("iq_circle needs at least 3 points");
  if (!(frequency_span > 0.0)) throw InvalidParameter("frequency span must be > 0");
  c.validate();
  const auto model = ResonanceModel::from_couplings(mode_frequency, c, state, port);
  ComplexSpectrum out;
  out.port = port;
  out.drive_amplitude = amplitude;
  out.frequencies = linspace(mode_frequency - 0.5 * frequency_span, mode_frequency + 0.5 * frequency_span, n_points);
  out.values.reserve(n_points);
  for (double f : out.frequencies) out.values.push_back(reflectance(model, f, amplitude));
  return out;
}

// ---------------------------------------------------------------------------
// Global fit

/// One measured spectrum at a nominal drive amplitude (Rabi rate = scale * amplitude).
struct ReflectanceDataset {
  ComplexSpectrum spectrum;
  double amplitude = 0.0;
};

struct FitOptions {
  bool fit_mode_frequency = true;
  bool fit_gamma = true;
  bool fit_gamma_other = true;
  bool fit_gamma_phi = false;
  bool fit_scale = false;
  int grid_points = 9;  // per axis of the coarse (gamma, gamma_other) grid
  int max_iterations = 300;
  opt::NelderMeadOptions simplex{2000, 1e-12, 1e-8};
};

struct FitResult {
  ResonanceModel params;
  ResonanceModel standard_errors;  // same fields, 1-sigma
  double residual_norm = 0.0;
  bool converged = false;
  int iterations = 0;
  bool rank_deficient = false;
  Warnings warnings;
};

/// Model spectra for a set of nominal amplitudes.
inline std::vector<ReflectanceDataset> synthesize_datasets(const ResonanceModel& m, Port port,
                                                           const std::vector<double>& amplitudes,
                                                           const std::vector<double>& frequencies) {
  std::vector<ReflectanceDataset> out;
  for (double amp : amplitudes) {
    ReflectanceDataset d;
    d.amplitude = amp;
    d.spectrum.port = port;
    d.spectrum.drive_amplitude = m.scale * amp;
    d.spectrum.frequencies = frequencies;
    for (double f : frequencies) d.spectrum.values.push_back(reflectance(m, f, m.scale * amp));
    out.push_back(std::move(d));
  }
  return out;
}

/// Adds circular complex Gaussian noise with total power mean|r|^2 / 10^(snr_db/10) per point.
inline void add_noise(std::vector<ReflectanceDataset>& data, double snr_db, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (auto& d : data) {
    double power = 0.0;
    for (const cplx& v : d.spectrum.values) power += std::norm(v);
    power /= double(d.spectrum.values.size());
    const double sigma = std::sqrt(0.5 * power / std::pow(10.0, snr_db / 10.0));
    for (cplx& v : d.spectrum.values) {
      const double re = normal(rng), im = normal(rng);
      v += sigma * cplx(re, im);
    }
  }
}

namespace detail {

struct FitLayout {
  ResonanceModel guess;
  double rate_unit;
  std::array<bool, 5> free;

  std::vector<int> indices() const {
    std::vector<int> idx;
    for (int k = 0; k < 5; ++k)
      if (free[k]) idx.push_back(k);
    return idx;
  }

  std::array<double, 5> encode(const ResonanceModel& m) const {
    return {(m.mode_frequency - guess.mode_frequency) / rate_unit, m.gamma / rate_unit, m.gamma_other / rate_unit,
            m.gamma_phi / rate_unit, m.scale / guess.scale};
  }

  ResonanceModel decode(const std::array<double, 5>& u) const {
    return {guess.mode_frequency + u[0] * rate_unit, std::abs(u[1]) * rate_unit, std::abs(u[2]) * rate_unit,
            std::abs(u[3]) * rate_unit, std::abs(u[4]) * guess.scale};
  }

  ResonanceModel decode(const ResonanceModel& base, const Eigen::VectorXd& x) const {
    auto u = encode(base);
    const auto idx = indices();
    for (std::size_t k = 0; k < idx.size(); ++k) u[idx[k]] = x(Eigen::Index(k));
    return decode(u);
  }

  Eigen::VectorXd pack(const ResonanceModel& m) const {
    const auto u = encode(m);
    const auto idx = indices();
    Eigen::VectorXd x(idx.size());
    for (std::size_t k = 0; k < idx.size(); ++k) x(Eigen::Index(k)) = u[idx[k]];
    return x;
  }
};

inline Eigen::VectorXd fit_residuals(const ResonanceModel& m, const std::vector<ReflectanceDataset>& data) {
  std::size_t n = 0;
  for (const auto& d : data) n += d.spectrum.size();
  Eigen::VectorXd r(2 * n);
  Eigen::Index k = 0;
  for (const auto& d : data) {
    const double rabi = m.scale * d.amplitude;
    for (std::size_t p = 0; p < d.spectrum.size(); ++p) {
      const cplx diff = reflectance(m, d.spectrum.frequencies[p], rabi) - d.spectrum.values[p];
      r(k++) = diff.real();
      r(k++) = diff.imag();
    }
  }
  return r;
}

}  // namespace detail

/// Sum of squared complex residuals, square-rooted.
inline double residual_norm(const ResonanceModel& m, const std::vector<ReflectanceDataset>& data) {
  return detail::fit_residuals(m, data).norm();
}

/// Joint least-squares fit of one resonance across several drive amplitudes:
/// coarse (gamma, gamma_other) grid, simplex refinement, then Levenberg-Marquardt.
inline FitResult fit_reflectance(const std::vector<ReflectanceDataset>& data, const ResonanceModel& initial_guess,
                                 const FitOptions& options = {}) {
  if (data.size() < 2) throw InvalidParameter("global fit needs at least two spectra");
  {
    std::vector<double> amps;
    for (const auto& d : data) {
      d.spectrum.validate();
      if (d.spectrum.size() == 0) throw InvalidParameter("empty spectrum in fit input");
      amps.push_back(d.amplitude);
    }
    std::sort(amps.begin(), amps.end());
    if (std::adjacent_find(amps.begin(), amps.end()) != amps.end() || amps.front() == amps.back())
      throw InvalidParameter("fit spectra must be taken at distinct drive amplitudes");
  }
  if (!(initial_guess.gamma > 0.0)) throw InvalidParameter("initial guess needs gamma > 0");
  if (!(initial_guess.scale > 0.0)) throw InvalidParameter("initial guess needs scale > 0");

  detail::FitLayout layout{initial_guess, initial_guess.gamma1() > 0 ? initial_guess.gamma1() : initial_guess.gamma,
                           {options.fit_mode_frequency, options.fit_gamma, options.fit_gamma_other,
                            options.fit_gamma_phi, options.fit_scale}};
  if (layout.indices().empty()) throw InvalidParameter("fit has no free parameters");

  FitResult result;
  if (options.fit_scale && options.fit_gamma_other && options.fit_gamma_phi)
    result.warnings.push_back(
        "scale, gamma_other and gamma_phi are jointly free: power dependence only constrains Omega^2/Gamma1");

  auto cost_of = [&](const ResonanceModel& m) { return detail::fit_residuals(m, data).squaredNorm(); };

  // Coarse grid over (gamma, gamma_other) around the guess.
  ResonanceModel start = initial_guess;
  if (options.grid_points > 1 && (options.fit_gamma || options.fit_gamma_other)) {
    const double g0 = initial_guess.gamma;
    const double o0 = initial_guess.gamma_other > 0 ? initial_guess.gamma_other : 0.01 * g0;
    double best = cost_of(start);
    const int n = options.grid_points;
    for (int i = 0; i < n; ++i) {
      const double gi = options.fit_gamma ? g0 * std::pow(4.0, 2.0 * i / (n - 1) - 1.0) : g0;
      for (int j = 0; j < n; ++j) {
        const double oj = options.fit_gamma_other ? o0 * std::pow(10.0, 2.0 * j / (n - 1) - 1.0) : o0;
        ResonanceModel trial = initial_guess;
        trial.gamma = gi;
        trial.gamma_other = options.fit_gamma_other ? oj : initial_guess.gamma_other;
        const double c = cost_of(trial);
        if (c < best) {
          best = c;
          start = trial;
        }
      }
    }
  }

  auto scalar_cost = [&](const Eigen::VectorXd& x) { return cost_of(layout.decode(start, x)); };
  const Eigen::VectorXd x0 = layout.pack(start);
  Eigen::VectorXd steps = Eigen::VectorXd::Constant(x0.size(), 0.05);
  for (Eigen::Index k = 0; k < x0.size(); ++k)
    if (x0(k) != 0.0) steps(k) = 0.1 * std::abs(x0(k));
  const auto simplex = opt::nelder_mead(scalar_cost, x0, steps, options.simplex);

  opt::LeastSquaresOptions lso;
  lso.max_iterations = options.max_iterations;
  auto residual_fn = [&](const Eigen::VectorXd& x) { return detail::fit_residuals(layout.decode(start, x), data); };
  const auto lm = opt::levenberg_marquardt(residual_fn, simplex.x, lso);

  result.params = layout.decode(start, lm.x);
  result.residual_norm = lm.residual_norm;
  result.iterations = simplex.iterations + lm.iterations;
  result.converged = lm.converged;
  if (!std::isfinite(result.residual_norm)) throw NumericalError("fit residual is not finite");
  if (!lm.converged) throw NumericalError("reflectance fit did not converge within the iteration cap");

  const auto unc = opt::standard_errors(lm.jacobian, lm.residual);
  result.rank_deficient = unc.rank_deficient;
  if (unc.rank_deficient) result.warnings.push_back("fit Jacobian is rank deficient; parameters are degenerate");

  std::array<double, 5> se{0, 0, 0, 0, 0};
  const auto idx = layout.indices();
  for (std::size_t k = 0; k < idx.size(); ++k) se[idx[k]] = unc.standard_errors(Eigen::Index(k));
  result.standard_errors = {se[0] * layout.rate_unit, se[1] * layout.rate_unit, se[2] * layout.rate_unit,
                            se[3] * layout.rate_unit, se[4] * initial_guess.scale};
  return result;
}

}  // namespace wgmol
