// Acceptance run: one PASS/FAIL line per criterion. Exit status is nonzero
// if any criterion fails.

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "wgmol/wgmol.hpp"

using namespace wgmol;
using std::numbers::pi;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << "[failed: " << what << "] ";
    }
  }
};

std::string fmt(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

Outcome eigenstructure() {
  Outcome o;
  const auto sys = diagonalize(MoleculeParams::device_defaults());
  const std::pair<Level, double> table[] = {{Level::a, 5.6981},
                                            {Level::s, 6.2909},
                                            {Level::two_plus_lower, 11.2600},
                                            {Level::two_minus, 11.7421},
                                            {Level::two_plus_upper, 12.4711}};
  double worst = 0.0;
  for (auto [level, ghz] : table) {
    const double dev = std::abs(to_hz(sys.energy(level)) - ghz * 1e9);
    worst = std::max(worst, dev);
    o.check(dev <= 0.5e6, std::string(to_string(level)) + " off by " + fmt(dev * 1e-6) + " MHz");
  }
  o.detail << "max deviation from the measured table " << fmt(worst * 1e-6, 3) << " MHz (limit 0.5)";
  return o;
}

Outcome coupling_coefficients_check() {
  Outcome o;
  const auto p = MoleculeParams::device_defaults();
  const auto c = coupling_coefficients(p);
  o.check(std::abs(c.s_minus - 0.53) <= 0.01, "c_S- = " + fmt(c.s_minus));
  o.check(std::abs(c.s_plus - 6.31) <= 0.01, "c_S+ = " + fmt(c.s_plus));
  o.check(std::abs(c.a_plus - 5.13) <= 0.01, "c_A+ = " + fmt(c.a_plus));
  o.check(std::abs(c.a_minus + 0.65) <= 0.01, "c_A- = " + fmt(c.a_minus));

  // Nonzero pattern of the published matrices, rows/columns (0, a, s, 2-, 2+L, 2+U).
  const int s_mask[6][6] = {{0, 0, 1, 0, 0, 0}, {0, 0, 0, 1, 0, 0}, {1, 0, 0, 0, 1, 1},
                            {0, 1, 0, 0, 0, 0}, {0, 0, 1, 0, 0, 0}, {0, 0, 1, 0, 0, 0}};
  const int a_mask[6][6] = {{0, 1, 0, 0, 0, 0}, {1, 0, 0, 0, 1, 1}, {0, 0, 0, 1, 0, 0},
                            {0, 0, 1, 0, 0, 0}, {0, 1, 0, 0, 0, 0}, {0, 1, 0, 0, 0, 0}};
  const auto d = dipole_matrices(diagonalize(p), p);
  int mismatches = 0;
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) {
      mismatches += (std::abs(d.d_s(i, j)) > kDipoleThreshold) != bool(s_mask[i][j]);
      mismatches += (std::abs(d.d_a(i, j)) > kDipoleThreshold) != bool(a_mask[i][j]);
    }
  o.check(mismatches == 0, std::to_string(mismatches) + " zero-pattern mismatches");

  const auto& u = *d.d_s_unnormalized;
  const double numeric = std::abs(u(index_of(Level::s), index_of(Level::two_plus_upper)) /
                                  u(index_of(Level::s), index_of(Level::two_plus_lower)));
  const double closed = 6.31 / 0.53;
  o.check(std::abs(numeric - closed) <= 0.02 * closed, "ratio " + fmt(numeric));
  o.detail << "c = (" << fmt(c.s_minus, 3) << ", " << fmt(c.s_plus, 3) << ", " << fmt(c.a_plus, 3) << ", "
           << fmt(c.a_minus, 3) << "); zero pattern mismatches " << mismatches << "; dipole ratio " << fmt(numeric, 4)
           << " vs 6.31/0.53 = " << fmt(closed, 4);
  return o;
}

Outcome selectivity() {
  Outcome o;
  const auto c = PortCouplings::device_defaults();
  const double s = c.selectivity(Mode::s), a = c.selectivity(Mode::a);
  o.check(std::abs(s - 46.6) <= 0.5, "s selectivity " + fmt(s));
  o.check(std::abs(a - 35.3) <= 0.5, "a selectivity " + fmt(a));
  o.detail << "Gamma_s/Gamma_s' = " << fmt(s, 4) << " (quoted 47), Gamma_a/Gamma_a' = " << fmt(a, 4) << " (quoted 35)";
  return o;
}

Outcome reflectance_check() {
  Outcome o;
  const auto c = PortCouplings::device_defaults();
  const auto sys = diagonalize(MoleculeParams::device_defaults());
  const auto truth = ResonanceModel::from_couplings(sys.energy(Level::a), c, Mode::a, Port::A);
  const cplx r0 = reflectance(truth, truth.mode_frequency, 0.0);
  o.check(std::abs(r0.real() + 0.945) <= 0.005 && std::abs(r0.imag()) < 1e-12, "r0 = " + fmt(r0.real()));
  const double magic = magic_amplitude(c, Mode::a, Port::A);
  const double r_magic = std::abs(reflectance(truth, truth.mode_frequency, magic));
  o.check(r_magic < 1e-10, "|r| at the magic amplitude " + fmt(r_magic));

  const auto freqs = linspace(truth.mode_frequency - from_hz(2e6), truth.mode_frequency + from_hz(2e6), 401);
  std::vector<double> amps;
  for (double hz : {0.02e6, 0.1e6, 0.22e6, 0.4e6, 0.8e6}) amps.push_back(from_hz(hz));
  auto guess_of = [](ResonanceModel m) {
    m.gamma *= 1.25;
    m.gamma_other *= 0.7;
    m.mode_frequency += 0.05 * m.gamma1();
    return m;
  };

  // Noiseless: every free parameter, including dephasing and the amplitude scale.
  double worst_clean = 0.0;
  {
    auto t = truth;
    t.gamma_phi = from_hz(0.02e6);
    FitOptions fo;
    fo.fit_gamma_phi = true;
    auto g = guess_of(t);
    g.gamma_phi = from_hz(0.005e6);
    const auto fit = fit_reflectance(synthesize_datasets(t, Port::A, amps, freqs), g, fo);
    for (auto [got, want] : {std::pair{fit.params.gamma, t.gamma}, {fit.params.gamma_other, t.gamma_other},
                             {fit.params.gamma_phi, t.gamma_phi}, {fit.params.mode_frequency - t.mode_frequency + t.gamma, t.gamma}})
      worst_clean = std::max(worst_clean, std::abs(got / want - 1.0));
  }
  {
    auto t = ResonanceModel::from_couplings(sys.energy(Level::s), c, Mode::s, Port::S);
    t.scale = 1.7;
    const auto fs = linspace(t.mode_frequency - from_hz(8e6), t.mode_frequency + from_hz(8e6), 401);
    FitOptions fo;
    fo.fit_scale = true;
    auto g = guess_of(t);
    g.scale = 1.0;
    const auto fit = fit_reflectance(synthesize_datasets(t, Port::S, {from_hz(0.1e6), from_hz(0.5e6), from_hz(1e6)}, fs), g, fo);
    for (auto [got, want] : {std::pair{fit.params.gamma, t.gamma}, {fit.params.gamma_other, t.gamma_other},
                             {fit.params.scale, t.scale}, {fit.params.mode_frequency - t.mode_frequency + t.gamma, t.gamma}})
      worst_clean = std::max(worst_clean, std::abs(got / want - 1.0));
  }
  o.check(worst_clean <= 1e-3, "noiseless round trip off by " + fmt(worst_clean));
  const auto clean_small = synthesize_datasets(truth, Port::A, amps, freqs);

  // 30 dB SNR. The acquisition is sized from a pilot fit (its own seed) so
  // that three standard errors of the weakest rate fit inside the 5% band;
  // then each of 20 further seeds must land within 5% on every parameter.
  std::vector<double> noisy_amps;
  for (double hz : {0.01e6, 0.03e6, 0.06e6, 0.1e6, 0.22e6, 0.4e6, 0.8e6}) noisy_amps.push_back(from_hz(hz));
  auto noisy_fit = [&](std::size_t points, std::uint64_t seed) {
    const auto f = linspace(truth.mode_frequency - from_hz(2e6), truth.mode_frequency + from_hz(2e6), points);
    auto data = synthesize_datasets(truth, Port::A, noisy_amps, f);
    add_noise(data, 30.0, seed);
    return fit_reflectance(data, guess_of(truth));
  };
  const auto pilot = noisy_fit(401, 1000);
  const double pilot_se = pilot.standard_errors.gamma_other / truth.gamma_other;
  const double scale = std::max(1.0, std::pow(3.0 * pilot_se / 0.05, 2));
  const std::size_t points = 2 * std::size_t(std::ceil(400.0 * scale / 2.0)) + 1;

  double worst_gamma = 0.0, worst_other = 0.0, worst_freq = 0.0, worst_small = 0.0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto fit = noisy_fit(points, seed);
    worst_gamma = std::max(worst_gamma, std::abs(fit.params.gamma / truth.gamma - 1.0));
    worst_other = std::max(worst_other, std::abs(fit.params.gamma_other / truth.gamma_other - 1.0));
    worst_freq = std::max(worst_freq, std::abs(fit.params.mode_frequency - truth.mode_frequency) / truth.gamma);
    // Same seeds on the smaller fixed design, reported for reference.
    auto small = clean_small;
    add_noise(small, 30.0, seed);
    const auto fs = fit_reflectance(small, guess_of(truth));
    worst_small = std::max(worst_small, std::abs(fs.params.gamma_other / truth.gamma_other - 1.0));
  }
  o.check(worst_gamma <= 0.05, "noisy Gamma off by " + fmt(worst_gamma));
  o.check(worst_other <= 0.05, "noisy Gamma' off by " + fmt(worst_other));
  o.check(worst_freq <= 0.05, "noisy mode frequency off by " + fmt(worst_freq) + " Gamma");
  o.detail << "r(0) = " << fmt(r0.real(), 5) << ", |r(magic)| = " << fmt(r_magic, 3) << ", noiseless worst "
           << fmt(worst_clean, 3) << "; 30 dB, 7 traces x " << points << " points (pilot SE of Gamma' "
           << fmt(100 * pilot_se, 3) << "%), worst over 20 seeds: Gamma " << fmt(100 * worst_gamma, 3) << "%, Gamma' "
           << fmt(100 * worst_other, 3) << "%, frequency " << fmt(100 * worst_freq, 3)
           << "% of Gamma; 5 traces x 401 points would give Gamma' up to " << fmt(100 * worst_small, 3) << "%";
  return o;
}

Outcome raman_check() {
  Outcome o;
  const auto c = PortCouplings::device_defaults();
  const double delta = from_hz(300e6);
  const auto opt = optimal_pump(c, delta);
  o.check(std::abs(opt.peak_transmittance - 0.952) <= 0.003, "peak |t|^2 " + fmt(opt.peak_transmittance));
  o.check(std::abs(to_mhz(opt.closed_form) - 14.04) <= 0.01, "closed form " + fmt(to_mhz(opt.closed_form)));
  o.check(std::abs(to_mhz(opt.numerical) - 14.2) <= 0.3, "numerical " + fmt(to_mhz(opt.numerical)));
  for (double v : {opt.closed_form, opt.numerical})
    o.check(std::abs(to_mhz(v) / 15.35 - 1.0) <= 0.10, "optimum " + fmt(to_mhz(v)) + " MHz vs 15.35");

  const auto sys = diagonalize(MoleculeParams::device_defaults());
  const auto cfg = RamanConfig::on_resonance(sys, c, delta, 0.0);
  const auto grid = linspace(-from_hz(10e6), from_hz(10e6), 2001);
  const auto at_opt = transmission_peaks(cfg.with_rabi(opt.numerical), grid);
  const auto above = transmission_peaks(cfg.with_rabi(1.5 * opt.numerical), grid);
  o.check(at_opt.size() == 1, "expected one peak at the optimum");
  o.check(above.size() == 2, "expected two peaks above the optimum");
  o.detail << "peak |t|^2 = " << fmt(opt.peak_transmittance, 4) << ", Omega_opt closed form " << fmt(to_mhz(opt.closed_form), 4)
           << " MHz, numerical " << fmt(to_mhz(opt.numerical), 4) << " MHz (measured 15.35), peaks at/above optimum "
           << at_opt.size() << "/" << above.size();
  return o;
}

Outcome bell_check() {
  Outcome o;
  auto couplings = PortCouplings::device_defaults();
  couplings.gamma_s_x = 0.0;
  couplings.gamma_a_x = 0.0;
  const auto model = MoleculeModel::build(MoleculeParams::device_defaults(), couplings);
  BellOptions opts;
  opts.window = 20.0 / std::min(couplings.gamma_s, couplings.gamma_a);
  opts.grid_points = 4001;
  const auto thetas = linspace(0.0, 2 * pi, 17);
  std::vector<BellResult> res(thetas.size());
  for (std::size_t k = 0; k < thetas.size(); ++k) res[k] = bell_sequence_moments(thetas[k], model, opts);

  double worst = 0.0, worst_pair = 0.0, cross_at_pi = 0.0;
  for (std::size_t k = 0; k < thetas.size(); ++k) {
    const auto& m = res[k].moments;
    const auto want = state_vector_oracle(thetas[k]);
    for (double d : {std::abs(m.mean_minus - want.mean_minus), std::abs(m.mean_plus - want.mean_plus),
                     std::abs(m.n_minus - want.n_minus), std::abs(m.n_plus - want.n_plus),
                     std::abs(m.cross - want.cross), std::abs(m.pair - want.pair)})
      worst = std::max(worst, d);
    worst_pair = std::max(worst_pair, std::abs(m.pair));
    if (k == 8) cross_at_pi = m.cross.real();
  }
  o.check(worst < 1e-3, "max deviation from the oracle " + fmt(worst));
  o.check(std::abs(cross_at_pi - 0.5) <= 1e-3, "<a-^+ a+> at pi = " + fmt(cross_at_pi));
  o.check(worst_pair < 1e-3, "|<a- a+>| up to " + fmt(worst_pair));
  o.detail << "17 angles, window " << fmt(opts.window * 1e6, 4) << " us: max |ME - oracle| = " << fmt(worst, 3)
           << ", <a-^+ a+>(pi) = " << fmt(cross_at_pi, 6) << ", max |<a- a+>| = " << fmt(worst_pair, 3);
  return o;
}

Outcome autler_check() {
  Outcome o;
  const auto model = MoleculeModel::build(MoleculeParams::device_defaults(), PortCouplings::device_defaults());
  AutlerTownesConfig cfg;
  cfg.probe_detunings = linspace(-from_hz(16e6), from_hz(16e6), 641);
  std::vector<double> pumps;
  for (int k = 3; k <= 20; ++k) pumps.push_back(k * 1e6);
  pumps.push_back(7.65e6);
  std::vector<double> x, y;
  double worst = 0.0, example = 0.0;
  for (double p : pumps) {
    cfg.pump_rabi = from_hz(p);
    const auto res = autler_townes_spectrum(model, cfg);
    const double got = to_hz(res.splitting);
    const double dev = std::abs(got / p - 1.0);
    worst = std::max(worst, dev);
    o.check(dev <= 0.02, fmt(p * 1e-6, 4) + " MHz gives " + fmt(got * 1e-6, 5));
    if (p == 7.65e6) {
      example = got;
    } else {
      x.push_back(p);
      y.push_back(got);
    }
  }
  double mx = 0, my = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    mx += x[k] / double(x.size());
    my += y[k] / double(x.size());
  }
  double sxy = 0, sxx = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxy += (x[k] - mx) * (y[k] - my);
    sxx += (x[k] - mx) * (x[k] - mx);
  }
  const double slope = sxy / sxx;
  o.check(std::abs(slope - 1.0) <= 0.02, "slope " + fmt(slope));
  o.detail << "max relative error over 3..20 MHz " << fmt(100 * worst, 3) << "%, slope " << fmt(slope, 5)
           << ", 7.65 MHz pump gives " << fmt(example * 1e-6, 5) << " MHz";
  return o;
}

Outcome capture_check() {
  Outcome o;
  const auto c = PortCouplings::device_defaults();
  const auto model = MoleculeModel::build(MoleculeParams::device_defaults(), c);
  const double window = 1.02e-6;
  double worst = 0.0;
  for (double rate : {c.gamma_a, c.gamma_s, model.decay.total(Level::a), model.decay.total(Level::s)}) {
    const double quad = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        [&](double t) { return rate * std::exp(-rate * t); }, 0.0, window, 15, 1e-15);
    worst = std::max(worst, std::abs(capture_efficiency(rate, window) - quad));
    // Filtered flux of the decaying field: squared overlap with the matched filter.
    const auto f = matched_filter(rate, window, 4001);
    std::vector<cplx> field(f.filter.size());
    for (std::size_t k = 0; k < field.size(); ++k) field[k] = std::sqrt(rate) * std::exp(-0.5 * rate * f.grid.at(k));
    const double flux = std::norm(mode_match(field, f));
    worst = std::max(worst, std::abs(flux - quad));
  }
  o.check(worst < 1e-9, "quadrature mismatch " + fmt(worst));
  const double eta_a = capture_efficiency(c.gamma_a, window), eta_s = capture_efficiency(c.gamma_s, window);
  o.check(std::abs(eta_a - 0.864) <= 5e-4, "eta_A " + fmt(eta_a));
  o.check(std::abs(eta_s - 0.9999) <= 5e-4, "eta_S " + fmt(eta_s));
  const double tot_a = capture_efficiency(model.decay.total(Level::a), window);
  const double tot_s = capture_efficiency(model.decay.total(Level::s), window);
  o.detail << "max |eta - quadrature| " << fmt(worst, 3) << "; model eta_A = " << fmt(eta_a, 4) << ", eta_S = "
           << fmt(eta_s, 5) << " (total-rate filter " << fmt(tot_a, 4) << ", " << fmt(tot_s, 5)
           << "); quoted 0.748 and 0.989 do not follow from 1 - exp(-Gamma T) with the tabulated rates";
  return o;
}

Outcome shots_check() {
  Outcome o;
  const auto truth = state_vector_oracle(2 * pi / 3);
  auto run = [&](std::uint64_t n) {
    ShotOptions so;
    so.shots = n;
    so.noise_photons = 10.0;
    so.seed = 2024;
    return shot_estimator(truth, so);
  };
  const auto big = run(10'000'000);
  const auto small = run(100'000);
  const auto& e = *big.errors;
  const std::pair<double, double> dev[] = {{std::abs(big.mean_minus - truth.mean_minus), e.mean_minus},
                                           {std::abs(big.mean_plus - truth.mean_plus), e.mean_plus},
                                           {std::abs(big.n_minus - truth.n_minus), e.n_minus},
                                           {std::abs(big.n_plus - truth.n_plus), e.n_plus},
                                           {std::abs(big.cross - truth.cross), e.cross},
                                           {std::abs(big.pair - truth.pair), e.pair}};
  double worst_z = 0.0;
  for (auto [d, se] : dev) worst_z = std::max(worst_z, d / se);
  o.check(worst_z < 3.0, "deviation " + fmt(worst_z) + " standard errors");
  const auto& s = *small.errors;
  const double ratios[] = {s.mean_minus / e.mean_minus, s.mean_plus / e.mean_plus, s.n_minus / e.n_minus,
                           s.n_plus / e.n_plus,         s.cross / e.cross,         s.pair / e.pair};
  double worst_ratio = 0.0;
  for (double r : ratios) worst_ratio = std::max(worst_ratio, std::abs(r / 10.0 - 1.0));
  o.check(worst_ratio <= 0.10, "standard error scaling off by " + fmt(worst_ratio));
  o.detail << "N = 10, 1e7 shots: worst deviation " << fmt(worst_z, 3) << " SE; SE(1e5)/SE(1e7) within "
           << fmt(100 * worst_ratio, 3) << "% of 10";
  return o;
}

Outcome determinism_check() {
  Outcome o;
  namespace fs = std::filesystem;
  const auto root = fs::temp_directory_path() / ("wgmol_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  RunConfig cfg;
  cfg.seed = 17;
  std::size_t compared = 0;
  for (const auto& id : known_figures()) {
    const auto a = reproduce_figure(id, cfg, {root / (id + "_1")});
    const auto b = reproduce_figure(id, cfg, {root / (id + "_2")});
    o.check(a.files.size() == b.files.size() && !a.files.empty(), id + " file lists differ");
    for (std::size_t k = 0; k < std::min(a.files.size(), b.files.size()); ++k) {
      const bool same = a.files[k].path == b.files[k].path && a.files[k].sha256 == b.files[k].sha256 &&
                        io::read_file(root / (id + "_1") / a.files[k].path) ==
                            io::read_file(root / (id + "_2") / b.files[k].path);
      o.check(same, id + "/" + a.files[k].path + " differs");
      ++compared;
    }
  }
  fs::remove_all(root);
  o.detail << compared << " files across " << known_figures().size() << " figure recipes compared byte for byte";
  return o;
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"eigenstructure", eigenstructure},   {"coupling coefficients", coupling_coefficients_check},
      {"selectivity", selectivity},         {"reflectance", reflectance_check},
      {"Raman conversion", raman_check},    {"Bell moments", bell_check},
      {"Autler-Townes", autler_check},      {"mode capture", capture_check},
      {"shot estimation", shots_check},     {"determinism", determinism_check}};
  int failures = 0, index = 0;
  for (const auto& [name, fn] : criteria) {
    ++index;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = fn();
    } catch (const std::exception& e) {
      out.pass = false;
      out.detail << "exception: " << e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failures += !out.pass;
    std::printf("%s %d %s: %s (%.1f s)\n", out.pass ? "PASS" : "FAIL", index, name, out.detail.str().c_str(), secs);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
