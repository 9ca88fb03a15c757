#pragma once

// Task dispatch, figure recipes and run manifests. Every task first builds
// its files in memory; only then are they written, so a failing task leaves
// nothing behind.

#include <openssl/evp.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "wgmol/config.hpp"
#include "wgmol/errors.hpp"
#include "wgmol/io.hpp"
#include "wgmol/lindblad.hpp"
#include "wgmol/mode_match.hpp"
#include "wgmol/molecule.hpp"
#include "wgmol/moments.hpp"
#include "wgmol/parallel.hpp"
#include "wgmol/raman.hpp"
#include "wgmol/scattering.hpp"
#include "wgmol/shots.hpp"
#include "wgmol/spectroscopy.hpp"

namespace wgmol {

inline constexpr const char* kToolkitVersion = "0.1.0";
inline constexpr const char* kOutDirEnv = "WGMOL_OUT_DIR";
inline constexpr const char* kDefaultOutDir = "wgmol-out";

struct Artifact {
  std::string name;
  std::string content;
};

struct Artifacts {
  std::vector<Artifact> files;
  Warnings warnings;

  void add(std::string name, std::string content) { files.push_back({std::move(name), std::move(content)}); }
  void add_json(std::string name, const io::json& j) { add(std::move(name), j.dump(2) + "\n"); }
  void merge(Artifacts other) {
    for (auto& f : other.files) files.push_back(std::move(f));
    for (auto& w : other.warnings) warnings.push_back(std::move(w));
  }
};

struct ManifestEntry {
  std::string path;
  std::string sha256;
  std::uintmax_t bytes = 0;
};

struct RunManifest {
  io::json config;
  std::string version = kToolkitVersion;
  std::string task;    // task name, or "figure:<id>"
  std::uint64_t seed = 0;
  double wall_seconds = 0.0;
  std::vector<ManifestEntry> files;
  Warnings warnings;
  std::filesystem::path directory;

  io::json to_json() const {
    io::json j;
    j["version"] = version;
    j["task"] = task;
    j["seed"] = seed;
    j["wall_seconds"] = wall_seconds;
    j["config"] = config;
    j["warnings"] = warnings;
    io::json f = io::json::array();
    for (const auto& e : files) f.push_back({{"path", e.path}, {"sha256", e.sha256}, {"bytes", e.bytes}});
    j["files"] = f;
    return j;
  }
};

inline std::string sha256_hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw Error("SHA-256 computation failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int k = 0; k < len; ++k) {
    out += hex[digest[k] >> 4];
    out += hex[digest[k] & 0xf];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Small helpers

namespace detail {

inline std::vector<double> angular(const std::vector<double>& hz) {
  std::vector<double> out;
  out.reserve(hz.size());
  for (double v : hz) out.push_back(from_hz(v));
  return out;
}

inline Mode mode_of(const std::string& s) { return s == "s" ? Mode::s : Mode::a; }

inline io::json resonance_json(const ResonanceModel& m) {
  return {{"mode_frequency_hz", to_hz(m.mode_frequency)},
          {"gamma_hz", to_hz(m.gamma)},
          {"gamma_other_hz", to_hz(m.gamma_other)},
          {"gamma_phi_hz", to_hz(m.gamma_phi)},
          {"scale", m.scale}};
}

inline std::vector<std::string> moment_header(const std::string& x) {
  return {x,         "mean_minus_re", "mean_minus_im", "mean_plus_re", "mean_plus_im", "n_minus",
          "n_plus",  "cross_re",      "cross_im",      "pair_re",      "pair_im"};
}

inline std::vector<double> moment_row(double x, const MomentSet& m) {
  return {x,        m.mean_minus.real(), m.mean_minus.imag(), m.mean_plus.real(), m.mean_plus.imag(), m.n_minus,
          m.n_plus, m.cross.real(),      m.cross.imag(),      m.pair.real(),      m.pair.imag()};
}

inline io::json moment_json(const MomentSet& m) {
  io::json j;
  j["mean_minus"] = io::complex_json(m.mean_minus);
  j["mean_plus"] = io::complex_json(m.mean_plus);
  j["n_minus"] = m.n_minus;
  j["n_plus"] = m.n_plus;
  j["cross"] = io::complex_json(m.cross);
  j["pair"] = io::complex_json(m.pair);
  j["normalization"] = m.normalization;
  if (m.errors) {
    const auto& e = *m.errors;
    j["standard_errors"] = {{"mean_minus", e.mean_minus}, {"mean_plus", e.mean_plus}, {"n_minus", e.n_minus},
                            {"n_plus", e.n_plus},         {"cross", e.cross},         {"pair", e.pair}};
  }
  return j;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Tasks

inline Artifacts task_eigen(const RunConfig& c) {
  const auto p = c.molecule_params();
  const auto sys = diagonalize(p);
  Artifacts out;
  io::CsvTable all({"index", "manifold", "energy_Hz", "symmetry"});
  for (std::size_t k = 0; k < sys.energies.size(); ++k)
    all.row({std::to_string(k), std::to_string(sys.manifold[k]), io::format_number(to_hz(sys.energies[k])),
             std::string(to_string(sys.symmetry[k]))});
  out.add("eigenvalues.csv", all.str());

  io::CsvTable named({"level", "energy_Hz", "symmetry"});
  for (Level l : kCanonicalLevels)
    if (sys.has(l))
      named.row({std::string(to_string(l)), io::format_number(to_hz(sys.energy(l))),
                 std::string(to_string(sys.symmetry_of(l)))});
  out.add("levels.csv", named.str());

  io::json j;
  j["n_levels"] = sys.n_levels;
  io::json lv = io::json::object();
  for (Level l : kCanonicalLevels)
    if (sys.has(l)) lv[std::string(to_string(l))] = to_hz(sys.energy(l));
  j["levels_hz"] = lv;
  j["warnings"] = sys.warnings;
  out.add_json("eigen.json", j);
  out.warnings = sys.warnings;
  return out;
}

inline Artifacts task_dipoles(const RunConfig& c) {
  const auto p = c.molecule_params();
  const auto sys = diagonalize(p);
  const auto d = dipole_matrices(sys, p);
  Artifacts out;
  auto matrix_csv = [](const Matrix6d& m) {
    std::vector<std::string> header = {"level"};
    for (Level l : kCanonicalLevels) header.emplace_back(to_string(l));
    io::CsvTable t(header);
    for (Level l : kCanonicalLevels) {
      std::vector<std::string> row = {std::string(to_string(l))};
      for (Level k : kCanonicalLevels) row.push_back(io::format_number(m(index_of(l), index_of(k))));
      t.row(row);
    }
    return t.str();
  };
  out.add("dipoles_S.csv", matrix_csv(d.d_s));
  out.add("dipoles_A.csv", matrix_csv(d.d_a));
  if (d.d_s_unnormalized) out.add("dipoles_S_unnormalized.csv", matrix_csv(*d.d_s_unnormalized));
  if (d.d_a_unnormalized) out.add("dipoles_A_unnormalized.csv", matrix_csv(*d.d_a_unnormalized));

  io::CsvTable t({"lower", "upper", "frequency_Hz", "port", "dipole"});
  for (const auto& tr : transition_table(sys, d))
    t.row({std::string(to_string(tr.from)), std::string(to_string(tr.to)), io::format_number(to_hz(tr.frequency)),
           std::string(to_string(tr.port)), io::format_number(tr.dipole)});
  out.add("transitions.csv", t.str());

  io::json j;
  if (p.identical_transmons() && p.g > 0.0) {
    const auto cc = coupling_coefficients(p);
    j["coefficients"] = {{"c_s_minus", cc.s_minus}, {"c_s_plus", cc.s_plus}, {"c_a_minus", cc.a_minus},
                         {"c_a_plus", cc.a_plus}};
    j["ratio_s_plus_over_s_minus"] = cc.s_plus / cc.s_minus;
  } else {
    out.warnings.push_back("closed-form coupling coefficients need identical transmons and g > 0");
  }
  if (d.d_s_unnormalized) {
    const double num = (*d.d_s_unnormalized)(index_of(Level::s), index_of(Level::two_plus_upper));
    const double den = (*d.d_s_unnormalized)(index_of(Level::s), index_of(Level::two_plus_lower));
    if (den != 0.0) j["unnormalized_ratio_s"] = std::abs(num / den);
  }
  j["warnings"] = out.warnings;
  out.add_json("dipoles.json", j);
  return out;
}

inline Artifacts task_reflectance(const RunConfig& c) {
  const auto& r = c.reflectance;
  const Mode mode = detail::mode_of(r.state);
  const Port port = *parse_port(r.port);
  const auto pc = c.port_couplings();
  const auto sys = diagonalize(c.molecule_params());
  const double w = sys.energy(level_of(mode));
  const auto model = ResonanceModel::from_couplings(w, pc, mode, port);
  const auto freqs = linspace(w - 0.5 * from_hz(r.span_hz), w + 0.5 * from_hz(r.span_hz), std::size_t(r.points));

  Artifacts out;
  io::CsvTable t({"amplitude_Hz", "frequency_Hz", "detuning_Hz", "re", "im", "abs"});
  for (double amp_hz : r.amplitudes_hz.resolve())
    for (double f : freqs) {
      const cplx v = reflectance(model, f, from_hz(amp_hz));
      t.row({amp_hz, to_hz(f), to_hz(f - w), v.real(), v.imag(), std::abs(v)});
    }
  out.add("reflectance.csv", t.str());

  io::json j;
  j["state"] = r.state;
  j["port"] = r.port;
  j["model"] = detail::resonance_json(model);
  j["model_version"] = kReflectanceModelVersion;
  j["r_resonant_weak"] = io::complex_json(reflectance(model, w, 0.0));
  j["iq_circle_diameter"] = iq_circle_diameter(pc, mode, port);
  try {
    j["magic_amplitude_hz"] = to_hz(magic_amplitude(pc, mode, port));
  } catch (const NoSolution& e) {
    j["magic_amplitude_hz"] = nullptr;
    out.warnings.push_back(e.what());
  }
  if (pc.cross(mode) > 0.0) j["selectivity"] = pc.selectivity(mode);
  j["warnings"] = out.warnings;
  out.add_json("reflectance.json", j);
  return out;
}

inline Artifacts task_fit(const RunConfig& c) {
  const auto& f = c.fit;
  const Mode mode = detail::mode_of(f.state);
  const Port port = *parse_port(f.port);
  const auto pc = c.port_couplings();
  const auto sys = diagonalize(c.molecule_params());
  const double w = sys.energy(level_of(mode));
  auto truth = ResonanceModel::from_couplings(w, pc, mode, port);

  std::vector<ReflectanceDataset> data;
  Artifacts out;
  if (!f.data.empty()) {
    for (const auto& path : f.data) data.push_back(io::load_spectrum(path));
  } else {
    const auto freqs = linspace(w - 0.5 * from_hz(f.span_hz), w + 0.5 * from_hz(f.span_hz), std::size_t(f.points));
    data = synthesize_datasets(truth, port, detail::angular(f.amplitudes_hz.resolve()), freqs);
    if (f.add_noise) add_noise(data, f.snr_db, c.seed);
    io::CsvTable t({"amplitude_Hz", "frequency_Hz", "re", "im"});
    for (const auto& d : data)
      for (std::size_t k = 0; k < d.spectrum.size(); ++k)
        t.row({to_hz(d.amplitude), to_hz(d.spectrum.frequencies[k]), d.spectrum.values[k].real(),
               d.spectrum.values[k].imag()});
    out.add("fit_data.csv", t.str());
  }

  // Start away from the configured rates so the fit has something to do.
  ResonanceModel guess = truth;
  guess.gamma *= 1.25;
  guess.gamma_other = std::max(0.7 * guess.gamma_other, 1e-3 * guess.gamma);
  guess.mode_frequency += 0.05 * truth.gamma1();
  if (f.fit_gamma_phi && guess.gamma_phi == 0.0) guess.gamma_phi = 0.01 * truth.gamma1();
  FitOptions opts;
  opts.fit_gamma_phi = f.fit_gamma_phi;
  opts.fit_scale = f.fit_scale;
  opts.max_iterations = int(f.max_iterations);
  opts.simplex.max_iterations = int(f.max_iterations);
  const auto res = fit_reflectance(data, guess, opts);

  io::CsvTable curves({"amplitude_Hz", "frequency_Hz", "data_re", "data_im", "model_re", "model_im"});
  for (const auto& d : data)
    for (std::size_t k = 0; k < d.spectrum.size(); ++k) {
      const cplx m = reflectance(res.params, d.spectrum.frequencies[k], res.params.scale * d.amplitude);
      curves.row({to_hz(d.amplitude), to_hz(d.spectrum.frequencies[k]), d.spectrum.values[k].real(),
                  d.spectrum.values[k].imag(), m.real(), m.imag()});
    }
  out.add("fit_curves.csv", curves.str());

  io::json j;
  j["params"] = detail::resonance_json(res.params);
  j["standard_errors"] = detail::resonance_json(res.standard_errors);
  j["initial_guess"] = detail::resonance_json(guess);
  if (f.data.empty()) j["truth"] = detail::resonance_json(truth);
  j["residual_norm"] = res.residual_norm;
  j["converged"] = res.converged;
  j["iterations"] = res.iterations;
  j["rank_deficient"] = res.rank_deficient;
  j["seed"] = c.seed;
  j["warnings"] = res.warnings;
  out.warnings.insert(out.warnings.end(), res.warnings.begin(), res.warnings.end());
  out.add_json("fit_result.json", j);
  return out;
}

inline Artifacts task_raman(const RunConfig& c) {
  const auto& ra = c.raman;
  const auto sys = diagonalize(c.molecule_params());
  const auto pc = c.port_couplings();
  auto cfg = RamanConfig::on_resonance(sys, pc, from_hz(ra.delta_hz), 0.0);
  cfg.driven = detail::mode_of(ra.driven);
  const auto rabi = detail::angular(ra.rabi_hz.resolve());
  const auto probe = detail::angular(ra.probe_hz.resolve());
  const auto map = sweep_pump_amplitude(cfg, rabi, probe, int(c.workers));

  Artifacts out;
  io::CsvTable t({"rabi_Hz", "probe_detuning_Hz", "t2", "r2"});
  for (std::size_t i = 0; i < rabi.size(); ++i)
    for (std::size_t k = 0; k < probe.size(); ++k)
      t.row({to_hz(rabi[i]), to_hz(probe[k]), map.t2(Eigen::Index(i), Eigen::Index(k)),
             map.r2(Eigen::Index(i), Eigen::Index(k))});
  out.add("raman_map.csv", t.str());

  io::CsvTable b({"rabi_Hz", "peak_detuning_Hz", "t2", "r2"});
  for (double om : rabi)
    for (const auto& pk : transmission_peaks(cfg.with_rabi(om), probe))
      b.row({to_hz(om), to_hz(pk.detuning), pk.t2, pk.r2});
  out.add("raman_peaks.csv", b.str());

  io::json j;
  j["delta_hz"] = ra.delta_hz;
  j["driven"] = ra.driven;
  j["rabi_hz"] = ra.rabi_hz.resolve();
  j["probe_detuning_hz"] = ra.probe_hz.resolve();
  j["peak_transmittance_bound"] = peak_transmittance_bound(pc);
  const auto opt = optimal_pump(pc, from_hz(ra.delta_hz), cfg.driven);
  j["optimal_pump"] = {{"closed_form_hz", to_hz(opt.closed_form)},
                       {"matched_hz", to_hz(opt.matched)},
                       {"numerical_hz", to_hz(opt.numerical)},
                       {"peak_transmittance", opt.peak_transmittance},
                       {"peak_detuning_hz", to_hz(opt.peak_detuning)}};
  j["pump_plus_hz"] = to_hz(cfg.omega_plus);
  j["pump_minus_hz"] = to_hz(cfg.omega_minus);
  out.add_json("raman.json", j);
  return out;
}

inline BellOptions bell_options(const RunConfig& c) {
  BellOptions o;
  o.window = c.bell.window_s;
  o.grid_points = std::size_t(c.bell.grid_points);
  o.normalization = *parse_normalization(c.bell.normalization);
  o.with_pi2 = c.bell.with_pi2;
  o.evolve = c.evolve_options();
  return o;
}

inline Artifacts bell_curves(const RunConfig& c, const std::vector<double>& thetas, bool with_pi2,
                             const std::string& suffix) {
  const auto model = c.molecule_model();
  auto opts = bell_options(c);
  opts.with_pi2 = with_pi2;
  std::vector<BellResult> res(thetas.size());
  parallel_for(thetas.size(), int(c.workers), [&](std::size_t k) { res[k] = bell_sequence_moments(thetas[k], model, opts); });

  Artifacts out;
  io::CsvTable t(detail::moment_header("theta")), raw(detail::moment_header("theta")),
      oracle(detail::moment_header("theta"));
  for (std::size_t k = 0; k < thetas.size(); ++k) {
    t.row(detail::moment_row(thetas[k], res[k].moments));
    raw.row(detail::moment_row(thetas[k], res[k].raw));
    oracle.row(detail::moment_row(thetas[k], state_vector_oracle(thetas[k], with_pi2)));
    for (const auto& w : res[k].warnings) out.warnings.push_back(w);
  }
  std::sort(out.warnings.begin(), out.warnings.end());
  out.warnings.erase(std::unique(out.warnings.begin(), out.warnings.end()), out.warnings.end());
  out.add("moments" + suffix + ".csv", t.str());
  out.add("moments_raw" + suffix + ".csv", raw.str());
  out.add("moments_oracle" + suffix + ".csv", oracle.str());

  io::json j;
  j["with_pi2"] = with_pi2;
  j["window_s"] = opts.window;
  j["grid_points"] = opts.grid_points;
  j["normalization"] = std::string(to_string(opts.normalization));
  if (!res.empty()) {
    j["capture_efficiency_minus"] = res[0].efficiency_minus;
    j["capture_efficiency_plus"] = res[0].efficiency_plus;
    j["branching_minus"] = res[0].branching_minus;
    j["branching_plus"] = res[0].branching_plus;
  }
  j["warnings"] = out.warnings;
  out.add_json("bell" + suffix + ".json", j);
  return out;
}

inline Artifacts task_bell(const RunConfig& c) { return bell_curves(c, c.bell.theta.resolve(), c.bell.with_pi2, ""); }

inline Artifacts task_shots(const RunConfig& c) {
  const auto& s = c.shots;
  MomentSet truth;
  if (s.source == "oracle") {
    truth = state_vector_oracle(s.theta, s.with_pi2);
  } else {
    auto opts = bell_options(c);
    opts.with_pi2 = s.with_pi2;
    truth = bell_sequence_moments(s.theta, c.molecule_model(), opts).moments;
  }
  ShotOptions so;
  so.shots = s.shots;
  so.noise_photons = s.noise_photons;
  so.seed = c.seed;
  so.workers = int(c.workers);
  const auto est = shot_estimator(truth, so);

  Artifacts out;
  io::CsvTable t({"moment", "truth_re", "truth_im", "estimate_re", "estimate_im", "standard_error"});
  const auto& e = *est.errors;
  auto row = [&](const char* name, cplx a, cplx b, double se) {
    t.row({std::string(name), io::format_number(a.real()), io::format_number(a.imag()), io::format_number(b.real()),
           io::format_number(b.imag()), io::format_number(se)});
  };
  row("mean_minus", truth.mean_minus, est.mean_minus, e.mean_minus);
  row("mean_plus", truth.mean_plus, est.mean_plus, e.mean_plus);
  row("n_minus", truth.n_minus, est.n_minus, e.n_minus);
  row("n_plus", truth.n_plus, est.n_plus, e.n_plus);
  row("cross", truth.cross, est.cross, e.cross);
  row("pair", truth.pair, est.pair, e.pair);
  out.add("shots.csv", t.str());

  io::json j;
  j["shots"] = s.shots;
  j["noise_photons"] = s.noise_photons;
  j["theta"] = s.theta;
  j["with_pi2"] = s.with_pi2;
  j["source"] = s.source;
  j["seed"] = c.seed;
  j["truth"] = detail::moment_json(truth);
  j["estimate"] = detail::moment_json(est);
  out.add_json("shots.json", j);
  return out;
}

inline AutlerTownesConfig autler_config(const RunConfig& c) {
  const auto& a = c.autler;
  AutlerTownesConfig at;
  at.probe_upper = *parse_level(a.probe_upper);
  at.probe_port = *parse_port(a.probe_port);
  at.probe_rabi = from_hz(a.probe_rabi_hz);
  at.pump_upper = *parse_level(a.pump_upper);
  at.pump_port = *parse_port(a.pump_port);
  at.pump_detuning = from_hz(a.pump_detuning_hz);
  at.probe_detunings = detail::angular(a.probe_hz.resolve());
  at.workers = int(c.workers);
  return at;
}

inline Artifacts task_autler(const RunConfig& c) {
  const auto model = c.molecule_model();
  auto at = autler_config(c);
  const auto pumps = c.autler.pump_rabi_hz.resolve();

  Artifacts out;
  io::CsvTable spec({"pump_rabi_Hz", "probe_detuning_Hz", "re", "im", "abs"});
  io::CsvTable split({"pump_rabi_Hz", "fitted_splitting_Hz", "dip_separation_Hz", "fitted_upper_linewidth_Hz",
                      "fitted_pump_detuning_Hz"});
  std::vector<double> x, y;
  for (double p : pumps) {
    at.pump_rabi = from_hz(p);
    const auto res = autler_townes_spectrum(model, at);
    for (std::size_t k = 0; k < res.detunings.size(); ++k) {
      const cplx v = res.spectrum.values[k];
      spec.row({p, to_hz(res.detunings[k]), v.real(), v.imag(), std::abs(v)});
    }
    split.row({p, to_hz(res.splitting), to_hz(res.dip_separation), to_hz(res.fitted_upper_linewidth),
               to_hz(res.fitted_pump_detuning)});
    for (const auto& w : res.warnings) out.warnings.push_back(io::format_number(p) + " Hz pump: " + w);
    x.push_back(p);
    y.push_back(to_hz(res.splitting));
  }
  out.add("autler_spectra.csv", spec.str());
  out.add("autler_splitting.csv", split.str());

  io::json j;
  j["probe"] = c.autler.probe_upper + " on " + c.autler.probe_port;
  j["pump"] = c.autler.probe_upper + "<->" + c.autler.pump_upper + " on " + c.autler.pump_port;
  j["probe_rabi_hz"] = to_hz(at.probe_rabi > 0 ? at.probe_rabi
                                                : 0.1 * model.decay.rate(at.probe_upper, Level::ground, at.probe_port));
  if (x.size() >= 2) {
    double mx = 0, my = 0;
    for (std::size_t k = 0; k < x.size(); ++k) {
      mx += x[k];
      my += y[k];
    }
    mx /= double(x.size());
    my /= double(x.size());
    double sxy = 0, sxx = 0;
    for (std::size_t k = 0; k < x.size(); ++k) {
      sxy += (x[k] - mx) * (y[k] - my);
      sxx += (x[k] - mx) * (x[k] - mx);
    }
    if (sxx > 0) {
      j["slope"] = sxy / sxx;
      j["intercept_hz"] = my - sxy / sxx * mx;
    }
  }
  j["warnings"] = out.warnings;
  out.add_json("autler.json", j);
  return out;
}

inline Artifacts compute_task(const RunConfig& c) {
  validate(c);
  const std::string& t = c.task;
  try {
    if (t == "eigen") return task_eigen(c);
    if (t == "dipoles") return task_dipoles(c);
    if (t == "reflectance") return task_reflectance(c);
    if (t == "fit") return task_fit(c);
    if (t == "raman") return task_raman(c);
    if (t == "bell") return task_bell(c);
    if (t == "autler") return task_autler(c);
    if (t == "shots") return task_shots(c);
  } catch (const InvalidParameter& e) {
    throw InvalidParameter("task " + t + ": " + e.what());
  } catch (const IoError& e) {
    throw IoError("task " + t + ": " + e.what());
  } catch (const NumericalError& e) {
    throw NumericalError("task " + t + ": " + e.what());
  }
  throw InvalidParameter("unknown task '" + t + "'");
}

// ---------------------------------------------------------------------------
// Figure recipes (theory curves only)

inline const std::vector<std::string>& known_figures() {
  static const std::vector<std::string> f = {"fig2", "fig3", "fig4", "figS2", "figS3", "figS5"};
  return f;
}

inline Artifacts figure_fig2(const RunConfig& base) {
  Artifacts out;
  // Low-power spectra of both modes, probed from each port.
  const auto sys = diagonalize(base.molecule_params());
  const auto pc = base.port_couplings();
  io::CsvTable lines({"port", "state", "frequency_Hz", "detuning_Hz", "re", "im", "abs"});
  for (Port port : {Port::A, Port::S})
    for (Mode mode : {Mode::a, Mode::s}) {
      const double w = sys.energy(level_of(mode));
      const auto m = ResonanceModel::from_couplings(w, pc, mode, port);
      for (double f : linspace(w - from_hz(5e6), w + from_hz(5e6), 801)) {
        const cplx v = reflectance(m, f, 0.0);
        lines.row({std::string(to_string(port)), std::string(to_string(mode)), io::format_number(to_hz(f)),
                   io::format_number(to_hz(f - w)), io::format_number(v.real()), io::format_number(v.imag()),
                   io::format_number(std::abs(v))});
      }
    }
  out.add("fig2_spectra.csv", lines.str());

  // Power series (IQ circles) at each over-coupled resonance.
  for (const auto& [state, port] : {std::pair{"a", "A"}, std::pair{"s", "S"}}) {
    RunConfig c = base;
    c.task = "reflectance";
    c.reflectance.state = state;
    c.reflectance.port = port;
    c.reflectance.span_hz = 8e6;
    c.reflectance.points = 801;
    c.reflectance.amplitudes_hz = Grid::list({0.0, 0.1e6, 0.2e6, 0.3e6, 0.5e6, 1e6, 2e6});
    auto a = task_reflectance(c);
    for (auto& f : a.files) f.name = "fig2_" + std::string(state) + "_" + f.name;
    out.merge(std::move(a));
  }
  return out;
}

inline Artifacts figure_figS2(const RunConfig& base) {
  const auto sys = diagonalize(base.molecule_params());
  const auto pc = base.port_couplings();
  const auto ma = ResonanceModel::from_couplings(sys.energy(Level::a), pc, Mode::a, Port::A);
  const auto ms = ResonanceModel::from_couplings(sys.energy(Level::s), pc, Mode::s, Port::S);
  Artifacts out;
  io::CsvTable t({"amplitude_Hz", "abs_r_a_port_A", "abs_r_s_port_S"});
  // Log-spaced amplitudes, 10 kHz to 10 MHz.
  for (int k = 0; k <= 300; ++k) {
    const double amp = 1e4 * std::pow(10.0, 3.0 * k / 300.0);
    t.row({amp, std::abs(reflectance(ma, ma.mode_frequency, from_hz(amp))),
           std::abs(reflectance(ms, ms.mode_frequency, from_hz(amp)))});
  }
  out.add("figS2_resonant_reflectance.csv", t.str());
  io::json j;
  j["magic_amplitude_a_hz"] = to_hz(magic_amplitude(pc, Mode::a, Port::A));
  j["magic_amplitude_s_hz"] = to_hz(magic_amplitude(pc, Mode::s, Port::S));
  out.add_json("figS2.json", j);
  return out;
}

inline Artifacts figure_fig3(const RunConfig& base) {
  RunConfig c = base;
  c.task = "raman";
  c.raman = RamanSection{};
  auto a = task_raman(c);
  for (auto& f : a.files) f.name = "fig3_" + f.name;
  return a;
}

inline Artifacts figure_fig4(const RunConfig& base) {
  RunConfig c = base;
  c.task = "bell";
  c.bell = BellSection{};
  const auto thetas = c.bell.theta.resolve();
  Artifacts out = bell_curves(c, thetas, true, "_with_pi2");
  out.merge(bell_curves(c, thetas, false, "_without_pi2"));
  for (auto& f : out.files) f.name = "fig4_" + f.name;
  return out;
}

inline Artifacts figure_figS3(const RunConfig& base) {
  RunConfig c = base;
  c.task = "autler";
  c.autler = AutlerSection{};
  c.autler.pump_rabi_hz = Grid::list({7.65e6});
  auto single = task_autler(c);
  for (auto& f : single.files) f.name = "figS3_example_" + f.name;
  c.autler.pump_rabi_hz = Grid::range(3e6, 20e6, 18);
  auto sweep = task_autler(c);
  for (auto& f : sweep.files) f.name = "figS3_sweep_" + f.name;
  single.merge(std::move(sweep));
  return single;
}

inline Artifacts figure_figS5(const RunConfig& base) {
  RunConfig c = base;
  c.task = "dipoles";
  auto a = task_dipoles(c);
  Artifacts out;
  for (auto& f : a.files)
    if (f.name == "transitions.csv") out.add("figS5_transitions.csv", f.content);
  auto e = task_eigen(c);
  for (auto& f : e.files)
    if (f.name == "levels.csv") out.add("figS5_levels.csv", f.content);
  return out;
}

inline Artifacts compute_figure(const std::string& id, const RunConfig& c) {
  validate(c);
  if (id == "fig2") return figure_fig2(c);
  if (id == "fig3") return figure_fig3(c);
  if (id == "fig4") return figure_fig4(c);
  if (id == "figS2") return figure_figS2(c);
  if (id == "figS3") return figure_figS3(c);
  if (id == "figS5") return figure_figS5(c);
  throw InvalidParameter("unknown figure '" + id + "' (known: fig2, fig3, fig4, figS2, figS3, figS5)");
}

// ---------------------------------------------------------------------------
// Output directory handling

struct OutputOptions {
  std::filesystem::path dir;  // empty: config, then $WGMOL_OUT_DIR, then ./wgmol-out
  bool overwrite = false;     // replace a previous run's files (only those its manifest lists)
};

inline std::filesystem::path resolve_output_dir(const OutputOptions& o, const RunConfig& c) {
  if (!o.dir.empty()) return o.dir;
  if (!c.output_dir.empty()) return c.output_dir;
  if (const char* env = std::getenv(kOutDirEnv); env && *env) return env;
  return kDefaultOutDir;
}

namespace detail {

inline void prepare_output_dir(const std::filesystem::path& dir, bool overwrite, bool& created) {
  namespace fs = std::filesystem;
  std::error_code ec;
  created = false;
  if (!fs::exists(dir, ec)) {
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
    created = true;
    return;
  }
  if (!fs::is_directory(dir, ec)) throw IoError(dir.string() + " exists and is not a directory");
  if (fs::is_empty(dir, ec)) return;
  const auto manifest = dir / "manifest.json";
  if (!overwrite || !fs::exists(manifest))
    throw IoError("output directory " + dir.string() + " is not empty (use --overwrite to replace a previous run)");
  io::json prior;
  try {
    prior = io::json::parse(io::read_file(manifest));
  } catch (const io::json::exception& e) {
    throw IoError("cannot read prior manifest " + manifest.string() + ": " + e.what());
  }
  if (!prior.contains("files") || !prior["files"].is_array()) throw IoError("prior manifest lists no files");
  for (const auto& f : prior["files"]) {
    const auto name = f.value("path", std::string());
    if (name.empty() || fs::path(name).has_parent_path() || name == "..") continue;
    fs::remove(dir / name, ec);
  }
  fs::remove(manifest, ec);
  if (!fs::is_empty(dir, ec))
    throw IoError("output directory " + dir.string() + " holds files not written by a previous run");
}

}  // namespace detail

/// Writes the artifacts and a manifest. On failure nothing written by this
/// call is left behind.
inline RunManifest write_run(const Artifacts& a, const RunConfig& c, const std::string& label,
                             const OutputOptions& o, double wall_seconds) {
  namespace fs = std::filesystem;
  const fs::path dir = resolve_output_dir(o, c);
  bool created = false;
  detail::prepare_output_dir(dir, o.overwrite, created);

  RunManifest m;
  m.config = to_json(c);
  m.task = label;
  m.seed = c.seed;
  m.wall_seconds = wall_seconds;
  m.warnings = a.warnings;
  m.directory = dir;
  std::vector<fs::path> written;
  try {
    for (const auto& f : a.files) {
      if (f.name == "manifest.json" || fs::path(f.name).has_parent_path())
        throw Error("invalid artifact name " + f.name);
      const auto path = dir / f.name;
      written.push_back(path);
      io::write_file(path, f.content);
      m.files.push_back({f.name, sha256_hex(f.content), f.content.size()});
    }
    written.push_back(dir / "manifest.json");
    io::write_file(dir / "manifest.json", m.to_json().dump(2) + "\n");
  } catch (...) {
    std::error_code ec;
    for (const auto& p : written) fs::remove(p, ec);
    if (created) fs::remove(dir, ec);
    throw;
  }
  return m;
}

inline RunManifest run_task(const RunConfig& c, const OutputOptions& o = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto a = compute_task(c);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return write_run(a, c, c.task, o, wall);
}

inline RunManifest reproduce_figure(const std::string& id, const RunConfig& c, const OutputOptions& o = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto a = compute_figure(id, c);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return write_run(a, c, "figure:" + id, o, wall);
}

}  // namespace wgmol
