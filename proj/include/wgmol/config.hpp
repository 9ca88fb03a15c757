#pragma once

// Run configuration: a JSON document whose frequencies are given in Hz
// (cyclic, i.e. value/2pi). Values stay in Hz inside RunConfig and are
// converted to angular units when module objects are built.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "wgmol/couplings.hpp"
#include "wgmol/errors.hpp"
#include "wgmol/io.hpp"
#include "wgmol/lindblad.hpp"
#include "wgmol/molecule.hpp"
#include "wgmol/moments.hpp"
#include "wgmol/scattering.hpp"
#include "wgmol/units.hpp"

namespace wgmol {

/// Either an explicit list or an inclusive linear range.
struct Grid {
  std::vector<double> values;
  double start = 0.0;
  double stop = 0.0;
  std::int64_t points = 0;  // > 0 selects the range form

  static Grid range(double start, double stop, std::int64_t points) { return {{}, start, stop, points}; }
  static Grid list(std::vector<double> v) { return {std::move(v), 0.0, 0.0, 0}; }

  bool is_range() const { return points > 0; }
  std::vector<double> resolve() const { return is_range() ? linspace(start, stop, std::size_t(points)) : values; }
  bool operator==(const Grid&) const = default;
};

struct MoleculeSection {
  double omega1_hz = 5.9945e9;
  double omega2_hz = 5.9945e9;
  double alpha1_hz = -246.9e6;
  double alpha2_hz = -246.9e6;
  double g_hz = 296.4e6;
  std::int64_t n_levels = 3;
  bool operator==(const MoleculeSection&) const = default;
};

struct CouplingSection {
  double gamma_s_hz = 1.388e6;
  double gamma_a_hz = 0.311e6;
  double gamma_s_cross_hz = 0.0298e6;
  double gamma_a_cross_hz = 0.0088e6;
  double gamma_phi_s_hz = 0.0;
  double gamma_phi_a_hz = 0.0;
  bool operator==(const CouplingSection&) const = default;
};

struct DecayOverride {
  std::string from;
  std::string to;
  std::string port;
  double rate_hz = 0.0;
  bool operator==(const DecayOverride&) const = default;
};

struct ReflectanceSection {
  std::string state = "a";
  std::string port = "A";
  Grid amplitudes_hz = Grid::list({0.0, 0.1e6, 0.2199e6, 0.5e6, 1.0e6});
  double span_hz = 4e6;
  std::int64_t points = 401;
  bool operator==(const ReflectanceSection&) const = default;
};

struct FitSection {
  std::string state = "a";
  std::string port = "A";
  std::vector<std::string> data;  // spectrum CSV files; empty: synthesize from the model
  Grid amplitudes_hz = Grid::list({0.02e6, 0.1e6, 0.22e6, 0.4e6, 0.8e6});
  double span_hz = 4e6;
  std::int64_t points = 401;
  double snr_db = 30.0;
  bool add_noise = true;  // synthetic data only
  bool fit_gamma_phi = false;
  bool fit_scale = false;
  std::int64_t max_iterations = 300;  // per optimizer stage
  bool operator==(const FitSection&) const = default;
};

struct RamanSection {
  double delta_hz = 300e6;
  Grid rabi_hz = Grid::range(0.0, 30e6, 121);
  Grid probe_hz = Grid::range(-6e6, 6e6, 481);
  std::string driven = "s";
  bool operator==(const RamanSection&) const = default;
};

struct BellSection {
  Grid theta = Grid::range(0.0, 2 * std::numbers::pi, 17);
  double window_s = 1.02e-6;
  std::int64_t grid_points = 2001;
  std::string normalization = "capture_and_branching";
  bool with_pi2 = true;
  bool operator==(const BellSection&) const = default;
};

struct AutlerSection {
  Grid pump_rabi_hz = Grid::list({3e6, 5e6, 7.65e6, 10e6, 15e6, 20e6});
  Grid probe_hz = Grid::range(-16e6, 16e6, 641);
  std::string probe_upper = "a";
  std::string probe_port = "A";
  std::string pump_upper = "2-";
  std::string pump_port = "S";
  double probe_rabi_hz = 0.0;  // 0: one tenth of the probed radiative rate
  double pump_detuning_hz = 0.0;
  bool operator==(const AutlerSection&) const = default;
};

struct ShotsSection {
  std::uint64_t shots = 1'000'000;
  double noise_photons = 10.0;
  double theta = std::numbers::pi;
  bool with_pi2 = true;
  std::string source = "oracle";  // or "master_equation"
  bool operator==(const ShotsSection&) const = default;
};

inline const std::vector<std::string>& known_tasks() {
  static const std::vector<std::string> t = {"eigen", "dipoles", "reflectance", "fit", "raman", "bell", "autler", "shots"};
  return t;
}

struct RunConfig {
  std::string task = "eigen";
  std::uint64_t seed = 1;
  std::int64_t workers = 1;
  double tolerance = 1e-10;  // relative tolerance of the master-equation integrator
  std::string output_dir;    // empty: --out, then the environment default
  MoleculeSection molecule;
  CouplingSection couplings;
  std::vector<DecayOverride> decay_overrides;
  ReflectanceSection reflectance;
  FitSection fit;
  RamanSection raman;
  BellSection bell;
  AutlerSection autler;
  ShotsSection shots;
  bool operator==(const RunConfig&) const = default;

  MoleculeParams molecule_params() const {
    return {from_hz(molecule.omega1_hz), from_hz(molecule.omega2_hz), from_hz(molecule.alpha1_hz),
            from_hz(molecule.alpha2_hz),  from_hz(molecule.g_hz),      int(molecule.n_levels)};
  }
  PortCouplings port_couplings() const {
    return {from_hz(couplings.gamma_s_hz),       from_hz(couplings.gamma_a_hz),     from_hz(couplings.gamma_s_cross_hz),
            from_hz(couplings.gamma_a_cross_hz), from_hz(couplings.gamma_phi_s_hz), from_hz(couplings.gamma_phi_a_hz)};
  }
  MoleculeModel molecule_model() const {
    auto m = MoleculeModel::build(molecule_params(), port_couplings());
    for (const auto& o : decay_overrides)
      m.decay.set_rate(*parse_level(o.from), *parse_level(o.to), *parse_port(o.port), from_hz(o.rate_hz));
    return m;
  }
  EvolveOptions evolve_options() const {
    EvolveOptions e;
    e.rtol = tolerance;
    e.atol = tolerance * 1e-2;
    return e;
  }
};

// ---------------------------------------------------------------------------
// Field tables shared by reading and writing

template <class F> void visit_fields(MoleculeSection& s, F&& f) {
  f("omega1_hz", s.omega1_hz);
  f("omega2_hz", s.omega2_hz);
  f("alpha1_hz", s.alpha1_hz);
  f("alpha2_hz", s.alpha2_hz);
  f("g_hz", s.g_hz);
  f("n_levels", s.n_levels);
}
template <class F> void visit_fields(CouplingSection& s, F&& f) {
  f("gamma_s_hz", s.gamma_s_hz);
  f("gamma_a_hz", s.gamma_a_hz);
  f("gamma_s_cross_hz", s.gamma_s_cross_hz);
  f("gamma_a_cross_hz", s.gamma_a_cross_hz);
  f("gamma_phi_s_hz", s.gamma_phi_s_hz);
  f("gamma_phi_a_hz", s.gamma_phi_a_hz);
}
template <class F> void visit_fields(DecayOverride& s, F&& f) {
  f("from", s.from);
  f("to", s.to);
  f("port", s.port);
  f("rate_hz", s.rate_hz);
}
template <class F> void visit_fields(ReflectanceSection& s, F&& f) {
  f("state", s.state);
  f("port", s.port);
  f("amplitudes_hz", s.amplitudes_hz);
  f("span_hz", s.span_hz);
  f("points", s.points);
}
template <class F> void visit_fields(FitSection& s, F&& f) {
  f("state", s.state);
  f("port", s.port);
  f("data", s.data);
  f("amplitudes_hz", s.amplitudes_hz);
  f("span_hz", s.span_hz);
  f("points", s.points);
  f("snr_db", s.snr_db);
  f("add_noise", s.add_noise);
  f("fit_gamma_phi", s.fit_gamma_phi);
  f("fit_scale", s.fit_scale);
  f("max_iterations", s.max_iterations);
}
template <class F> void visit_fields(RamanSection& s, F&& f) {
  f("delta_hz", s.delta_hz);
  f("rabi_hz", s.rabi_hz);
  f("probe_hz", s.probe_hz);
  f("driven", s.driven);
}
template <class F> void visit_fields(BellSection& s, F&& f) {
  f("theta", s.theta);
  f("window_s", s.window_s);
  f("grid_points", s.grid_points);
  f("normalization", s.normalization);
  f("with_pi2", s.with_pi2);
}
template <class F> void visit_fields(AutlerSection& s, F&& f) {
  f("pump_rabi_hz", s.pump_rabi_hz);
  f("probe_hz", s.probe_hz);
  f("probe_upper", s.probe_upper);
  f("probe_port", s.probe_port);
  f("pump_upper", s.pump_upper);
  f("pump_port", s.pump_port);
  f("probe_rabi_hz", s.probe_rabi_hz);
  f("pump_detuning_hz", s.pump_detuning_hz);
}
template <class F> void visit_fields(ShotsSection& s, F&& f) {
  f("shots", s.shots);
  f("noise_photons", s.noise_photons);
  f("theta", s.theta);
  f("with_pi2", s.with_pi2);
  f("source", s.source);
}
template <class F> void visit_fields(RunConfig& s, F&& f) {
  f("task", s.task);
  f("seed", s.seed);
  f("workers", s.workers);
  f("tolerance", s.tolerance);
  f("output_dir", s.output_dir);
  f("molecule", s.molecule);
  f("couplings", s.couplings);
  f("decay_overrides", s.decay_overrides);
  f("reflectance", s.reflectance);
  f("fit", s.fit);
  f("raman", s.raman);
  f("bell", s.bell);
  f("autler", s.autler);
  f("shots", s.shots);
}

namespace detail {

using io::json;

template <class T> concept Section = requires(T& t) { visit_fields(t, [](const char*, auto&) {}); };

template <class T> json to_json_value(const T& v);

struct Writer {
  json& out;
  template <class T> void operator()(const char* key, const T& v) { out[key] = to_json_value(v); }
};

template <class T> json to_json_value(const T& v) {
  if constexpr (Section<T>) {
    json j = json::object();
    visit_fields(const_cast<T&>(v), Writer{j});
    return j;
  } else if constexpr (std::is_same_v<T, Grid>) {
    if (v.is_range()) return json{{"start", v.start}, {"stop", v.stop}, {"points", v.points}};
    return json(v.values);
  } else if constexpr (std::is_same_v<T, std::vector<DecayOverride>>) {
    json a = json::array();
    for (const auto& o : v) a.push_back(to_json_value(o));
    return a;
  } else {
    return json(v);
  }
}

template <class T> void from_json_value(const json& j, T& v, const std::string& path);

struct Reader {
  const json& obj;
  std::string path;
  std::set<std::string> seen;
  template <class T> void operator()(const char* key, T& v) {
    if (!obj.contains(key)) return;
    seen.insert(key);
    from_json_value(obj.at(key), v, path.empty() ? std::string(key) : path + "." + key);
  }
};

[[noreturn]] inline void type_error(const std::string& path, const char* expected) {
  throw InvalidParameter("config key '" + path + "' must be " + expected);
}

template <class T> void from_json_value(const json& j, T& v, const std::string& path) {
  if constexpr (Section<T>) {
    if (!j.is_object()) type_error(path, "an object");
    Reader r{j, path, {}};
    visit_fields(v, r);
    for (auto it = j.begin(); it != j.end(); ++it)
      if (!r.seen.count(it.key()))
        throw InvalidParameter("unknown config key '" + (path.empty() ? it.key() : path + "." + it.key()) + "'");
  } else if constexpr (std::is_same_v<T, Grid>) {
    if (j.is_array()) {
      v = Grid{};
      for (const auto& x : j) {
        if (!x.is_number()) type_error(path, "an array of numbers");
        v.values.push_back(x.get<double>());
      }
    } else if (j.is_object()) {
      v = Grid{};
      for (auto it = j.begin(); it != j.end(); ++it)
        if (it.key() != "start" && it.key() != "stop" && it.key() != "points")
          throw InvalidParameter("unknown config key '" + path + "." + it.key() + "'");
      if (!j.contains("start") || !j.contains("stop") || !j.contains("points"))
        type_error(path, "{start, stop, points}");
      from_json_value(j.at("start"), v.start, path + ".start");
      from_json_value(j.at("stop"), v.stop, path + ".stop");
      from_json_value(j.at("points"), v.points, path + ".points");
      if (v.points < 1) throw InvalidParameter("config key '" + path + ".points' must be >= 1");
    } else {
      type_error(path, "an array or {start, stop, points}");
    }
  } else if constexpr (std::is_same_v<T, std::vector<DecayOverride>>) {
    if (!j.is_array()) type_error(path, "an array");
    v.clear();
    for (std::size_t k = 0; k < j.size(); ++k) {
      DecayOverride o;
      from_json_value(j[k], o, path + "[" + std::to_string(k) + "]");
      v.push_back(o);
    }
  } else if constexpr (std::is_same_v<T, std::vector<std::string>>) {
    if (!j.is_array()) type_error(path, "an array of strings");
    v.clear();
    for (const auto& x : j) {
      if (!x.is_string()) type_error(path, "an array of strings");
      v.push_back(x.get<std::string>());
    }
  } else if constexpr (std::is_same_v<T, std::string>) {
    if (!j.is_string()) type_error(path, "a string");
    v = j.get<std::string>();
  } else if constexpr (std::is_same_v<T, bool>) {
    if (!j.is_boolean()) type_error(path, "a boolean");
    v = j.get<bool>();
  } else if constexpr (std::is_same_v<T, double>) {
    if (!j.is_number()) type_error(path, "a number");
    v = j.get<double>();
  } else if constexpr (std::is_same_v<T, std::uint64_t>) {
    if (!j.is_number_unsigned()) type_error(path, "a non-negative integer");
    v = j.get<std::uint64_t>();
  } else if constexpr (std::is_same_v<T, std::int64_t>) {
    if (!j.is_number_integer()) type_error(path, "an integer");
    v = j.get<std::int64_t>();
  }
}

inline void require(bool ok, const std::string& key, const std::string& what) {
  if (!ok) throw InvalidParameter("config key '" + key + "' " + what);
}

inline void require_grid(const Grid& g, const std::string& key) {
  require(g.is_range() || !g.values.empty(), key, "must not be empty");
  for (double v : g.resolve()) require(std::isfinite(v), key, "must contain finite values");
}

inline void require_level(const std::string& s, const std::string& key) {
  require(parse_level(s).has_value(), key, "must be one of 0, a, s, 2-, 2+L, 2+U");
}

inline void require_port(const std::string& s, const std::string& key) {
  require(parse_port(s).has_value(), key, "must be \"S\" or \"A\"");
}

inline void require_state(const std::string& s, const std::string& key) {
  require(s == "s" || s == "a", key, "must be \"s\" or \"a\"");
}

}  // namespace detail

/// Checks ranges and cross-field constraints; messages name the offending key.
inline void validate(const RunConfig& c) {
  using detail::require;
  bool known = false;
  for (const auto& t : known_tasks()) known = known || t == c.task;
  require(known, "task", "must be one of eigen, dipoles, reflectance, fit, raman, bell, autler, shots");
  require(c.workers >= 1, "workers", "must be >= 1");
  require(c.tolerance > 0.0 && c.tolerance < 1e-2, "tolerance", "must be in (0, 1e-2)");

  const auto& m = c.molecule;
  for (auto [k, v] : {std::pair{"omega1_hz", m.omega1_hz}, {"omega2_hz", m.omega2_hz}, {"alpha1_hz", m.alpha1_hz},
                      {"alpha2_hz", m.alpha2_hz}, {"g_hz", m.g_hz}})
    require(std::isfinite(v), std::string("molecule.") + k, "must be finite");
  require(m.omega1_hz > 0 && m.omega2_hz > 0, "molecule.omega1_hz", "and omega2_hz must be > 0");
  require(m.g_hz >= 0, "molecule.g_hz", "must be >= 0");
  require(m.n_levels >= 2 && m.n_levels <= 12, "molecule.n_levels", "must be in [2, 12]");
  if (c.task != "eigen") require(m.n_levels >= 3, "molecule.n_levels", "must be >= 3 for task " + c.task);

  const auto& g = c.couplings;
  for (auto [k, v] : {std::pair{"gamma_s_hz", g.gamma_s_hz}, {"gamma_a_hz", g.gamma_a_hz},
                      {"gamma_s_cross_hz", g.gamma_s_cross_hz}, {"gamma_a_cross_hz", g.gamma_a_cross_hz},
                      {"gamma_phi_s_hz", g.gamma_phi_s_hz}, {"gamma_phi_a_hz", g.gamma_phi_a_hz}})
    require(std::isfinite(v) && v >= 0.0, std::string("couplings.") + k, "must be a finite rate >= 0");

  for (std::size_t k = 0; k < c.decay_overrides.size(); ++k) {
    const auto& o = c.decay_overrides[k];
    const std::string key = "decay_overrides[" + std::to_string(k) + "]";
    detail::require_level(o.from, key + ".from");
    detail::require_level(o.to, key + ".to");
    detail::require_port(o.port, key + ".port");
    require(std::isfinite(o.rate_hz) && o.rate_hz >= 0, key + ".rate_hz", "must be a finite rate >= 0");
    require(excitation_of(*parse_level(o.from)) == excitation_of(*parse_level(o.to)) + 1, key,
            "must connect adjacent excitation manifolds (from the upper one)");
  }

  const auto& r = c.reflectance;
  detail::require_state(r.state, "reflectance.state");
  detail::require_port(r.port, "reflectance.port");
  detail::require_grid(r.amplitudes_hz, "reflectance.amplitudes_hz");
  for (double a : r.amplitudes_hz.resolve()) require(a >= 0, "reflectance.amplitudes_hz", "must be >= 0");
  require(r.span_hz > 0, "reflectance.span_hz", "must be > 0");
  require(r.points >= 3, "reflectance.points", "must be >= 3");

  const auto& f = c.fit;
  detail::require_state(f.state, "fit.state");
  detail::require_port(f.port, "fit.port");
  detail::require_grid(f.amplitudes_hz, "fit.amplitudes_hz");
  require(f.span_hz > 0, "fit.span_hz", "must be > 0");
  require(f.points >= 5, "fit.points", "must be >= 5");
  require(std::isfinite(f.snr_db), "fit.snr_db", "must be finite");
  require(f.max_iterations >= 1, "fit.max_iterations", "must be >= 1");
  if (c.task == "fit") {
    for (const auto& path : f.data)
      if (!std::filesystem::exists(path)) throw IoError("fit.data file not found: " + path);
  }

  const auto& ra = c.raman;
  require(std::isfinite(ra.delta_hz) && ra.delta_hz != 0.0, "raman.delta_hz", "must be nonzero");
  detail::require_grid(ra.rabi_hz, "raman.rabi_hz");
  detail::require_grid(ra.probe_hz, "raman.probe_hz");
  for (double a : ra.rabi_hz.resolve()) require(a >= 0, "raman.rabi_hz", "must be >= 0");
  detail::require_state(ra.driven, "raman.driven");

  const auto& b = c.bell;
  detail::require_grid(b.theta, "bell.theta");
  require(b.window_s > 0, "bell.window_s", "must be > 0");
  require(b.grid_points >= 3, "bell.grid_points", "must be >= 3");
  require(parse_normalization(b.normalization).has_value(), "bell.normalization",
          "must be none, capture or capture_and_branching");

  const auto& at = c.autler;
  detail::require_grid(at.pump_rabi_hz, "autler.pump_rabi_hz");
  for (double a : at.pump_rabi_hz.resolve()) require(a >= 0, "autler.pump_rabi_hz", "must be >= 0");
  detail::require_grid(at.probe_hz, "autler.probe_hz");
  require(at.probe_hz.resolve().size() >= 5, "autler.probe_hz", "needs at least 5 points");
  detail::require_level(at.probe_upper, "autler.probe_upper");
  detail::require_level(at.pump_upper, "autler.pump_upper");
  detail::require_port(at.probe_port, "autler.probe_port");
  detail::require_port(at.pump_port, "autler.pump_port");
  require(at.probe_rabi_hz >= 0, "autler.probe_rabi_hz", "must be >= 0");

  const auto& s = c.shots;
  require(s.shots >= 2, "shots.shots", "must be >= 2");
  require(std::isfinite(s.noise_photons) && s.noise_photons >= 0, "shots.noise_photons", "must be >= 0");
  require(std::isfinite(s.theta), "shots.theta", "must be finite");
  require(s.source == "oracle" || s.source == "master_equation", "shots.source", "must be oracle or master_equation");
}

inline io::json to_json(const RunConfig& c) { return detail::to_json_value(c); }

inline std::string serialize(const RunConfig& c) { return to_json(c).dump(2) + "\n"; }

/// Parses a config document; `origin` labels error messages.
inline RunConfig parse_config(const std::string& text, const std::string& origin = "<config>") {
  io::json j;
  try {
    j = io::json::parse(text);
  } catch (const io::json::parse_error& e) {
    std::size_t line = 1, col = 1;
    const std::size_t end = std::min<std::size_t>(e.byte > 0 ? e.byte - 1 : 0, text.size());
    for (std::size_t k = 0; k < end; ++k) {
      if (text[k] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw InvalidParameter(origin + ":" + std::to_string(line) + ":" + std::to_string(col) + ": parse error: " +
                           e.what());
  }
  RunConfig c;
  detail::from_json_value(j, c, "");
  validate(c);
  return c;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  return parse_config(io::read_file(path), path.string());
}

}  // namespace wgmol
