#pragma once

#include <cmath>
#include <string>

#include "wgmol/errors.hpp"
#include "wgmol/molecule.hpp"
#include "wgmol/units.hpp"

namespace wgmol {

/// Single-excitation state probed in a reflection experiment.
enum class Mode { s, a };

inline std::string_view to_string(Mode m) { return m == Mode::s ? "s" : "a"; }
inline Level level_of(Mode m) { return m == Mode::s ? Level::s : Level::a; }
/// Waveguide a state is bright to.
inline Port home_port(Mode m) { return m == Mode::s ? Port::S : Port::A; }

/// Decay rates of |s> and |a> into the two waveguides (rad/s).
struct PortCouplings {
  double gamma_s = 0.0;      // |s> -> S
  double gamma_a = 0.0;      // |a> -> A
  double gamma_s_x = 0.0;    // |s> -> A
  double gamma_a_x = 0.0;    // |a> -> S
  double gamma_phi_s = 0.0;  // pure dephasing of |s>
  double gamma_phi_a = 0.0;

  /// Measured device rates; dephasing taken as negligible.
  static PortCouplings device_defaults() {
    return {from_mhz(1.388), from_mhz(0.311), from_mhz(0.0298), from_mhz(0.0088), 0.0, 0.0};
  }

  void validate() const {
    const std::pair<const char*, double> fields[] = {{"gamma_s", gamma_s},         {"gamma_a", gamma_a},
                                                     {"gamma_s_x", gamma_s_x},     {"gamma_a_x", gamma_a_x},
                                                     {"gamma_phi_s", gamma_phi_s}, {"gamma_phi_a", gamma_phi_a}};
    for (auto [name, v] : fields)
      if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidParameter(std::string(name) + " must be a finite rate >= 0");
  }

  double direct(Mode m) const { return m == Mode::s ? gamma_s : gamma_a; }
  double cross(Mode m) const { return m == Mode::s ? gamma_s_x : gamma_a_x; }
  double dephasing(Mode m) const { return m == Mode::s ? gamma_phi_s : gamma_phi_a; }

  /// Rate of `m` into waveguide `p`.
  double into(Mode m, Port p) const { return p == home_port(m) ? direct(m) : cross(m); }

  /// Total energy relaxation rate.
  double gamma1(Mode m) const { return direct(m) + cross(m); }
  /// Coherence decay rate of the 0 <-> m transition.
  double gamma2(Mode m) const { return 0.5 * gamma1(m) + dephasing(m); }

  /// Direct-to-cross ratio.
  double selectivity(Mode m) const {
    if (cross(m) == 0.0) throw InvalidParameter("selectivity undefined for zero cross rate");
    return direct(m) / cross(m);
  }

  bool operator==(const PortCouplings&) const = default;
};

}  // namespace wgmol
