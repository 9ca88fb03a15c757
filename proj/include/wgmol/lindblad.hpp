#pragma once

// Lindblad dynamics of the molecule truncated to its six canonical
// eigenstates, in the interaction picture of the bare molecular Hamiltonian.
// Each (transition, port) pair carries its own emission channel.

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "wgmol/couplings.hpp"
#include "wgmol/errors.hpp"
#include "wgmol/molecule.hpp"

namespace wgmol {

inline constexpr int kStates = kCanonicalSize;

struct DensityMatrix {
  MatrixXc rho = MatrixXc::Zero(kStates, kStates);
  double time = 0.0;  // s

  static DensityMatrix pure(Level l) {
    DensityMatrix d;
    d.rho(index_of(l), index_of(l)) = 1.0;
    return d;
  }
  static DensityMatrix from_state(const VectorXc& psi) {
    DensityMatrix d;
    d.rho = psi * psi.adjoint();
    return d;
  }

  double population(Level l) const { return rho(index_of(l), index_of(l)).real(); }
  cplx coherence(Level row, Level col) const { return rho(index_of(row), index_of(col)); }
  double trace() const { return rho.trace().real(); }
  double min_eigenvalue() const {
    const MatrixXc herm = 0.5 * (rho + rho.adjoint());
    return Eigen::SelfAdjointEigenSolver<MatrixXc>(herm, Eigen::EigenvaluesOnly).eigenvalues()(0);
  }
};

/// |to><from| on the canonical space.
inline MatrixXc transition_operator(Level to, Level from) {
  MatrixXc m = MatrixXc::Zero(kStates, kStates);
  m(index_of(to), index_of(from)) = 1.0;
  return m;
}
inline MatrixXc projector(Level l) { return transition_operator(l, l); }

/// Emission channel |to><from| into one waveguide.
struct JumpChannel {
  Level from;
  Level to;
  Port port;
  double rate;  // rad/s
};

inline int excitation_of(Level l) {
  switch (l) {
    case Level::ground: return 0;
    case Level::a:
    case Level::s: return 1;
    default: return 2;
  }
}

/// Per-transition, per-port decay rates. Single-excitation rates are the
/// measured ones; rates out of the two-excitation manifold follow the squared
/// dipole ratio to the reference transition of each dipole operator.
struct DecayModel {
  std::vector<JumpChannel> channels;
  std::array<double, kStates> dephasing{};  // of each level relative to the others

  static DecayModel build(const PortCouplings& c, const DipoleMatrices& d) {
    c.validate();
    DecayModel m;
    const double ref_s = d(Port::S, Level::ground, Level::s);
    const double ref_a = d(Port::A, Level::ground, Level::a);
    if (std::abs(ref_s) < 1e-12 || std::abs(ref_a) < 1e-12)
      throw InvalidParameter("reference dipoles vanish; cannot scale decay rates");
    for (Level upper : kCanonicalLevels)
      for (Level lower : kCanonicalLevels) {
        if (excitation_of(upper) != excitation_of(lower) + 1) continue;
        const double xs = std::pow(d(Port::S, lower, upper) / ref_s, 2);
        const double xa = std::pow(d(Port::A, lower, upper) / ref_a, 2);
        const double into_s = c.gamma_s * xs + c.gamma_a_x * xa;
        const double into_a = c.gamma_a * xa + c.gamma_s_x * xs;
        if (into_s > 0) m.channels.push_back({upper, lower, Port::S, into_s});
        if (into_a > 0) m.channels.push_back({upper, lower, Port::A, into_a});
      }
    m.dephasing[index_of(Level::s)] = c.gamma_phi_s;
    m.dephasing[index_of(Level::a)] = c.gamma_phi_a;
    return m;
  }

  double rate(Level from, Level to, Port port) const {
    for (const auto& ch : channels)
      if (ch.from == from && ch.to == to && ch.port == port) return ch.rate;
    return 0.0;
  }

  void set_rate(Level from, Level to, Port port, double rate) {
    if (!(rate >= 0.0)) throw InvalidParameter("decay rate must be >= 0");
    if (excitation_of(from) != excitation_of(to) + 1)
      throw InvalidParameter("decay channels connect adjacent excitation manifolds");
    for (auto& ch : channels)
      if (ch.from == from && ch.to == to && ch.port == port) {
        ch.rate = rate;
        return;
      }
    channels.push_back({from, to, port, rate});
  }

  /// Total population decay rate of a level.
  double total(Level from) const {
    double s = 0.0;
    for (const auto& ch : channels)
      if (ch.from == from) s += ch.rate;
    return s;
  }

  std::vector<MatrixXc> jump_operators() const {
    std::vector<MatrixXc> ops;
    for (const auto& ch : channels)
      if (ch.rate > 0) ops.push_back(std::sqrt(ch.rate) * transition_operator(ch.to, ch.from));
    for (Level l : kCanonicalLevels)
      if (dephasing[index_of(l)] > 0) ops.push_back(std::sqrt(2.0 * dephasing[index_of(l)]) * projector(l));
    return ops;
  }
};

/// Everything the dynamics needs to know about the molecule.
struct MoleculeModel {
  MoleculeParams params;
  PortCouplings couplings;
  EigenSystem eigen;
  DipoleMatrices dipoles;
  TransitionTable transitions;
  DecayModel decay;
  std::array<double, kStates> energies{};

  static MoleculeModel build(const MoleculeParams& p, const PortCouplings& c) {
    MoleculeModel m;
    m.params = p;
    m.couplings = c;
    m.eigen = diagonalize(p);
    m.dipoles = dipole_matrices(m.eigen, p);
    m.transitions = transition_table(m.eigen, m.dipoles);
    m.decay = DecayModel::build(c, m.dipoles);
    for (Level l : kCanonicalLevels) m.energies[index_of(l)] = m.eigen.energy(l);
    return m;
  }

  double frequency(Level lower, Level upper) const { return energies[index_of(upper)] - energies[index_of(lower)]; }
};

// ---------------------------------------------------------------------------
// Pulse sequences

/// Phase giving real rotations |l> -> cos(t/2)|l> + sin(t/2)|u>.
inline constexpr double kRealRotationPhase = std::numbers::pi / 2;

/// Coherent coupling term (rabi/2) (e^{i phase} |upper><lower| + h.c.).
inline MatrixXc drive_term(Level lower, Level upper, cplx half_rabi_phasor) {
  MatrixXc v = MatrixXc::Zero(kStates, kStates);
  v(index_of(upper), index_of(lower)) = half_rabi_phasor;
  v(index_of(lower), index_of(upper)) = std::conj(half_rabi_phasor);
  return v;
}

struct Rotation {
  Level lower = Level::ground;
  Level upper = Level::a;
  Port port = Port::A;
  double angle = 0.0;
  double phase = kRealRotationPhase;
};

/// Envelope samples are Rabi rates on the port's reference transition
/// (0<->s for S, 0<->a for A), spread uniformly over `duration`.
struct ShapedDrive {
  Port port = Port::S;
  std::vector<double> envelope;
  double carrier = 0.0;  // rad/s
  double duration = 0.0;  // s
  double phase = kRealRotationPhase;
  double rwa_cutoff = two_pi * 2e9;  // drop terms detuned further than this

  double envelope_at(double tau) const {
    if (envelope.empty() || duration <= 0.0) return 0.0;
    if (envelope.size() == 1) return envelope[0];
    const double x = std::clamp(tau / duration, 0.0, 1.0) * double(envelope.size() - 1);
    const std::size_t k = std::min<std::size_t>(std::size_t(x), envelope.size() - 2);
    const double w = x - double(k);
    return (1.0 - w) * envelope[k] + w * envelope[k + 1];
  }
};

struct FreeDecay {
  double duration = 0.0;
};

using PulseStep = std::variant<Rotation, ShapedDrive, FreeDecay>;

struct PulseSequence {
  std::vector<PulseStep> steps;

  void validate(const MoleculeModel& m) const {
    for (const auto& step : steps) {
      if (const auto* r = std::get_if<Rotation>(&step)) {
        if (!find_transition(m.transitions, r->lower, r->upper, r->port))
          throw InvalidParameter("rotation target " + std::string(to_string(r->lower)) + "<->" +
                                 std::string(to_string(r->upper)) + " is not allowed on port " +
                                 std::string(to_string(r->port)));
      } else if (const auto* s = std::get_if<ShapedDrive>(&step)) {
        if (!(s->duration >= 0.0)) throw InvalidParameter("drive duration must be >= 0");
        if (s->envelope.empty()) throw InvalidParameter("shaped drive needs envelope samples");
      } else if (const auto* f = std::get_if<FreeDecay>(&step)) {
        if (!(f->duration >= 0.0)) throw InvalidParameter("free decay duration must be >= 0");
      }
    }
  }
};

inline MatrixXc rotation_unitary(const Rotation& r) {
  MatrixXc u = MatrixXc::Identity(kStates, kStates);
  const int l = index_of(r.lower), h = index_of(r.upper);
  const double c = std::cos(0.5 * r.angle), s = std::sin(0.5 * r.angle);
  const cplx e = std::polar(1.0, r.phase);
  // exp(-i angle/2 (e|u><l| + h.c.))
  u(l, l) = c;
  u(h, h) = c;
  u(h, l) = -cplx(0, 1) * e * s;
  u(l, h) = -cplx(0, 1) * std::conj(e) * s;
  return u;
}

// ---------------------------------------------------------------------------
// Generator and integrator

/// D[L] rho + -i[H, rho] evaluated directly on matrices.
inline MatrixXc lindblad_rhs(const MatrixXc& h, const std::vector<MatrixXc>& jumps, const MatrixXc& rho) {
  const cplx i(0.0, 1.0);
  MatrixXc out = -i * (h * rho - rho * h);
  for (const auto& l : jumps) {
    const MatrixXc ldl = l.adjoint() * l;
    out += l * rho * l.adjoint() - 0.5 * (ldl * rho + rho * ldl);
  }
  return out;
}

/// Superoperator acting on column-major vec(rho).
inline MatrixXc liouvillian(const MatrixXc& h, const std::vector<MatrixXc>& jumps) {
  const Eigen::Index d = h.rows();
  const MatrixXc id = MatrixXc::Identity(d, d);
  auto kron = [](const MatrixXc& a, const MatrixXc& b) {
    MatrixXc k(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      for (Eigen::Index j = 0; j < a.cols(); ++j) k.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return k;
  };
  const cplx i(0.0, 1.0);
  MatrixXc sup = -i * (kron(id, h) - kron(h.transpose(), id));
  for (const auto& l : jumps) {
    const MatrixXc ldl = l.adjoint() * l;
    sup += kron(l.conjugate(), l) - 0.5 * kron(id, ldl) - 0.5 * kron(ldl.transpose(), id);
  }
  return sup;
}

inline VectorXc vec(const MatrixXc& m) { return Eigen::Map<const VectorXc>(m.data(), m.size()); }
inline MatrixXc unvec(const VectorXc& v, Eigen::Index d) { return Eigen::Map<const MatrixXc>(v.data(), d, d); }

/// exp(L dt) for a time-independent generator.
inline MatrixXc propagator(const MatrixXc& sup, double dt) { return (sup * dt).exp(); }

struct EvolveOptions {
  double rtol = 1e-10;
  double atol = 1e-12;
  double initial_step = 1e-10;  // s
  double sample_interval = 0.0;  // 0: only step boundaries
  long max_steps = 5'000'000;
  double trace_tolerance = 1e-8;
  double eigenvalue_floor = -1e-8;
};

using Trajectory = std::vector<DensityMatrix>;

namespace detail {

using Rhs = std::function<MatrixXc(double, const MatrixXc&)>;

/// Dormand-Prince 5(4) from t0 to t1 with error control; returns rho(t1).
inline MatrixXc dopri5(const Rhs& f, MatrixXc y, double t0, double t1, double& h, const EvolveOptions& o,
                       long& steps) {
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                          a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                          e6 = 22.0 / 525, e7 = -1.0 / 40;
  double t = t0;
  if (t1 <= t0) return y;
  MatrixXc k1 = f(t, y);
  while (t < t1) {
    if (++steps > o.max_steps) throw NumericalError("integrator exceeded max_steps");
    h = std::min(h, t1 - t);
    if (h <= std::max(std::abs(t), 1e-30) * 1e-15) throw NumericalError("integrator step size underflow");
    const MatrixXc k2 = f(t + c2 * h, y + h * a21 * k1);
    const MatrixXc k3 = f(t + c3 * h, y + h * (a31 * k1 + a32 * k2));
    const MatrixXc k4 = f(t + c4 * h, y + h * (a41 * k1 + a42 * k2 + a43 * k3));
    const MatrixXc k5 = f(t + c5 * h, y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    const MatrixXc k6 = f(t + h, y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
    const MatrixXc y5 = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    const MatrixXc k7 = f(t + h, y5);
    const MatrixXc err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    const double scale = o.atol + o.rtol * std::max(y.cwiseAbs().maxCoeff(), y5.cwiseAbs().maxCoeff());
    const double en = err.cwiseAbs().maxCoeff() / scale;
    if (!std::isfinite(en)) throw NumericalError("integrator produced non-finite values");
    if (en <= 1.0) {
      t += h;
      y = y5;
      k1 = k7;
    }
    const double factor = en == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(en, -0.2), 0.2, 5.0);
    h *= factor;
  }
  return y;
}

inline void check_state(const DensityMatrix& d, const EvolveOptions& o) {
  if (std::abs(d.trace() - 1.0) > o.trace_tolerance)
    throw NumericalError("trace drifted to " + std::to_string(d.trace()) + " at t=" + std::to_string(d.time));
  if (d.min_eigenvalue() < o.eigenvalue_floor)
    throw NumericalError("density matrix lost positivity at t=" + std::to_string(d.time));
}

}  // namespace detail

/// Time-dependent interaction-picture Hamiltonian of a shaped drive.
inline MatrixXc shaped_drive_hamiltonian(const MoleculeModel& m, const ShapedDrive& s, double t_start, double t) {
  MatrixXc h = MatrixXc::Zero(kStates, kStates);
  const Level ref_upper = s.port == Port::S ? Level::s : Level::a;
  const double ref = m.dipoles(s.port, Level::ground, ref_upper);
  const double rabi = s.envelope_at(t - t_start);
  if (rabi == 0.0) return h;
  for (const auto& tr : m.transitions) {
    if (tr.port != s.port) continue;
    const double detuning = tr.frequency - s.carrier;
    if (std::abs(detuning) > s.rwa_cutoff) continue;
    const double weight = m.dipoles(s.port, tr.from, tr.to) / ref;
    h += drive_term(tr.from, tr.to, 0.5 * rabi * weight * std::polar(1.0, s.phase + detuning * t));
  }
  return h;
}

/// Integrates the sequence from rho0. Instantaneous rotations act as unitaries;
/// shaped drives and free decay are integrated with adaptive Dormand-Prince.
/// The trajectory holds the initial state, every step boundary, and samples
/// every `sample_interval` inside timed steps.
inline Trajectory lindblad_evolve(const DensityMatrix& rho0, const PulseSequence& seq, const MoleculeModel& m,
                                  const EvolveOptions& o = {}) {
  seq.validate(m);
  const auto jumps = m.decay.jump_operators();
  Trajectory traj{rho0};
  detail::check_state(rho0, o);
  DensityMatrix cur = rho0;
  double h = o.initial_step;
  long steps = 0;

  auto integrate = [&](const detail::Rhs& f, double duration) {
    const double t0 = cur.time, t1 = cur.time + duration;
    std::vector<double> marks;
    if (o.sample_interval > 0.0) {
      const long n = long(std::floor(duration / o.sample_interval + 1e-9));
      for (long k = 1; k <= n; ++k) marks.push_back(t0 + double(k) * o.sample_interval);
    }
    if (marks.empty() || t1 - marks.back() > 1e-9 * o.sample_interval) marks.push_back(t1);
    else marks.back() = t1;
    for (double tm : marks) {
      cur.rho = detail::dopri5(f, cur.rho, cur.time, tm, h, o, steps);
      cur.time = tm;
      detail::check_state(cur, o);
      traj.push_back(cur);
    }
  };

  const MatrixXc zero = MatrixXc::Zero(kStates, kStates);
  for (const auto& step : seq.steps) {
    if (const auto* r = std::get_if<Rotation>(&step)) {
      const MatrixXc u = rotation_unitary(*r);
      cur.rho = u * cur.rho * u.adjoint();
      detail::check_state(cur, o);
      traj.push_back(cur);
    } else if (const auto* s = std::get_if<ShapedDrive>(&step)) {
      const double start = cur.time;
      integrate([&](double t, const MatrixXc& rho) {
        return lindblad_rhs(shaped_drive_hamiltonian(m, *s, start, t), jumps, rho);
      }, s->duration);
    } else if (const auto* f = std::get_if<FreeDecay>(&step)) {
      integrate([&](double, const MatrixXc& rho) { return lindblad_rhs(zero, jumps, rho); }, f->duration);
    }
  }
  return traj;
}

// ---------------------------------------------------------------------------
// Continuous-wave drives and steady state

/// Rotating-wave drive on one transition. Coupling (rabi/2)(e^{i phase}|upper><lower| + h.c.).
struct CwDrive {
  Level lower;
  Level upper;
  double rabi = 0.0;
  double frequency = 0.0;  // carrier, rad/s
  double phase = 0.0;
};

/// Hamiltonian in the frame co-rotating with every drive. The drives must form
/// a tree rooted at the ground state; undriven levels keep their own frame.
inline MatrixXc rotating_frame_hamiltonian(const MoleculeModel& m, const std::vector<CwDrive>& drives) {
  std::array<std::optional<double>, kStates> frame;
  frame[index_of(Level::ground)] = 0.0;
  std::vector<bool> used(drives.size(), false);
  for (bool progress = true; progress;) {
    progress = false;
    for (std::size_t k = 0; k < drives.size(); ++k) {
      if (used[k]) continue;
      auto& lo = frame[index_of(drives[k].lower)];
      auto& hi = frame[index_of(drives[k].upper)];
      if (lo && hi) throw InvalidParameter("drives form a loop; no common rotating frame");
      if (lo) hi = *lo + drives[k].frequency;
      else if (hi) lo = *hi - drives[k].frequency;
      else continue;
      used[k] = true;
      progress = true;
    }
  }
  if (std::find(used.begin(), used.end(), false) != used.end())
    throw InvalidParameter("drive is not connected to the ground state");
  MatrixXc h = MatrixXc::Zero(kStates, kStates);
  for (Level l : kCanonicalLevels) {
    const int k = index_of(l);
    h(k, k) = frame[k] ? m.energies[k] - *frame[k] : 0.0;
  }
  for (const auto& d : drives) h += drive_term(d.lower, d.upper, 0.5 * d.rabi * std::polar(1.0, d.phase));
  return h;
}

/// Null vector of the Liouvillian with unit trace.
inline DensityMatrix steady_state(const MatrixXc& h, const std::vector<MatrixXc>& jumps) {
  const Eigen::Index d = h.rows();
  MatrixXc sup = liouvillian(h, jumps);
  VectorXc rhs = VectorXc::Zero(d * d);
  sup.row(0).setZero();
  for (Eigen::Index k = 0; k < d; ++k) sup(0, k * d + k) = 1.0;
  rhs(0) = 1.0;
  Eigen::PartialPivLU<MatrixXc> lu(sup);
  const VectorXc x = lu.solve(rhs);
  if (!x.allFinite() || (sup * x - rhs).cwiseAbs().maxCoeff() > 1e-8)
    throw NumericalError("steady state is not unique");
  DensityMatrix out;
  out.rho = unvec(x, d);
  out.rho = 0.5 * (out.rho + out.rho.adjoint());
  return out;
}

}  // namespace wgmol
