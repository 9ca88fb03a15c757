#pragma once

// Moments of the two itinerant photon modes emitted after the Bell-state
// sequence: a pi/2 rotation on 0<->a through A, then a theta rotation on
// 0<->s through S, then free emission. "minus" is the photon leaving through
// A (from |a>), "plus" the one leaving through S (from |s>).

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>

#include "wgmol/correlation.hpp"
#include "wgmol/errors.hpp"
#include "wgmol/lindblad.hpp"
#include "wgmol/mode_match.hpp"

namespace wgmol {

struct MomentErrors {
  double mean_minus = 0.0;  // 1-sigma of the complex estimate
  double mean_plus = 0.0;
  double n_minus = 0.0;
  double n_plus = 0.0;
  double cross = 0.0;
  double pair = 0.0;
};

struct MomentSet {
  cplx mean_minus = 0.0;  // <a_->
  cplx mean_plus = 0.0;   // <a_+>
  double n_minus = 0.0;   // <a_-^+ a_->
  double n_plus = 0.0;    // <a_+^+ a_+>
  cplx cross = 0.0;       // <a_-^+ a_+>
  cplx pair = 0.0;        // <a_- a_+>
  std::string normalization = "none";
  std::optional<MomentErrors> errors;
};

enum class Normalization { none, capture, capture_and_branching };

inline std::string_view to_string(Normalization n) {
  switch (n) {
    case Normalization::none: return "none";
    case Normalization::capture: return "capture";
    default: return "capture_and_branching";
  }
}

inline std::optional<Normalization> parse_normalization(std::string_view s) {
  for (auto n : {Normalization::none, Normalization::capture, Normalization::capture_and_branching})
    if (to_string(n) == s) return n;
  return std::nullopt;
}

/// Lossless reference: molecule (0, a, s) x photon A (0, 1) x photon S (0, 1),
/// the two rotations applied as unitaries and emission as the map
/// |a, n_A, n_S> -> |0, n_A + 1, n_S>, |s, n_A, n_S> -> |0, n_A, n_S + 1>.
inline MomentSet state_vector_oracle(double theta, bool with_pi2 = true) {
  auto idx = [](int m, int na, int ns) { return m * 4 + na * 2 + ns; };
  VectorXc psi = VectorXc::Zero(12);
  psi(idx(0, 0, 0)) = 1.0;
  auto rotate = [&](int upper, double angle) {
    VectorXc out = psi;
    const double c = std::cos(angle / 2), s = std::sin(angle / 2);
    for (int na = 0; na < 2; ++na)
      for (int ns = 0; ns < 2; ++ns) {
        const cplx g = psi(idx(0, na, ns)), e = psi(idx(upper, na, ns));
        out(idx(0, na, ns)) = c * g - s * e;
        out(idx(upper, na, ns)) = s * g + c * e;
      }
    psi = out;
  };
  if (with_pi2) rotate(1, std::numbers::pi / 2);
  rotate(2, theta);
  VectorXc emitted = VectorXc::Zero(12);
  for (int na = 0; na < 2; ++na)
    for (int ns = 0; ns < 2; ++ns) {
      emitted(idx(0, na, ns)) += psi(idx(0, na, ns));
      if (na == 0) emitted(idx(0, 1, ns)) += psi(idx(1, 0, ns));
      if (ns == 0) emitted(idx(0, na, 1)) += psi(idx(2, na, 0));
    }
  psi = emitted;

  MatrixXc a_a = MatrixXc::Zero(12, 12), a_s = MatrixXc::Zero(12, 12);
  for (int m = 0; m < 3; ++m)
    for (int x = 0; x < 2; ++x) {
      a_a(idx(m, 0, x), idx(m, 1, x)) = 1.0;
      a_s(idx(m, x, 0), idx(m, x, 1)) = 1.0;
    }
  auto expect = [&](const MatrixXc& op) { return (psi.adjoint() * op * psi)(0, 0); };
  MomentSet out;
  out.mean_minus = expect(a_a);
  out.mean_plus = expect(a_s);
  out.n_minus = expect(a_a.adjoint() * a_a).real();
  out.n_plus = expect(a_s.adjoint() * a_s).real();
  out.cross = expect(a_a.adjoint() * a_s);
  out.pair = expect(a_a * a_s);
  out.normalization = "exact";
  return out;
}

/// The rotations of the Bell sequence.
inline PulseSequence bell_sequence(double theta, bool with_pi2, double window) {
  PulseSequence seq;
  if (with_pi2) seq.steps.push_back(Rotation{Level::ground, Level::a, Port::A, std::numbers::pi / 2});
  seq.steps.push_back(Rotation{Level::ground, Level::s, Port::S, theta});
  seq.steps.push_back(FreeDecay{window});
  return seq;
}

struct BellOptions {
  double window = 1.02e-6;        // s
  std::size_t grid_points = 2001;  // odd: Simpson quadrature
  Normalization normalization = Normalization::capture_and_branching;
  bool with_pi2 = true;
  EvolveOptions evolve{};
};

struct BellResult {
  MomentSet moments;  // after normalization
  MomentSet raw;      // straight from the filtered correlations
  double efficiency_minus = 0.0;
  double efficiency_plus = 0.0;
  double branching_minus = 0.0;  // fraction of the emission entering the detected port
  double branching_plus = 0.0;
  Warnings warnings;
};

/// Master-equation moments of the two matched filter modes. The output field
/// of each port keeps only its carrier transition: a_A = sqrt(Gamma_{a->0,A}) |0><a|,
/// a_S = sqrt(Gamma_{s->0,S}) |0><s|.
inline BellResult bell_sequence_moments(double theta, const MoleculeModel& m, const BellOptions& o = {}) {
  if (!std::isfinite(theta)) throw InvalidParameter("theta must be finite");
  if (o.grid_points < 3) throw InvalidParameter("grid_points must be >= 3");
  const double g_minus = m.decay.rate(Level::a, Level::ground, Port::A);
  const double g_plus = m.decay.rate(Level::s, Level::ground, Port::S);
  const double tot_minus = m.decay.total(Level::a), tot_plus = m.decay.total(Level::s);
  if (!(g_minus > 0.0) || !(g_plus > 0.0)) throw InvalidParameter("carrier transitions must radiate into their ports");

  BellResult res;
  const auto f_minus = matched_filter(tot_minus, o.window, o.grid_points);
  const auto f_plus = matched_filter(tot_plus, o.window, o.grid_points);
  res.efficiency_minus = f_minus.efficiency;
  res.efficiency_plus = f_plus.efficiency;
  res.branching_minus = g_minus / tot_minus;
  res.branching_plus = g_plus / tot_plus;

  EvolveOptions eo = o.evolve;
  eo.sample_interval = f_minus.grid.step;
  const auto traj = lindblad_evolve(DensityMatrix::pure(Level::ground), bell_sequence(theta, o.with_pi2, o.window), m, eo);
  // The last grid_points samples span the emission window, starting right after the rotations.
  if (traj.size() < o.grid_points) throw NumericalError("trajectory is shorter than the filter grid");
  std::vector<MatrixXc> states;
  for (std::size_t k = traj.size() - o.grid_points; k < traj.size(); ++k) states.push_back(traj[k].rho);
  if (states.size() != o.grid_points) throw NumericalError("trajectory sampling does not match the filter grid");

  const MatrixXc p = propagator(liouvillian(MatrixXc::Zero(kStates, kStates), m.decay.jump_operators()), f_minus.grid.step);
  const MatrixXc am = std::sqrt(g_minus) * transition_operator(Level::ground, Level::a);
  const MatrixXc ap = std::sqrt(g_plus) * transition_operator(Level::ground, Level::s);
  std::vector<cplx> fm(f_minus.filter.begin(), f_minus.filter.end()), fp(f_plus.filter.begin(), f_plus.filter.end());
  const auto& w = f_minus.weights;

  MomentSet raw;
  raw.mean_minus = filtered_expectation(states, am, fm, w);
  raw.mean_plus = filtered_expectation(states, ap, fp, w);
  raw.n_minus = filtered_correlation(states, p, am.adjoint(), fm, am, fm, w).real();
  raw.n_plus = filtered_correlation(states, p, ap.adjoint(), fp, ap, fp, w).real();
  raw.cross = filtered_correlation(states, p, am.adjoint(), fm, ap, fp, w);
  raw.pair = filtered_correlation(states, p, am, fm, ap, fp, w);
  res.raw = raw;

  double k_minus = 1.0, k_plus = 1.0;
  if (o.normalization != Normalization::none) {
    k_minus = res.efficiency_minus;
    k_plus = res.efficiency_plus;
  }
  if (o.normalization == Normalization::capture_and_branching) {
    k_minus *= res.branching_minus;
    k_plus *= res.branching_plus;
  }
  MomentSet out = raw;
  out.mean_minus /= std::sqrt(k_minus);
  out.mean_plus /= std::sqrt(k_plus);
  out.n_minus /= k_minus;
  out.n_plus /= k_plus;
  out.cross /= std::sqrt(k_minus * k_plus);
  out.pair /= std::sqrt(k_minus * k_plus);
  out.normalization = std::string(to_string(o.normalization));
  res.moments = out;
  if (res.efficiency_minus < 0.5 || res.efficiency_plus < 0.5)
    res.warnings.push_back("window captures less than half of the emission");
  return res;
}

}  // namespace wgmol
