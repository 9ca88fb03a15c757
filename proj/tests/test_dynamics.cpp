#include <gtest/gtest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <numbers>

#include "wgmol/correlation.hpp"
#include "wgmol/lindblad.hpp"
#include "wgmol/mode_match.hpp"
#include "wgmol/moments.hpp"
#include "wgmol/shots.hpp"
#include "wgmol/spectroscopy.hpp"

using namespace wgmol;
using std::numbers::pi;

namespace {

const MoleculeModel& device() {
  static const MoleculeModel m =
      MoleculeModel::build(MoleculeParams::device_defaults(), PortCouplings::device_defaults());
  return m;
}

void expect_moments_near(const MomentSet& got, const MomentSet& want, double tol) {
  EXPECT_NEAR(std::abs(got.mean_minus - want.mean_minus), 0.0, tol);
  EXPECT_NEAR(std::abs(got.mean_plus - want.mean_plus), 0.0, tol);
  EXPECT_NEAR(got.n_minus, want.n_minus, tol);
  EXPECT_NEAR(got.n_plus, want.n_plus, tol);
  EXPECT_NEAR(std::abs(got.cross - want.cross), 0.0, tol);
  EXPECT_NEAR(std::abs(got.pair - want.pair), 0.0, tol);
}

}  // namespace

TEST(DecayModel, SingleExcitationRatesMatchCouplings) {
  const auto& m = device();
  const auto c = PortCouplings::device_defaults();
  EXPECT_NEAR(m.decay.rate(Level::s, Level::ground, Port::S), c.gamma_s, 1e-6);
  EXPECT_NEAR(m.decay.rate(Level::s, Level::ground, Port::A), c.gamma_s_x, 1e-6);
  EXPECT_NEAR(m.decay.rate(Level::a, Level::ground, Port::A), c.gamma_a, 1e-6);
  EXPECT_NEAR(m.decay.rate(Level::a, Level::ground, Port::S), c.gamma_a_x, 1e-6);
  EXPECT_NEAR(m.decay.total(Level::s), c.gamma1(Mode::s), 1e-6);
  EXPECT_GT(m.decay.total(Level::two_minus), 0.0);
}

TEST(DecayModel, OverrideAndValidation) {
  auto d = device().decay;
  d.set_rate(Level::two_minus, Level::a, Port::S, 123.0);
  EXPECT_EQ(d.rate(Level::two_minus, Level::a, Port::S), 123.0);
  EXPECT_THROW(d.set_rate(Level::two_minus, Level::ground, Port::S, 1.0), InvalidParameter);
  EXPECT_THROW(d.set_rate(Level::s, Level::ground, Port::S, -1.0), InvalidParameter);
}

TEST(Lindblad, LiouvillianMatchesDirectEvaluation) {
  const auto& m = device();
  MatrixXc h = MatrixXc::Random(kStates, kStates);
  h = 1e6 * (h + h.adjoint()).eval();
  const auto jumps = m.decay.jump_operators();
  MatrixXc rho = MatrixXc::Random(kStates, kStates);
  const MatrixXc sup = liouvillian(h, jumps);
  const MatrixXc direct = lindblad_rhs(h, jumps, rho);
  EXPECT_LT((unvec(sup * vec(rho), kStates) - direct).cwiseAbs().maxCoeff(), 1e-6 * direct.cwiseAbs().maxCoeff());
}

TEST(Lindblad, FreeDecayIsExponential) {
  const auto& m = device();
  PulseSequence seq{{FreeDecay{2e-6}}};
  EvolveOptions o;
  o.sample_interval = 1e-7;
  const auto traj = lindblad_evolve(DensityMatrix::pure(Level::s), seq, m, o);
  ASSERT_EQ(traj.size(), 21u);
  const double g = m.decay.total(Level::s);
  for (const auto& d : traj) {
    EXPECT_NEAR(d.population(Level::s), std::exp(-g * d.time), 1e-9);
    EXPECT_NEAR(d.trace(), 1.0, 1e-10);
  }
}

TEST(Lindblad, CascadeFromDoublyExcitedState) {
  const auto& m = device();
  PulseSequence seq{{FreeDecay{3e-6}}};
  EvolveOptions o;
  o.sample_interval = 1e-7;
  const auto traj = lindblad_evolve(DensityMatrix::pure(Level::two_minus), seq, m, o);
  for (const auto& d : traj) {
    EXPECT_NEAR(d.trace(), 1.0, 1e-9);
    EXPECT_GE(d.min_eigenvalue(), -1e-10);
    EXPECT_NEAR(d.population(Level::two_minus), std::exp(-m.decay.total(Level::two_minus) * d.time), 1e-9);
  }
  EXPECT_GT(traj.back().population(Level::ground), 0.5);
}

TEST(Lindblad, RotationMapsGroundToSuperposition) {
  const auto& m = device();
  const double theta = 1.1;
  PulseSequence seq{{Rotation{Level::ground, Level::s, Port::S, theta}}};
  const auto traj = lindblad_evolve(DensityMatrix::pure(Level::ground), seq, m);
  const auto& d = traj.back();
  EXPECT_NEAR(d.population(Level::s), std::pow(std::sin(theta / 2), 2), 1e-14);
  EXPECT_NEAR(d.coherence(Level::s, Level::ground).real(), 0.5 * std::sin(theta), 1e-14);
  EXPECT_NEAR(d.coherence(Level::s, Level::ground).imag(), 0.0, 1e-14);
}

TEST(Lindblad, ForbiddenRotationRejected) {
  PulseSequence seq{{Rotation{Level::ground, Level::s, Port::A, pi}}};
  EXPECT_THROW(lindblad_evolve(DensityMatrix::pure(Level::ground), seq, device()), InvalidParameter);
  PulseSequence neg{{FreeDecay{-1.0}}};
  EXPECT_THROW(lindblad_evolve(DensityMatrix::pure(Level::ground), neg, device()), InvalidParameter);
}

TEST(Lindblad, ShapedResonantPulseMatchesInstantaneousRotationWhenShort) {
  const auto& m = device();
  ShapedDrive drive;
  drive.port = Port::S;
  drive.carrier = m.frequency(Level::ground, Level::s);
  drive.duration = 2e-9;
  const double rabi = pi / drive.duration;  // pi pulse, square envelope
  drive.envelope = {rabi, rabi};
  drive.rwa_cutoff = from_mhz(100);  // keep only transitions near the carrier
  PulseSequence seq{{drive}};
  EvolveOptions o;
  o.initial_step = 1e-12;
  const auto traj = lindblad_evolve(DensityMatrix::pure(Level::ground), seq, m, o);
  // Damped Rabi flopping: the oscillation decays at 3 Gamma / 4, so a pi pulse
  // leaves 1 - 3 Gamma t / 8 in the excited state to first order.
  const double loss = 0.375 * m.decay.total(Level::s) * drive.duration;
  EXPECT_NEAR(traj.back().population(Level::s), 1.0 - loss, 0.1 * loss);
  EXPECT_NEAR(traj.back().trace(), 1.0, 1e-9);
}

TEST(Lindblad, TraceDriftIsReportedNotRepaired) {
  auto m = device();
  PulseSequence seq{{FreeDecay{1e-6}}};
  DensityMatrix bad = DensityMatrix::pure(Level::s);
  bad.rho(0, 0) = 0.5;
  EXPECT_THROW(lindblad_evolve(bad, seq, m), NumericalError);
}

TEST(SteadyState, DrivenTwoLevelMatchesReflectanceModel) {
  const auto& m = device();
  const double gamma = m.decay.rate(Level::a, Level::ground, Port::A);
  const double rabi = from_mhz(0.15);
  ResonanceModel model{0.0, gamma, m.decay.total(Level::a) - gamma, 0.0, 1.0};
  for (double det : {-from_mhz(0.3), 0.0, from_mhz(0.1)}) {
    const std::vector<CwDrive> drives = {
        {Level::ground, Level::a, rabi, m.frequency(Level::ground, Level::a) + det, 0.0}};
    const auto ss = steady_state(rotating_frame_hamiltonian(m, drives), m.decay.jump_operators());
    const cplx r = 1.0 - cplx(0, 2) * gamma * ss.rho(index_of(Level::a), 0) / rabi;
    EXPECT_NEAR(std::abs(r - reflectance(model, det, rabi)), 0.0, 1e-9);
    EXPECT_NEAR(ss.trace(), 1.0, 1e-12);
  }
}

TEST(SteadyState, DriveLoopRejected) {
  const auto& m = device();
  const std::vector<CwDrive> loop = {{Level::ground, Level::a, 1.0, 1.0, 0.0},
                                     {Level::a, Level::two_minus, 1.0, 1.0, 0.0},
                                     {Level::ground, Level::two_minus, 1.0, 2.0, 0.0}};
  EXPECT_THROW(rotating_frame_hamiltonian(m, loop), InvalidParameter);
  const std::vector<CwDrive> floating = {{Level::a, Level::two_minus, 1.0, 1.0, 0.0},
                                         {Level::s, Level::two_plus_lower, 1.0, 1.0, 0.0}};
  EXPECT_THROW(rotating_frame_hamiltonian(m, floating), InvalidParameter);
}

TEST(ModeMatch, CaptureEfficiencyMatchesQuadrature) {
  const double g = device().decay.total(Level::a), t = 1.02e-6;
  const double oracle = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      [&](double x) { return g * std::exp(-g * x); }, 0.0, t);
  EXPECT_NEAR(capture_efficiency(g, t), oracle, 1e-12);
  const auto f = matched_filter(g, t, 2001);
  double norm = 0.0;
  for (std::size_t k = 0; k < f.filter.size(); ++k) norm += f.weights[k] * f.filter[k] * f.filter[k];
  EXPECT_NEAR(norm, 1.0, 1e-10);
  EXPECT_THROW(capture_efficiency(0.0, t), InvalidParameter);
  EXPECT_THROW(matched_filter(g, t, 1), InvalidParameter);
}

TEST(ModeMatch, FieldRecordProjection) {
  const double g = 2.0, t = 3.0;
  const auto f = matched_filter(g, t, 1001);
  std::vector<cplx> field;
  for (double x : f.grid.times()) field.push_back(std::sqrt(g) * std::exp(-g * x / 2));
  // A photon emitted with rate g projects onto the filter with amplitude sqrt(eta).
  EXPECT_NEAR(std::abs(mode_match(field, f)), std::sqrt(f.efficiency), 1e-9);
}

TEST(Correlation, FullMatrixAndFastContractionAgree) {
  const auto& m = device();
  const MatrixXc sup = liouvillian(MatrixXc::Zero(kStates, kStates), m.decay.jump_operators());
  VectorXc psi = VectorXc::Zero(kStates);
  psi(0) = 0.6;
  psi(index_of(Level::a)) = 0.48;
  psi(index_of(Level::s)) = 0.64;
  const auto rho0 = DensityMatrix::from_state(psi).rho;
  const auto grid = TimeGrid::over(0.0, 2e-6, 101);
  const MatrixXc am = transition_operator(Level::ground, Level::a);
  const MatrixXc as = transition_operator(Level::ground, Level::s);
  const MatrixXc g = two_time_correlation(rho0, sup, am.adjoint(), as, grid);
  // Analytic: <s_a^+(t) s_s(t')> for free decay.
  const double ga = m.decay.total(Level::a), gs = m.decay.total(Level::s);
  for (std::size_t i = 0; i < grid.size; i += 10)
    for (std::size_t j = 0; j < grid.size; j += 10) {
      const double t = grid.at(i), tp = grid.at(j);
      cplx want;
      if (t <= tp)
        want = std::conj(psi(1)) * psi(2) * std::exp(-ga * t / 2 - gs * t / 2) * std::exp(-gs * (tp - t) / 2);
      else
        want = std::conj(psi(1)) * psi(2) * std::exp(-ga * tp / 2 - gs * tp / 2) * std::exp(-ga * (t - tp) / 2);
      EXPECT_NEAR(std::abs(g(Eigen::Index(i), Eigen::Index(j)) - want), 0.0, 1e-10);
    }
  const auto f1 = matched_filter(ga, grid.duration(), grid.size);
  const auto f2 = matched_filter(gs, grid.duration(), grid.size);
  const MatrixXc p = propagator(sup, grid.step);
  const auto states = propagate_states(rho0, p, grid.size);
  std::vector<cplx> u(f1.filter.begin(), f1.filter.end()), v(f2.filter.begin(), f2.filter.end());
  const cplx fast = filtered_correlation(states, p, am.adjoint(), u, as, v, f1.weights);
  EXPECT_NEAR(std::abs(fast - mode_match(g, f1, f2)), 0.0, 1e-12);
}

TEST(Moments, OracleValues) {
  for (double theta : {0.0, pi / 3, pi / 2, 2.0, pi}) {
    const auto o = state_vector_oracle(theta);
    EXPECT_NEAR(o.mean_minus.real(), 0.5 * std::cos(theta / 2), 1e-14);
    EXPECT_NEAR(o.mean_plus.real(), 0.25 * std::sin(theta), 1e-14);
    EXPECT_NEAR(o.n_minus, 0.5, 1e-14);
    EXPECT_NEAR(o.n_plus, 0.5 * std::pow(std::sin(theta / 2), 2), 1e-14);
    EXPECT_NEAR(o.cross.real(), 0.5 * std::sin(theta / 2), 1e-14);
    EXPECT_NEAR(std::abs(o.pair), 0.0, 1e-14);
  }
  EXPECT_NEAR(state_vector_oracle(pi, false).n_plus, 1.0, 1e-14);
  EXPECT_NEAR(std::abs(state_vector_oracle(pi).mean_minus), 0.0, 1e-14);
}

TEST(Moments, CauchySchwarz) {
  for (double theta : {0.3, 1.5, 2.9}) {
    const auto o = state_vector_oracle(theta);
    EXPECT_LE(std::norm(o.cross), o.n_minus * o.n_plus + 1e-14);
    EXPECT_LE(std::norm(o.mean_minus), o.n_minus + 1e-14);
  }
}

TEST(Moments, MasterEquationMatchesOracle) {
  for (double theta : {pi / 2, pi}) {
    BellOptions o;
    o.grid_points = 1001;
    const auto res = bell_sequence_moments(theta, device(), o);
    expect_moments_near(res.moments, state_vector_oracle(theta), 2e-3);
    EXPECT_EQ(res.moments.normalization, "capture_and_branching");
    EXPECT_LT(res.raw.n_minus, res.moments.n_minus);
  }
}

TEST(Moments, WithoutPi2PulseSinglePhoton) {
  BellOptions o;
  o.grid_points = 501;
  o.with_pi2 = false;
  const auto res = bell_sequence_moments(pi, device(), o);
  EXPECT_NEAR(res.moments.n_plus, 1.0, 2e-3);
  EXPECT_NEAR(res.moments.n_minus, 0.0, 1e-9);
}

TEST(Moments, NormalizationModesScaleConsistently) {
  BellOptions o;
  o.grid_points = 501;
  o.normalization = Normalization::none;
  const auto raw = bell_sequence_moments(pi / 2, device(), o);
  o.normalization = Normalization::capture;
  const auto cap = bell_sequence_moments(pi / 2, device(), o);
  EXPECT_NEAR(cap.moments.n_minus * raw.efficiency_minus, raw.moments.n_minus, 1e-12);
  EXPECT_NEAR(std::abs(cap.moments.mean_plus * std::sqrt(raw.efficiency_plus) - raw.moments.mean_plus), 0.0, 1e-12);
}

TEST(Shots, RecoverMomentsWithinErrors) {
  const auto truth = state_vector_oracle(pi / 2);
  ShotOptions o;
  o.shots = 200'000;
  o.noise_photons = 2.0;
  o.seed = 11;
  const auto est = shot_estimator(truth, o);
  ASSERT_TRUE(est.errors.has_value());
  const auto& e = *est.errors;
  EXPECT_LT(std::abs(est.mean_minus - truth.mean_minus), 4 * e.mean_minus);
  EXPECT_LT(std::abs(est.mean_plus - truth.mean_plus), 4 * e.mean_plus);
  EXPECT_LT(std::abs(est.n_minus - truth.n_minus), 4 * e.n_minus);
  EXPECT_LT(std::abs(est.n_plus - truth.n_plus), 4 * e.n_plus);
  EXPECT_LT(std::abs(est.cross - truth.cross), 4 * e.cross);
  EXPECT_LT(std::abs(est.pair - truth.pair), 4 * e.pair);
}

TEST(Shots, DeterministicAcrossWorkerCounts) {
  const auto truth = state_vector_oracle(pi / 3);
  ShotOptions o;
  o.shots = 150'000;
  o.seed = 5;
  o.workers = 1;
  const auto one = shot_estimator(truth, o);
  o.workers = 3;
  const auto three = shot_estimator(truth, o);
  EXPECT_EQ(one.mean_minus, three.mean_minus);
  EXPECT_EQ(one.n_plus, three.n_plus);
  EXPECT_EQ(one.cross, three.cross);
  o.seed = 6;
  EXPECT_NE(shot_estimator(truth, o).mean_minus, one.mean_minus);
}

TEST(Shots, RejectsUnphysicalMoments) {
  MomentSet bad;
  bad.n_minus = 0.1;
  bad.mean_minus = 3.0;
  ShotOptions o;
  o.shots = 10;
  o.noise_photons = 0.0;
  EXPECT_THROW(shot_estimator(bad, o), InvalidParameter);
  o.shots = 1;
  EXPECT_THROW(shot_estimator(state_vector_oracle(1.0), o), InvalidParameter);
}

TEST(AutlerTownes, SplittingTracksPumpAmplitude) {
  AutlerTownesConfig cfg;
  cfg.pump_rabi = from_mhz(10);
  cfg.probe_detunings = linspace(-from_mhz(12), from_mhz(12), 601);
  const auto res = autler_townes_spectrum(device(), cfg);
  EXPECT_NEAR(res.splitting, cfg.pump_rabi, 0.02 * cfg.pump_rabi);
  EXPECT_TRUE(std::isfinite(res.dip_separation));
  EXPECT_LT(res.dip_separation, res.splitting);
  for (const auto& v : res.spectrum.values) EXPECT_LE(std::abs(v), 1.0 + 1e-9);
}

TEST(AutlerTownes, WeakPumpWarns) {
  AutlerTownesConfig cfg;
  cfg.pump_rabi = from_mhz(0.5);
  cfg.probe_detunings = linspace(-from_mhz(5), from_mhz(5), 201);
  const auto res = autler_townes_spectrum(device(), cfg);
  EXPECT_FALSE(res.warnings.empty());
}

TEST(AutlerTownes, SelectionRulesEnforced) {
  AutlerTownesConfig cfg;
  cfg.pump_rabi = from_mhz(5);
  cfg.probe_detunings = linspace(-from_mhz(5), from_mhz(5), 21);
  cfg.pump_port = Port::A;  // a <-> 2- is dark on A
  EXPECT_THROW(autler_townes_spectrum(device(), cfg), InvalidParameter);
  cfg.pump_port = Port::S;
  cfg.probe_port = Port::S;
  EXPECT_THROW(autler_townes_spectrum(device(), cfg), InvalidParameter);
}
