#pragma once

// Heterodyne detection of the two photon modes with phase-insensitive
// amplifier noise. Each shot records S = a + h^+ for both modes; a second
// run with the emitter idle records the noise alone, and the moments follow
// from the differences of the two runs.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <vector>

#include "wgmol/errors.hpp"
#include "wgmol/moments.hpp"
#include "wgmol/parallel.hpp"

namespace wgmol {

struct ShotOptions {
  std::uint64_t shots = 1'000'000;
  double noise_photons = 1.0;  // added noise N per mode; the idle run has variance N + 1
  std::uint64_t seed = 1;
  int workers = 1;
  std::uint64_t chunk = 1u << 16;  // fixed, so results do not depend on `workers`
};

namespace detail {

struct ShotSums {
  cplx s_minus = 0.0, s_plus = 0.0;
  double n_minus = 0.0, n_plus = 0.0;  // sum |S|^2
  double n2_minus = 0.0, n2_plus = 0.0;  // sum |S|^4
  cplx cross = 0.0, pair = 0.0;        // sum S_-^* S_+, S_- S_+
  double cross2 = 0.0;                 // sum |S_-|^2 |S_+|^2
  std::uint64_t count = 0;

  void add(const ShotSums& o) {
    s_minus += o.s_minus;
    s_plus += o.s_plus;
    n_minus += o.n_minus;
    n_plus += o.n_plus;
    n2_minus += o.n2_minus;
    n2_plus += o.n2_plus;
    cross += o.cross;
    pair += o.pair;
    cross2 += o.cross2;
    count += o.count;
  }
};

/// Real 4x4 covariance of (Re S_-, Im S_-, Re S_+, Im S_+) from the Hermitian
/// covariance K_ij = E[dS_i^* dS_j] and pseudo-covariance J_ij = E[dS_i dS_j].
inline Eigen::Matrix4d real_covariance(const Eigen::Matrix2cd& k, const Eigen::Matrix2cd& j) {
  Eigen::Matrix4d c;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      c(2 * a, 2 * b) = 0.5 * (k(a, b) + j(a, b)).real();
      c(2 * a + 1, 2 * b + 1) = 0.5 * (k(a, b) - j(a, b)).real();
      c(2 * a, 2 * b + 1) = 0.5 * (j(a, b) + k(a, b)).imag();
      c(2 * a + 1, 2 * b) = 0.5 * (j(a, b) - k(a, b)).imag();
    }
  return 0.5 * (c + c.transpose());
}

inline Eigen::Matrix4d factor(const Eigen::Matrix4d& cov) {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(cov);
  const double floor = -1e-12 * std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
  if (es.eigenvalues().minCoeff() < floor)
    throw InvalidParameter("moment set is not a physical state at this noise level (negative covariance)");
  return es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
}

inline ShotSums sample_chunk(const Eigen::Vector4d& mean, const Eigen::Matrix4d& root, std::uint64_t n,
                             std::uint64_t seed, std::uint64_t chunk, std::uint64_t stream) {
  std::seed_seq seq{std::uint32_t(seed), std::uint32_t(seed >> 32), std::uint32_t(chunk), std::uint32_t(chunk >> 32),
                    std::uint32_t(stream)};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> normal;
  ShotSums s;
  for (std::uint64_t k = 0; k < n; ++k) {
    Eigen::Vector4d z;
    for (int i = 0; i < 4; ++i) z(i) = normal(rng);
    const Eigen::Vector4d x = mean + root * z;
    const cplx sm(x(0), x(1)), sp(x(2), x(3));
    const double nm = std::norm(sm), np = std::norm(sp);
    s.s_minus += sm;
    s.s_plus += sp;
    s.n_minus += nm;
    s.n_plus += np;
    s.n2_minus += nm * nm;
    s.n2_plus += np * np;
    s.cross += std::conj(sm) * sp;
    s.pair += sm * sp;
    s.cross2 += nm * np;
  }
  s.count = n;
  return s;
}

inline ShotSums run(const Eigen::Vector4d& mean, const Eigen::Matrix4d& cov, const ShotOptions& o,
                    std::uint64_t stream) {
  const Eigen::Matrix4d root = factor(cov);
  const std::uint64_t chunks = (o.shots + o.chunk - 1) / o.chunk;
  std::vector<ShotSums> partial(chunks);
  parallel_for(chunks, o.workers, [&](std::size_t c) {
    const std::uint64_t n = std::min<std::uint64_t>(o.chunk, o.shots - c * o.chunk);
    partial[c] = sample_chunk(mean, root, n, o.seed, c, stream);
  });
  ShotSums total;
  for (const auto& p : partial) total.add(p);
  return total;
}

}  // namespace detail

/// Simulated estimate of `truth` from heterodyne shots. The signal field is a
/// complex Gaussian with the state's mean and covariance plus N+1 of noise;
/// the idle reference has mean zero and covariance N+1.
inline MomentSet shot_estimator(const MomentSet& truth, const ShotOptions& o = {}) {
  if (o.shots < 2) throw InvalidParameter("need at least 2 shots");
  if (!(o.noise_photons >= 0.0)) throw InvalidParameter("noise_photons must be >= 0");
  if (o.chunk == 0) throw InvalidParameter("chunk size must be > 0");

  const cplx mm = truth.mean_minus, mp = truth.mean_plus;
  const double noise = o.noise_photons + 1.0;
  Eigen::Matrix2cd k, j;
  k(0, 0) = truth.n_minus - std::norm(mm) + noise;
  k(1, 1) = truth.n_plus - std::norm(mp) + noise;
  k(0, 1) = truth.cross - std::conj(mm) * mp;
  k(1, 0) = std::conj(k(0, 1));
  // At most one photon per mode: <a^2> = 0.
  j(0, 0) = -mm * mm;
  j(1, 1) = -mp * mp;
  j(0, 1) = j(1, 0) = truth.pair - mm * mp;

  const Eigen::Vector4d mean(mm.real(), mm.imag(), mp.real(), mp.imag());
  const auto sig = detail::run(mean, detail::real_covariance(k, j), o, 0);
  const auto ref = detail::run(Eigen::Vector4d::Zero(), Eigen::Matrix4d::Identity() * (0.5 * noise), o, 1);

  const double n = double(o.shots);
  MomentSet out;
  out.mean_minus = sig.s_minus / n;
  out.mean_plus = sig.s_plus / n;
  out.n_minus = sig.n_minus / n - ref.n_minus / n;
  out.n_plus = sig.n_plus / n - ref.n_plus / n;
  out.cross = sig.cross / n - ref.cross / n;
  out.pair = sig.pair / n - ref.pair / n;
  out.normalization = truth.normalization;

  auto var_mean = [&](double sum2, cplx sum) { return std::max(0.0, sum2 / n - std::norm(sum / n)) / n; };
  auto var_real = [&](double sum2, double sum) { return std::max(0.0, sum2 / n - (sum / n) * (sum / n)) / n; };
  MomentErrors e;
  e.mean_minus = std::sqrt(var_mean(sig.n_minus, sig.s_minus));
  e.mean_plus = std::sqrt(var_mean(sig.n_plus, sig.s_plus));
  e.n_minus = std::sqrt(var_real(sig.n2_minus, sig.n_minus) + var_real(ref.n2_minus, ref.n_minus));
  e.n_plus = std::sqrt(var_real(sig.n2_plus, sig.n_plus) + var_real(ref.n2_plus, ref.n_plus));
  e.cross = std::sqrt(var_mean(sig.cross2, sig.cross) + var_mean(ref.cross2, ref.cross));
  e.pair = std::sqrt(var_mean(sig.cross2, sig.pair) + var_mean(ref.cross2, ref.pair));
  out.errors = e;
  return out;
}

}  // namespace wgmol
