#pragma once

// Two coupled Duffing oscillators (transmons) and their collective eigenstates.
//
// Bare product basis |n1, n2>, flat index n1 * n_levels + n2. Transmon 1 is the
// most significant digit. The waveguide drive operators are b_S = b1 + b2 and
// b_A = b1 - b2.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "wgmol/errors.hpp"
#include "wgmol/units.hpp"

namespace wgmol {

using cplx = std::complex<double>;
using MatrixXc = Eigen::MatrixXcd;
using VectorXc = Eigen::VectorXcd;

struct MoleculeParams {
  double omega1 = 0.0;  // rad/s
  double omega2 = 0.0;
  double alpha1 = 0.0;  // rad/s, negative for transmons
  double alpha2 = 0.0;
  double g = 0.0;
  int n_levels = 3;

  static MoleculeParams identical(double omega, double alpha, double g, int n_levels = 3) {
    return {omega, omega, alpha, alpha, g, n_levels};
  }

  /// Spectroscopic values of the measured device (identical transmons).
  static MoleculeParams device_defaults() {
    return identical(from_ghz(5.9945), from_mhz(-246.9), from_mhz(296.4), 3);
  }

  bool identical_transmons() const { return omega1 == omega2 && alpha1 == alpha2; }
  int dimension() const { return n_levels * n_levels; }

  void validate() const {
    if (n_levels < 2) throw InvalidParameter("n_levels must be >= 2");
    if (!(g >= 0.0)) throw InvalidParameter("g must be >= 0");
    for (double v : {omega1, omega2, alpha1, alpha2, g})
      if (!std::isfinite(v)) throw InvalidParameter("molecule parameters must be finite");
  }

  bool operator==(const MoleculeParams&) const = default;
};

enum class Symmetry { even, odd, none };

inline std::string_view to_string(Symmetry s) {
  switch (s) {
    case Symmetry::even: return "even";
    case Symmetry::odd: return "odd";
    default: return "none";
  }
}

/// Named collective states, in the row/column order of the dipole matrices.
enum class Level : int { ground = 0, a = 1, s = 2, two_minus = 3, two_plus_lower = 4, two_plus_upper = 5 };
inline constexpr int kCanonicalSize = 6;
inline constexpr std::array<Level, kCanonicalSize> kCanonicalLevels = {
    Level::ground, Level::a, Level::s, Level::two_minus, Level::two_plus_lower, Level::two_plus_upper};

inline constexpr int index_of(Level l) { return static_cast<int>(l); }

inline std::string_view to_string(Level l) {
  switch (l) {
    case Level::ground: return "0";
    case Level::a: return "a";
    case Level::s: return "s";
    case Level::two_minus: return "2-";
    case Level::two_plus_lower: return "2+L";
    case Level::two_plus_upper: return "2+U";
  }
  return "?";
}

inline std::optional<Level> parse_level(std::string_view name) {
  for (Level l : kCanonicalLevels)
    if (to_string(l) == name) return l;
  return std::nullopt;
}

enum class Port { S, A };

inline std::string_view to_string(Port p) { return p == Port::S ? "S" : "A"; }
inline Port other(Port p) { return p == Port::S ? Port::A : Port::S; }
inline std::optional<Port> parse_port(std::string_view name) {
  if (name == "S") return Port::S;
  if (name == "A") return Port::A;
  return std::nullopt;
}

namespace detail {

inline int flat(int n1, int n2, int n) { return n1 * n + n2; }

/// Lowering operator of transmon `which` (1 or 2) on the product space.
inline MatrixXc lowering(int which, int n) {
  MatrixXc b = MatrixXc::Zero(n * n, n * n);
  for (int n1 = 0; n1 < n; ++n1)
    for (int n2 = 0; n2 < n; ++n2) {
      if (which == 1 && n1 > 0) b(flat(n1 - 1, n2, n), flat(n1, n2, n)) = std::sqrt(double(n1));
      if (which == 2 && n2 > 0) b(flat(n1, n2 - 1, n), flat(n1, n2, n)) = std::sqrt(double(n2));
    }
  return b;
}

}  // namespace detail

/// Transmon-swap operator P|n1,n2> = |n2,n1>.
inline MatrixXc permutation_operator(int n) {
  MatrixXc p = MatrixXc::Zero(n * n, n * n);
  for (int n1 = 0; n1 < n; ++n1)
    for (int n2 = 0; n2 < n; ++n2) p(detail::flat(n2, n1, n), detail::flat(n1, n2, n)) = 1.0;
  return p;
}

/// Port drive operator (b1 + sign*b2) + h.c.; sign = +1 for S, -1 for A.
inline MatrixXc drive_operator(int n, double relative_sign) {
  MatrixXc b = detail::lowering(1, n) + relative_sign * detail::lowering(2, n);
  return b + b.adjoint();
}

inline MatrixXc drive_operator(int n, Port port) { return drive_operator(n, port == Port::S ? 1.0 : -1.0); }

inline int excitation_number(int flat_index, int n) { return flat_index / n + flat_index % n; }

/// H = sum_i (w_i b_i^+ b_i + a_i/2 b_i^+ b_i^+ b_i b_i) + g (b1^+ b2 + b1 b2^+).
inline MatrixXc build_hamiltonian(const MoleculeParams& p) {
  p.validate();
  const int n = p.n_levels;
  MatrixXc h = MatrixXc::Zero(n * n, n * n);
  for (int n1 = 0; n1 < n; ++n1)
    for (int n2 = 0; n2 < n; ++n2) {
      const int i = detail::flat(n1, n2, n);
      h(i, i) = p.omega1 * n1 + 0.5 * p.alpha1 * n1 * (n1 - 1) + p.omega2 * n2 + 0.5 * p.alpha2 * n2 * (n2 - 1);
      // g b1^+ b2 : |n1,n2> -> sqrt((n1+1) n2) |n1+1,n2-1>
      if (n1 + 1 < n && n2 > 0) {
        const int j = detail::flat(n1 + 1, n2 - 1, n);
        const double amp = p.g * std::sqrt(double(n1 + 1) * n2);
        h(j, i) = amp;
        h(i, j) = amp;
      }
    }
  return h;
}

struct EigenSystem {
  /// Grouped by excitation manifold, nondecreasing energy inside a manifold.
  std::vector<double> energies;
  MatrixXc states;  // columns, bare product basis
  std::vector<Symmetry> symmetry;
  std::vector<int> manifold;
  /// Column of `states` holding each canonical level; -1 when truncation excludes it.
  std::array<int, kCanonicalSize> canonical{};
  int n_levels = 0;
  Warnings warnings;

  bool has(Level l) const { return canonical[index_of(l)] >= 0; }

  int column(Level l) const {
    const int c = canonical[index_of(l)];
    if (c < 0) throw InvalidParameter("level " + std::string(to_string(l)) + " is outside the truncated space");
    return c;
  }
  double energy(Level l) const { return energies[column(l)]; }
  VectorXc state(Level l) const { return states.col(column(l)); }
  Symmetry symmetry_of(Level l) const { return symmetry[column(l)]; }
};

namespace detail {

/// Orthonormal basis (columns) of one excitation block split by swap parity.
/// For non-identical transmons parity is not conserved and a single bare block is returned.
struct BlockBasis {
  std::vector<MatrixXc> sectors;
};

inline BlockBasis block_basis(int m, int n, bool split_parity) {
  std::vector<std::pair<int, int>> bare;
  for (int n1 = 0; n1 < n; ++n1) {
    const int n2 = m - n1;
    if (n2 >= 0 && n2 < n) bare.emplace_back(n1, n2);
  }
  BlockBasis out;
  if (!split_parity) {
    MatrixXc v = MatrixXc::Zero(n * n, Eigen::Index(bare.size()));
    for (std::size_t k = 0; k < bare.size(); ++k) v(flat(bare[k].first, bare[k].second, n), Eigen::Index(k)) = 1.0;
    out.sectors.push_back(std::move(v));
    return out;
  }
  std::vector<VectorXc> even, odd;
  const double r = 1.0 / std::sqrt(2.0);
  for (auto [n1, n2] : bare) {
    if (n1 > n2) continue;
    VectorXc e = VectorXc::Zero(n * n);
    if (n1 == n2) {
      e(flat(n1, n2, n)) = 1.0;
      even.push_back(e);
      continue;
    }
    VectorXc o = VectorXc::Zero(n * n);
    e(flat(n1, n2, n)) = r;
    e(flat(n2, n1, n)) = r;
    o(flat(n1, n2, n)) = r;
    o(flat(n2, n1, n)) = -r;
    even.push_back(e);
    odd.push_back(o);
  }
  for (auto* group : {&even, &odd}) {
    if (group->empty()) continue;
    MatrixXc v(n * n, Eigen::Index(group->size()));
    for (std::size_t k = 0; k < group->size(); ++k) v.col(Eigen::Index(k)) = (*group)[k];
    out.sectors.push_back(std::move(v));
  }
  return out;
}

inline void fix_phase(Eigen::Ref<VectorXc> v) {
  const double max_mag = v.cwiseAbs().maxCoeff();
  for (Eigen::Index k = 0; k < v.size(); ++k) {
    if (std::abs(v(k)) >= max_mag * (1.0 - 1e-9)) {
      v *= std::conj(v(k)) / std::abs(v(k));
      v(k) = std::abs(v(k));
      return;
    }
  }
}

}  // namespace detail

inline constexpr double kDegeneracyWindow = two_pi * 1e3;  // 1 kHz

/// Diagonalizes H block by block (excitation number, and swap parity for
/// identical transmons), labels parity, fixes phases, and names the six
/// canonical collective states.
inline EigenSystem diagonalize(const MatrixXc& h, const MoleculeParams& p) {
  p.validate();
  const int n = p.n_levels;
  if (h.rows() != n * n || h.cols() != n * n) throw InvalidParameter("Hamiltonian dimension does not match n_levels");
  if ((h - h.adjoint()).cwiseAbs().maxCoeff() > 1e-9 * std::max(1.0, h.cwiseAbs().maxCoeff()))
    throw InvalidParameter("Hamiltonian is not Hermitian");

  const bool split = p.identical_transmons();
  const MatrixXc perm = permutation_operator(n);

  struct Entry {
    double energy;
    VectorXc vec;
    double parity;
    int manifold;
  };
  std::vector<Entry> entries;
  for (int m = 0; m <= 2 * (n - 1); ++m) {
    std::vector<Entry> block;
    for (const MatrixXc& v : detail::block_basis(m, n, split).sectors) {
      const MatrixXc hb = v.adjoint() * h * v;
      Eigen::SelfAdjointEigenSolver<MatrixXc> es(hb);
      if (es.info() != Eigen::Success) throw NumericalError("eigensolver failed");
      for (Eigen::Index k = 0; k < hb.rows(); ++k) {
        VectorXc psi = v * es.eigenvectors().col(k);
        psi.normalize();
        detail::fix_phase(psi);
        const double parity = (psi.adjoint() * perm * psi)(0, 0).real();
        block.push_back({es.eigenvalues()(k), std::move(psi), parity, m});
      }
    }
    std::stable_sort(block.begin(), block.end(), [](const Entry& x, const Entry& y) { return x.energy < y.energy; });
    // Exact ties (g = 0): even before odd.
    for (std::size_t k = 0; k + 1 < block.size(); ++k) {
      const double scale = std::max(1.0, std::abs(block[k].energy));
      if (std::abs(block[k + 1].energy - block[k].energy) <= 1e-12 * scale && block[k].parity < block[k + 1].parity)
        std::swap(block[k], block[k + 1]);
    }
    for (auto& e : block) entries.push_back(std::move(e));
  }

  EigenSystem sys;
  sys.n_levels = n;
  sys.states.resize(n * n, Eigen::Index(entries.size()));
  for (std::size_t k = 0; k < entries.size(); ++k) {
    const auto& e = entries[k];
    sys.energies.push_back(e.energy);
    sys.states.col(Eigen::Index(k)) = e.vec;
    sys.manifold.push_back(e.manifold);
    Symmetry label = Symmetry::none;
    if (e.parity > 1.0 - 1e-9) label = Symmetry::even;
    if (e.parity < -(1.0 - 1e-9)) label = Symmetry::odd;
    sys.symmetry.push_back(label);
  }

  for (std::size_t k = 0; k + 1 < entries.size(); ++k) {
    if (entries[k].manifold != entries[k + 1].manifold) continue;
    if (std::abs(entries[k + 1].energy - entries[k].energy) < kDegeneracyWindow &&
        (sys.symmetry[k] == Symmetry::none || sys.symmetry[k + 1] == Symmetry::none))
      sys.warnings.push_back("near-degenerate pair in manifold " + std::to_string(entries[k].manifold) +
                             ": symmetry labels are ambiguous");
  }

  // Canonical naming: lowest parity in a manifold is the antisymmetric member.
  sys.canonical.fill(-1);
  auto members = [&](int m) {
    std::vector<int> idx;
    for (std::size_t k = 0; k < entries.size(); ++k)
      if (entries[k].manifold == m) idx.push_back(int(k));
    return idx;
  };
  auto min_parity = [&](const std::vector<int>& idx) {
    return *std::min_element(idx.begin(), idx.end(),
                             [&](int x, int y) { return entries[x].parity < entries[y].parity - 1e-12; });
  };
  sys.canonical[index_of(Level::ground)] = members(0).front();
  if (auto one = members(1); one.size() == 2) {
    const int odd = min_parity(one);
    sys.canonical[index_of(Level::a)] = odd;
    sys.canonical[index_of(Level::s)] = one[0] == odd ? one[1] : one[0];
  }
  if (auto two = members(2); two.size() == 3) {
    const int odd = min_parity(two);
    sys.canonical[index_of(Level::two_minus)] = odd;
    std::vector<int> rest;
    for (int k : two)
      if (k != odd) rest.push_back(k);
    sys.canonical[index_of(Level::two_plus_lower)] = rest[0];
    sys.canonical[index_of(Level::two_plus_upper)] = rest[1];
  }
  return sys;
}

inline EigenSystem diagonalize(const MoleculeParams& p) { return diagonalize(build_hamiltonian(p), p); }

struct CouplingCoefficients {
  double s_minus = 0.0;
  double s_plus = 0.0;
  double a_minus = 0.0;
  double a_plus = 0.0;
};

/// Closed-form dipole amplitudes between |s>,|a> and the |2+> pair, in the
/// unnormalized-composition convention.
inline CouplingCoefficients coupling_coefficients(const MoleculeParams& p) {
  p.validate();
  if (!p.identical_transmons()) throw InvalidParameter("coupling coefficients require identical transmons");
  if (p.g == 0.0) throw InvalidParameter("coupling coefficients divide by g; g must be > 0");
  const double alpha = 0.5 * (p.alpha1 + p.alpha2);
  const double root = std::sqrt(alpha * alpha + 16.0 * p.g * p.g);
  const double den = std::sqrt(2.0) * p.g;
  return {(-alpha - root + 4.0 * p.g) / den, (-alpha + root + 4.0 * p.g) / den, (alpha - root + 4.0 * p.g) / den,
          (alpha + root + 4.0 * p.g) / den};
}

using Matrix6d = Eigen::Matrix<double, kCanonicalSize, kCanonicalSize>;

struct DipoleMatrices {
  /// Normalized eigenvectors, rows/columns in canonical order (0, a, s, 2-, 2+L, 2+U).
  Matrix6d d_s = Matrix6d::Zero();
  Matrix6d d_a = Matrix6d::Zero();
  /// Same matrices with each state scaled so its leading transmon-1 amplitude
  /// (|0,0>, |1,0>, |2,0>) is 1. Empty when that amplitude vanishes.
  std::optional<Matrix6d> d_s_unnormalized;
  std::optional<Matrix6d> d_a_unnormalized;

  const Matrix6d& of(Port p) const { return p == Port::S ? d_s : d_a; }
  double operator()(Port p, Level from, Level to) const { return of(p)(index_of(from), index_of(to)); }
};

inline DipoleMatrices dipole_matrices(const EigenSystem& sys, const MoleculeParams& p) {
  if (sys.n_levels < 3) throw InvalidParameter("dipole matrices need at least 3 levels per transmon");
  if (sys.n_levels != p.n_levels) throw InvalidParameter("eigensystem and parameters disagree on n_levels");
  const int n = sys.n_levels;
  MatrixXc basis(n * n, kCanonicalSize);
  for (Level l : kCanonicalLevels) basis.col(index_of(l)) = sys.state(l);

  auto project = [&](double sign) {
    const MatrixXc m = basis.adjoint() * drive_operator(n, sign) * basis;
    if (m.imag().cwiseAbs().maxCoeff() > 1e-9) throw NumericalError("dipole matrix is not real after phase fixing");
    Matrix6d d = m.real();
    d.diagonal().setZero();
    return Matrix6d((d + d.transpose()) * 0.5);
  };
  DipoleMatrices out;
  out.d_s = project(+1.0);
  out.d_a = project(-1.0);

  std::array<double, kCanonicalSize> lead{};
  const std::array<int, kCanonicalSize> lead_index = {detail::flat(0, 0, n), detail::flat(1, 0, n), detail::flat(1, 0, n),
                                                      detail::flat(2, 0, n), detail::flat(2, 0, n), detail::flat(2, 0, n)};
  bool ok = true;
  for (int k = 0; k < kCanonicalSize; ++k) {
    lead[k] = basis(lead_index[k], k).real();
    if (std::abs(lead[k]) < 1e-12) ok = false;
  }
  if (ok) {
    Matrix6d ds = out.d_s, da = out.d_a;
    for (int i = 0; i < kCanonicalSize; ++i)
      for (int j = 0; j < kCanonicalSize; ++j) {
        ds(i, j) /= lead[i] * lead[j];
        da(i, j) /= lead[i] * lead[j];
      }
    out.d_s_unnormalized = ds;
    out.d_a_unnormalized = da;
  }
  return out;
}

struct Transition {
  Level from;  // lower state
  Level to;
  double frequency;  // rad/s
  Port port;
  double dipole;  // normalized convention
};

using TransitionTable = std::vector<Transition>;

inline constexpr double kDipoleThreshold = 1e-9;

inline TransitionTable transition_table(const EigenSystem& sys, const DipoleMatrices& d) {
  TransitionTable table;
  for (Port port : {Port::S, Port::A})
    for (int i = 0; i < kCanonicalSize; ++i)
      for (int j = i + 1; j < kCanonicalSize; ++j) {
        const double amp = d.of(port)(i, j);
        if (std::abs(amp) <= kDipoleThreshold) continue;
        Level li = kCanonicalLevels[i], lj = kCanonicalLevels[j];
        if (sys.energy(li) > sys.energy(lj)) std::swap(li, lj);
        table.push_back({li, lj, sys.energy(lj) - sys.energy(li), port, amp});
      }
  std::stable_sort(table.begin(), table.end(), [](const Transition& x, const Transition& y) {
    return x.frequency < y.frequency;
  });
  return table;
}

inline const Transition* find_transition(const TransitionTable& table, Level x, Level y, Port port) {
  for (const auto& t : table)
    if (t.port == port && ((t.from == x && t.to == y) || (t.from == y && t.to == x))) return &t;
  return nullptr;
}

}  // namespace wgmol
