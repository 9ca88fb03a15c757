#pragma once

// Two-time correlations of system operators via the quantum regression theorem,
// for a time-independent generator sampled on a uniform grid.
//   <A(t) B(t')> = Tr[B e^{L(t'-t)}(rho(t) A)]   for t <= t'
//                = Tr[A e^{L(t-t')}(B rho(t'))]  for t >  t'

#include <Eigen/Dense>

#include <vector>

#include "wgmol/errors.hpp"
#include "wgmol/lindblad.hpp"
#include "wgmol/mode_match.hpp"

namespace wgmol {

using RowVectorXc = Eigen::RowVectorXcd;

/// Row vector b with b * vec(X) = Tr[B X].
inline RowVectorXc trace_functional(const MatrixXc& b) { return vec(b.transpose()).transpose(); }

/// rho(t_k) = P^k rho0 for k = 0..n-1.
inline std::vector<MatrixXc> propagate_states(const MatrixXc& rho0, const MatrixXc& step_propagator, std::size_t n) {
  std::vector<MatrixXc> out;
  out.reserve(n);
  VectorXc x = vec(rho0);
  const Eigen::Index d = rho0.rows();
  for (std::size_t k = 0; k < n; ++k) {
    out.push_back(unvec(x, d));
    x = step_propagator * x;
  }
  return out;
}

/// Full matrix G(i, j) = <A(t_i) B(t_j)>. `states` are rho on the grid,
/// `step_propagator` = exp(L dt).
inline MatrixXc two_time_correlation(const std::vector<MatrixXc>& states, const MatrixXc& step_propagator,
                                     const MatrixXc& a, const MatrixXc& b) {
  const std::size_t n = states.size();
  if (n == 0) throw InvalidParameter("correlation needs at least one state");
  const RowVectorXc fa = trace_functional(a), fb = trace_functional(b);
  MatrixXc g(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    VectorXc x = vec(states[i] * a);
    for (std::size_t j = i; j < n; ++j) {
      g(Eigen::Index(i), Eigen::Index(j)) = fb * x;
      x = step_propagator * x;
    }
    VectorXc y = vec(b * states[i]);
    for (std::size_t k = i + 1; k < n; ++k) {
      y = step_propagator * y;
      g(Eigen::Index(k), Eigen::Index(i)) = fa * y;
    }
  }
  return g;
}

/// Convenience overload: evolves rho0 under `liouvillian_matrix` on `grid` first.
inline MatrixXc two_time_correlation(const MatrixXc& rho0, const MatrixXc& liouvillian_matrix, const MatrixXc& a,
                                     const MatrixXc& b, const TimeGrid& grid) {
  const MatrixXc p = propagator(liouvillian_matrix, grid.step);
  return two_time_correlation(propagate_states(rho0, p, grid.size), p, a, b);
}

/// sum_i w_i u_i Tr[A rho_i].
inline cplx filtered_expectation(const std::vector<MatrixXc>& states, const MatrixXc& a,
                                 const std::vector<cplx>& u, const std::vector<double>& w) {
  if (states.size() != u.size() || u.size() != w.size()) throw InvalidParameter("filter length mismatch");
  cplx acc = 0.0;
  for (std::size_t i = 0; i < states.size(); ++i) acc += w[i] * u[i] * (a * states[i]).trace();
  return acc;
}

/// sum_ij w_i w_j u_i v_j <A(t_i) B(t_j)> in O(n) propagator applications,
/// using backward recursions for the two time orderings.
inline cplx filtered_correlation(const std::vector<MatrixXc>& states, const MatrixXc& step_propagator,
                                 const MatrixXc& a, const std::vector<cplx>& u, const MatrixXc& b,
                                 const std::vector<cplx>& v, const std::vector<double>& w) {
  const std::size_t n = states.size();
  if (n == 0 || u.size() != n || v.size() != n || w.size() != n) throw InvalidParameter("filter length mismatch");
  const RowVectorXc fa = trace_functional(a), fb = trace_functional(b);
  cplx total = 0.0;
  // t_i <= t_j: y_i = w_i v_i fb + y_{i+1} P.
  RowVectorXc y = RowVectorXc::Zero(fb.size());
  for (std::size_t k = n; k-- > 0;) {
    y = (w[k] * v[k]) * fb + y * step_propagator;
    total += w[k] * u[k] * (y * vec(states[k] * a))(0);
  }
  // t_i > t_j: z_j = (w_{j+1} u_{j+1} fa + z_{j+1}) P.
  RowVectorXc z = RowVectorXc::Zero(fa.size());
  for (std::size_t k = n - 1; k-- > 0;) {
    z = ((w[k + 1] * u[k + 1]) * fa + z) * step_propagator;
    total += w[k] * v[k] * (z * vec(b * states[k]))(0);
  }
  return total;
}

}  // namespace wgmol
