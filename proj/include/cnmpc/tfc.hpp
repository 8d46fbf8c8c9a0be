/// \file cnmpc/tfc.hpp
/// \brief Minimum-time test problem ("TfC"): reach a target point in least
///        time with the heading confined to a band.
///
/// State (x, y), control (u, u_d) where u_d is the slack of the band
/// constraint (u - c_u)^2 + u_d^2 = r_u^2, parameter p = t_f. The horizon
/// is normalized to [0, 1] so the dynamics and stage cost carry a factor p.
/// The multiplier of the band constraint is the p-scaled one, which keeps p
/// out of the constraint rows.

#pragma once

#include <array>
#include <cmath>
#include <cstddef>

#include "cnmpc/linalg.hpp"
#include "cnmpc/ocp.hpp"

namespace cnmpc::tfc {

struct TfcConstants {
  double A = 1.0;
  double B = 1.0;
  double c_u = 0.8;
  double r_u = 0.2;
  double w_d = 0.005;
  double x0 = 0.0;
  double y0 = 0.0;
  double t0 = 0.0;
  double x_f = 1.0;
  double y_f = 1.0;
};

inline constexpr std::size_t n_x = 2;
inline constexpr std::size_t n_u = 2;
inline constexpr std::size_t n_c = 1;
inline constexpr std::size_t n_psi = 2;
inline constexpr std::size_t n_p = 1;

inline OcpDims tfc_dims(std::size_t N) { return OcpDims{n_x, n_u, n_c, n_psi, n_p, N}; }

/// Normalized-time state rate p (Ax + B) (cos u, sin u). The slack does not
/// enter.
inline std::array<double, 2> tfc_dynamics(const TfcConstants& c, ConstSpan x, ConstSpan u, double p) {
  const double speed = p * (c.A * x[0] + c.B);
  return {speed * std::cos(u[0]), speed * std::sin(u[0])};
}

inline double tfc_constraint(const TfcConstants& c, ConstSpan u) {
  const double du = u[0] - c.c_u;
  return du * du + u[1] * u[1] - c.r_u * c.r_u;
}

inline std::array<double, 2> tfc_terminal(const TfcConstants& c, ConstSpan x) {
  return {x[0] - c.x_f, x[1] - c.y_f};
}

/// phi = t_f.
inline double tfc_terminal_cost(double p) { return p; }

/// L = -w_d u_d, in physical time.
inline double tfc_stage_cost(const TfcConstants& c, double u_d) { return -c.w_d * u_d; }

/// J = phi + sum_i L_i * p * dtau over the normalized horizon.
inline double tfc_objective(const TfcConstants& c, const DecisionVector& U) {
  const std::size_t N = U.dims().N;
  const double p = U.p()[0];
  if (N == 0) return tfc_terminal_cost(p);
  const double dtau = 1.0 / static_cast<double>(N);
  double running = 0.0;
  for (std::size_t i = 0; i < N; ++i) running += tfc_stage_cost(c, U.u(i)[1]);
  return tfc_terminal_cost(p) + p * dtau * running;
}

/// The problem as an OcpSpec for the generic engine.
inline OcpSpec make_tfc_spec(const TfcConstants& c, std::size_t N) {
  OcpSpec spec;
  spec.dims = tfc_dims(N);
  spec.horizon = 1.0;
  OcpCallbacks& fn = spec.fn;

  fn.dynamics = [c](double, ConstSpan x, ConstSpan u, ConstSpan p, MutSpan out) {
    const auto f = tfc_dynamics(c, x, u, p[0]);
    out[0] = f[0];
    out[1] = f[1];
  };
  fn.constraint = [c](double, ConstSpan, ConstSpan u, ConstSpan, MutSpan out) { out[0] = tfc_constraint(c, u); };
  fn.terminal = [c](double, ConstSpan x, ConstSpan, MutSpan out) {
    const auto psi = tfc_terminal(c, x);
    out[0] = psi[0];
    out[1] = psi[1];
  };
  fn.terminal_x = [](double, ConstSpan, ConstSpan, MutSpan out) {
    out[0] = 1.0;
    out[1] = 0.0;
    out[2] = 0.0;
    out[3] = 1.0;
  };
  fn.terminal_p = [](double, ConstSpan, ConstSpan, MutSpan out) {
    out[0] = 0.0;
    out[1] = 0.0;
  };
  fn.terminal_cost_x = [](double, ConstSpan, ConstSpan, MutSpan out) {
    out[0] = 0.0;
    out[1] = 0.0;
  };
  fn.terminal_cost_p = [](double, ConstSpan, ConstSpan, MutSpan out) { out[0] = 1.0; };

  fn.hamiltonian_u = [c](double, ConstSpan x, ConstSpan lam, ConstSpan u, ConstSpan mu, ConstSpan p,
                         MutSpan out) {
    const double speed = c.A * x[0] + c.B;
    out[0] = p[0] * speed * (-std::sin(u[0]) * lam[0] + std::cos(u[0]) * lam[1]) + 2.0 * (u[0] - c.c_u) * mu[0];
    out[1] = 2.0 * mu[0] * u[1] - c.w_d * p[0];
  };
  fn.hamiltonian_x = [c](double, ConstSpan, ConstSpan lam, ConstSpan u, ConstSpan, ConstSpan p, MutSpan out) {
    out[0] = p[0] * c.A * (std::cos(u[0]) * lam[0] + std::sin(u[0]) * lam[1]);
    out[1] = 0.0;
  };
  fn.hamiltonian_p = [c](double, ConstSpan x, ConstSpan lam, ConstSpan u, ConstSpan, ConstSpan, MutSpan out) {
    const double speed = c.A * x[0] + c.B;
    out[0] = speed * (std::cos(u[0]) * lam[0] + std::sin(u[0]) * lam[1]) - c.w_d * u[1];
  };

  fn.terminal_cost = [](double, ConstSpan, ConstSpan p) { return tfc_terminal_cost(p[0]); };
  fn.stage_cost = [c](double, ConstSpan, ConstSpan u, ConstSpan p) { return p[0] * tfc_stage_cost(c, u[1]); };
  return spec;
}

/// States and costates by the problem's own closed-form recursions:
///   x_{i+1} = x_i + dtau p (A x_i + B) cos u_i,  y_{i+1} = y_i + dtau p (A x_i + B) sin u_i,
///   lambda_{1,i} = lambda_{1,i+1} + dtau p A (cos u_i lambda_{1,i+1} + sin u_i lambda_{2,i+1}),
///   lambda_{2,i} = lambda_{2,i+1},  lambda_N = nu.
inline HorizonTrajectory tfc_trajectory(const TfcConstants& c, const DecisionVector& U, ConstSpan x0) {
  const std::size_t N = U.dims().N;
  const double dtau = 1.0 / static_cast<double>(N);
  const double p = U.p()[0];
  HorizonTrajectory traj(n_x, N);
  traj.x(0)[0] = x0[0];
  traj.x(0)[1] = x0[1];
  for (std::size_t i = 0; i < N; ++i) {
    const double ui = U.u(i)[0];
    const double xi = traj.x(i)[0];
    const double yi = traj.x(i)[1];
    traj.x(i + 1)[0] = xi + dtau * (p * (c.A * xi + c.B) * std::cos(ui));
    traj.x(i + 1)[1] = yi + dtau * (p * (c.A * xi + c.B) * std::sin(ui));
  }
  traj.lambda(N)[0] = U.nu()[0];
  traj.lambda(N)[1] = U.nu()[1];
  for (std::size_t i = N; i-- > 0;) {
    const double ui = U.u(i)[0];
    const double l1 = traj.lambda(i + 1)[0];
    const double l2 = traj.lambda(i + 1)[1];
    traj.lambda(i)[0] = l1 + dtau * (p * c.A * (std::cos(ui) * l1 + std::sin(ui) * l2));
    traj.lambda(i)[1] = l2;
  }
  return traj;
}

/// The optimality rows written out for this problem, from given states and
/// costates. Same layout as eval_F.
inline Vec tfc_F_rows(const TfcConstants& c, const DecisionVector& U, const HorizonTrajectory& traj) {
  const std::size_t N = U.dims().N;
  const double dtau = 1.0 / static_cast<double>(N);
  const double p = U.p()[0];
  Vec F(U.size(), 0.0);
  double p_sum = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    const double ui = U.u(i)[0];
    const double udi = U.u(i)[1];
    const double mui = U.mu(i)[0];
    const double speed = c.A * traj.x(i)[0] + c.B;
    const double l1 = traj.lambda(i + 1)[0];
    const double l2 = traj.lambda(i + 1)[1];
    F[U.u_offset(i)] = dtau * (p * speed * (-std::sin(ui) * l1 + std::cos(ui) * l2) + 2.0 * (ui - c.c_u) * mui);
    F[U.u_offset(i) + 1] = dtau * (2.0 * mui * udi - c.w_d * p);
    F[U.mu_offset(i)] = dtau * ((ui - c.c_u) * (ui - c.c_u) + udi * udi - c.r_u * c.r_u);
    p_sum += dtau * (speed * (std::cos(ui) * l1 + std::sin(ui) * l2) - c.w_d * udi);
  }
  F[U.nu_offset()] = traj.x(N)[0] - c.x_f;
  F[U.nu_offset() + 1] = traj.x(N)[1] - c.y_f;
  F[U.p_offset()] = 1.0 + p_sum;
  return F;
}

/// Deterministic starting point for the cold-start Newton solve:
/// u_i = c_u, u_{d,i} = r_u / 2, mu_i chosen so the slack rows vanish,
/// nu = (0.1, 0.1), p = straight-line distance to the target.
inline DecisionVector tfc_initial_guess(const TfcConstants& c, std::size_t N) {
  DecisionVector U(tfc_dims(N));
  const double p = std::hypot(c.x_f - c.x0, c.y_f - c.y0);
  const double ud = 0.5 * c.r_u;
  for (std::size_t i = 0; i < N; ++i) {
    U.u(i)[0] = c.c_u;
    U.u(i)[1] = ud;
    U.mu(i)[0] = c.w_d * p / (2.0 * ud);
  }
  U.nu()[0] = 0.1;
  U.nu()[1] = 0.1;
  U.p()[0] = p;
  return U;
}

}  // namespace cnmpc::tfc
