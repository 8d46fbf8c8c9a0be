/// \file cnmpc/continuation.hpp
/// \brief Continuation NMPC engine: optimality residual F[U, x, t], its
///        forward-difference operator, Jacobian assembly and the per-step
///        Krylov update.

#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <exception>
#include <limits>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "cnmpc/errors.hpp"
#include "cnmpc/krylov.hpp"
#include "cnmpc/linalg.hpp"
#include "cnmpc/ocp.hpp"

namespace cnmpc {

/// x_{i+1} = x_i + f(tau_i, x_i, u_i, p) dtau, with x_0 = x0. Only the
/// states of the returned trajectory are filled.
inline HorizonTrajectory forward_states(const OcpSpec& spec, ConstSpan x0, const DecisionVector& U) {
  const OcpDims& d = spec.dims;
  if (x0.size() != d.n_x) throw std::invalid_argument("forward_states: state dimension mismatch");
  if (U.dims() != d) throw std::invalid_argument("forward_states: decision vector dims mismatch");
  const double dtau = spec.dtau();
  HorizonTrajectory traj(d.n_x, d.N);
  std::copy(x0.begin(), x0.end(), traj.x(0).begin());
  Vec f(d.n_x);
  for (std::size_t i = 0; i < d.N; ++i) {
    spec.fn.dynamics(static_cast<double>(i) * dtau, traj.x(i), U.u(i), U.p(), f);
    MutSpan next = traj.x(i + 1);
    ConstSpan cur = traj.x(i);
    for (std::size_t k = 0; k < d.n_x; ++k) next[k] = cur[k] + f[k] * dtau;
    if (!all_finite(next)) throw DivergedTrajectoryError("state recursion", i + 1);
  }
  return traj;
}

/// lambda_N = phi_x^T + psi_x^T nu, then
/// lambda_i = lambda_{i+1} + H_x^T(tau_i, x_i, lambda_{i+1}, u_i, mu_i, p) dtau.
inline void backward_costates(const OcpSpec& spec, HorizonTrajectory& traj, const DecisionVector& U) {
  const OcpDims& d = spec.dims;
  const double dtau = spec.dtau();
  const double tau_n = static_cast<double>(d.N) * dtau;
  MutSpan lam_n = traj.lambda(d.N);
  spec.fn.terminal_cost_x(tau_n, traj.x(d.N), U.p(), lam_n);
  if (d.n_psi > 0) {
    Vec psi_x(d.n_psi * d.n_x);
    spec.fn.terminal_x(tau_n, traj.x(d.N), U.p(), psi_x);
    ConstSpan nu = U.nu();
    for (std::size_t r = 0; r < d.n_psi; ++r)
      for (std::size_t k = 0; k < d.n_x; ++k) lam_n[k] += psi_x[r * d.n_x + k] * nu[r];
  }
  if (!all_finite(lam_n)) throw DivergedTrajectoryError("costate recursion", d.N);

  Vec hx(d.n_x);
  for (std::size_t i = d.N; i-- > 0;) {
    spec.fn.hamiltonian_x(static_cast<double>(i) * dtau, traj.x(i), traj.lambda(i + 1), U.u(i), U.mu(i), U.p(),
                          hx);
    MutSpan lam = traj.lambda(i);
    ConstSpan next = traj.lambda(i + 1);
    for (std::size_t k = 0; k < d.n_x; ++k) lam[k] = next[k] + hx[k] * dtau;
    if (!all_finite(lam)) throw DivergedTrajectoryError("costate recursion", i);
  }
}

/// Stacked optimality residual
///   [H_u^T dtau (i = 0..N-1); C dtau (i = 0..N-1); psi(x_N); phi_p^T + psi_p^T nu + sum H_p^T dtau].
/// The current time t is accepted for interface symmetry; horizon points
/// are tau_i = i * dtau.
inline Vec eval_F(const OcpSpec& spec, const DecisionVector& U, ConstSpan x, [[maybe_unused]] double t,
                  HorizonTrajectory* traj_out = nullptr) {
  const OcpDims& d = spec.dims;
  HorizonTrajectory traj = forward_states(spec, x, U);
  backward_costates(spec, traj, U);

  const double dtau = spec.dtau();
  const double tau_n = static_cast<double>(d.N) * dtau;
  Vec F(d.m(), 0.0);
  MutSpan out(F);

  Vec hp(d.n_p), hp_sum(d.n_p, 0.0);
  for (std::size_t i = 0; i < d.N; ++i) {
    const double tau = static_cast<double>(i) * dtau;
    MutSpan fu = out.subspan(U.u_offset(i), d.n_u);
    spec.fn.hamiltonian_u(tau, traj.x(i), traj.lambda(i + 1), U.u(i), U.mu(i), U.p(), fu);
    scale(dtau, fu);
    if (d.n_c > 0) {
      MutSpan fc = out.subspan(U.mu_offset(i), d.n_c);
      spec.fn.constraint(tau, traj.x(i), U.u(i), U.p(), fc);
      scale(dtau, fc);
    }
    if (d.n_p > 0) {
      spec.fn.hamiltonian_p(tau, traj.x(i), traj.lambda(i + 1), U.u(i), U.mu(i), U.p(), hp);
      axpy(dtau, hp, hp_sum);
    }
  }
  if (d.n_psi > 0) spec.fn.terminal(tau_n, traj.x(d.N), U.p(), out.subspan(U.nu_offset(), d.n_psi));
  if (d.n_p > 0) {
    MutSpan fp = out.subspan(U.p_offset(), d.n_p);
    spec.fn.terminal_cost_p(tau_n, traj.x(d.N), U.p(), fp);
    if (d.n_psi > 0) {
      Vec psi_p(d.n_psi * d.n_p);
      spec.fn.terminal_p(tau_n, traj.x(d.N), U.p(), psi_p);
      ConstSpan nu = U.nu();
      for (std::size_t r = 0; r < d.n_psi; ++r)
        for (std::size_t k = 0; k < d.n_p; ++k) fp[k] += psi_p[r * d.n_p + k] * nu[r];
    }
    for (std::size_t k = 0; k < d.n_p; ++k) fp[k] += hp_sum[k];
  }
  if (traj_out != nullptr) *traj_out = std::move(traj);
  return F;
}

/// a(V) = (F[U + hV, x, t] - F[U, x, t]) / h. F[U, x, t] is evaluated once
/// at construction. apply() is const and thread-safe.
class FdOperator {
 public:
  FdOperator(const OcpSpec& spec, DecisionVector base, Vec x, double t, double h)
      : spec_(&spec), base_(std::move(base)), x_(std::move(x)), t_(t), h_(h) {
    if (!(h_ > 0.0)) throw std::invalid_argument("FdOperator: h must be positive");
    f_base_ = eval_F(spec, base_, x_, t_);
  }

  FdOperator(const FdOperator& o)
      : spec_(o.spec_), base_(o.base_), x_(o.x_), t_(o.t_), h_(o.h_), f_base_(o.f_base_), evals_(o.evaluations()) {}
  FdOperator& operator=(const FdOperator&) = delete;

  std::size_t dimension() const noexcept { return f_base_.size(); }

  Vec apply(ConstSpan v) const {
    if (v.size() != dimension()) throw std::invalid_argument("FdOperator::apply: dimension mismatch");
    DecisionVector shifted = base_;
    axpy(h_, v, shifted.data());
    Vec out = eval_F(*spec_, shifted, x_, t_);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = (out[i] - f_base_[i]) / h_;
    evals_.fetch_add(1, std::memory_order_relaxed);
    return out;
  }

  const Vec& base_value() const noexcept { return f_base_; }
  const DecisionVector& base_point() const noexcept { return base_; }
  double step() const noexcept { return h_; }
  std::size_t evaluations() const noexcept { return evals_.load(std::memory_order_relaxed); }

 private:
  const OcpSpec* spec_;
  DecisionVector base_;
  Vec x_;
  double t_;
  double h_;
  Vec f_base_;
  mutable std::atomic<std::size_t> evals_{0};
};

inline FdOperator fd_map(const OcpSpec& spec, const DecisionVector& U, ConstSpan x, double t, double h) {
  return FdOperator(spec, U, Vec(x.begin(), x.end()), t, h);
}

struct AssemblyOptions {
  /// 0 selects std::thread::hardware_concurrency(); 1 is sequential.
  unsigned threads = 1;
};

/// Column j of the result is a(e_j). Columns are independent evaluations,
/// so the threaded path returns the same bits as the sequential one.
template <LinearMap Map>
DenseMatrix assemble_jacobian(const Map& a, const AssemblyOptions& opt = {}) {
  const std::size_t m = a.dimension();
  DenseMatrix out(m);
  auto column = [&](std::size_t j) {
    Vec e(m, 0.0);
    e[j] = 1.0;
    Vec col;
    try {
      col = a.apply(e);
    } catch (const std::exception& ex) {
      throw ColumnEvaluationError(j, ex.what());
    }
    out.set_column(j, col);
  };

  unsigned threads = opt.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : opt.threads;
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(m, 1)));
  if (threads <= 1) {
    for (std::size_t j = 0; j < m; ++j) column(j);
    return out;
  }

  // Each worker writes a disjoint set of columns; errors are collected per
  // worker and the one with the lowest column index is rethrown.
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::size_t> failed(threads, m);
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (unsigned w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t j = w; j < m; j += threads) {
        try {
          column(j);
        } catch (...) {
          errors[w] = std::current_exception();
          failed[w] = j;
          return;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  const auto first = std::min_element(failed.begin(), failed.end());
  if (*first < m) std::rethrow_exception(errors[static_cast<std::size_t>(first - failed.begin())]);
  return out;
}

/// (A + A^T) / 2, bitwise symmetric.
inline DenseMatrix symmetrize(const DenseMatrix& a) {
  DenseMatrix s(a.order());
  for (std::size_t i = 0; i < a.order(); ++i)
    for (std::size_t j = 0; j < a.order(); ++j) s(i, j) = 0.5 * (a(i, j) + a(j, i));
  return s;
}

struct ContinuationSettings {
  /// Forward-difference step of the operator a(.).
  double h = 1e-5;
  /// System sampling period.
  double dt = 0.02;
  KrylovMethod method = KrylovMethod::gmres;
  KrylovOptions krylov{};
};

struct StepDiagnostics {
  std::size_t step = 0;
  double t = 0.0;
  /// ||F[U_{i-1}, x_i, t_i]||_2, before the update.
  double norm_F = 0.0;
  /// Relative preconditioned residual at solver exit.
  double krylov_residual = 0.0;
  int iterations = 0;
  std::size_t map_evaluations = 0;
  bool converged = false;
  bool breakdown = false;
  /// The solver failed outright and U was left unchanged.
  bool degraded = false;
};

struct StepOutcome {
  Vec u_applied;
  StepDiagnostics diagnostics;
};

class ContinuationEngine {
 public:
  ContinuationEngine(DecisionVector initial, ContinuationSettings settings)
      : U_(std::move(initial)), settings_(settings) {
    if (!(settings_.h > 0.0)) throw std::invalid_argument("ContinuationEngine: h must be positive");
    if (!(settings_.dt > 0.0)) throw std::invalid_argument("ContinuationEngine: dt must be positive");
  }

  const DecisionVector& U() const noexcept { return U_; }
  DecisionVector& U() noexcept { return U_; }
  const ContinuationSettings& settings() const noexcept { return settings_; }
  std::size_t step_index() const noexcept { return step_index_; }

 private:
  template <Preconditioner P>
  friend StepOutcome continuation_step(ContinuationEngine&, const OcpSpec&, ConstSpan, double, const P&);

  DecisionVector U_;
  ContinuationSettings settings_;
  std::size_t step_index_ = 0;
};

/// One continuation update: solve a(W) = -F[U_{i-1}, x, t] / h from W = 0
/// with the configured Krylov method, then U_i = U_{i-1} + h W. Solver
/// failures leave U unchanged and set the degraded flag; they never throw.
template <Preconditioner P>
StepOutcome continuation_step(ContinuationEngine& engine, const OcpSpec& spec, ConstSpan x_meas, double t,
                              const P& precond) {
  const ContinuationSettings& s = engine.settings_;
  const FdOperator a = fd_map(spec, engine.U_, x_meas, t, s.h);

  StepOutcome out;
  StepDiagnostics& diag = out.diagnostics;
  diag.step = engine.step_index_;
  diag.t = t;
  diag.norm_F = norm2(a.base_value());

  Vec rhs = a.base_value();
  scale(-1.0 / s.h, rhs);
  const Vec w0(rhs.size(), 0.0);
  try {
    KrylovResult kr = krylov_solve(s.method, a, precond, rhs, w0, s.krylov);
    diag.krylov_residual = kr.relative_residual();
    diag.iterations = kr.iterations;
    diag.converged = kr.converged;
    diag.breakdown = kr.breakdown;
    if (all_finite(kr.x)) {
      axpy(s.h, kr.x, engine.U_.data());
    } else {
      diag.degraded = true;
    }
  } catch (const std::exception&) {
    diag.degraded = true;
  }
  diag.map_evaluations = a.evaluations();

  const ConstSpan u0 = engine.U_.u(0);
  out.u_applied.assign(u0.begin(), u0.end());
  ++engine.step_index_;
  return out;
}

struct NewtonOptions {
  double tol = 1e-6;
  int max_iterations = 50;
  /// Forward-difference step used to assemble the Newton Jacobian.
  double h = 1e-5;
  int max_halvings = 20;
  AssemblyOptions assembly{};
};

struct InitialSolveResult {
  DecisionVector U;
  double norm_F = 0.0;
  int iterations = 0;
  bool converged = false;
};

class ColdStartError : public std::runtime_error {
 public:
  ColdStartError(const std::string& what, InitialSolveResult best)
      : std::runtime_error(what), best_(std::move(best)) {}
  const InitialSolveResult& best() const noexcept { return best_; }

 private:
  InitialSolveResult best_;
};

/// Damped Newton on F[U, x0, t0] = 0 with a dense forward-difference
/// Jacobian and backtracking on ||F||. Returns the last iterate whether or
/// not the tolerance was met; throws ColdStartError only if the Jacobian
/// stays singular after a diagonal shift.
inline InitialSolveResult initial_solve(const OcpSpec& spec, ConstSpan x0, double t0, const DecisionVector& guess,
                                        const NewtonOptions& opt = {}) {
  InitialSolveResult res{guess, 0.0, 0, false};
  Vec F = eval_F(spec, res.U, x0, t0);
  res.norm_F = norm2(F);

  for (int it = 0; it < opt.max_iterations && res.norm_F > opt.tol; ++it) {
    const FdOperator a = fd_map(spec, res.U, x0, t0, opt.h);
    DenseMatrix A = assemble_jacobian(a, opt.assembly);
    Vec rhs = F;
    scale(-1.0, rhs);
    Vec delta;
    try {
      delta = dense_solve(A, rhs);
    } catch (const SingularMatrixError&) {
      const double shift = 1e-10 * A.norm_fro();
      for (std::size_t i = 0; i < A.order(); ++i) A(i, i) += shift;
      try {
        delta = dense_solve(A, rhs);
      } catch (const SingularMatrixError& e) {
        throw ColdStartError(std::string("initial_solve: singular Jacobian: ") + e.what(), res);
      }
    }

    double alpha = 1.0;
    bool accepted = false;
    for (int k = 0; k <= opt.max_halvings; ++k, alpha *= 0.5) {
      DecisionVector trial = res.U;
      axpy(alpha, delta, trial.data());
      Vec Ft;
      try {
        Ft = eval_F(spec, trial, x0, t0);
      } catch (const DivergedTrajectoryError&) {
        continue;
      }
      const double nt = norm2(Ft);
      if (std::isfinite(nt) && nt <= (1.0 - 1e-4 * alpha) * res.norm_F) {
        res.U = std::move(trial);
        F = std::move(Ft);
        res.norm_F = nt;
        accepted = true;
        break;
      }
    }
    res.iterations = it + 1;
    if (!accepted) break;
  }
  res.converged = res.norm_F <= opt.tol;
  return res;
}

}  // namespace cnmpc
