/// \file cnmpc/ocp.hpp
/// \brief Optimal control problem definition and the stacked decision vector.

#pragma once

#include <cstddef>
#include <functional>
#include <stdexcept>
#include <utility>

#include "cnmpc/linalg.hpp"

namespace cnmpc {

struct OcpDims {
  std::size_t n_x = 1;
  std::size_t n_u = 1;
  std::size_t n_c = 0;
  std::size_t n_psi = 0;
  std::size_t n_p = 0;
  /// Horizon step count.
  std::size_t N = 1;

  /// Length of the stacked unknown [u_0..u_{N-1}, mu_0..mu_{N-1}, nu, p].
  std::size_t m() const noexcept { return N * (n_u + n_c) + n_psi + n_p; }

  void validate() const {
    if (n_x == 0 || n_u == 0 || N == 0)
      throw std::invalid_argument("OcpDims: n_x, n_u and N must be positive");
  }

  bool operator==(const OcpDims&) const = default;
};

/// Problem callbacks. Every callback writes its result into the trailing
/// output span, whose length is fixed by OcpDims. Callbacks must be pure:
/// they may be invoked concurrently during Jacobian assembly.
///
/// Argument order follows (tau, x, lambda, u, mu, p). H = L + lambda^T f + mu^T C.
struct OcpCallbacks {
  using StageFn = std::function<void(double, ConstSpan, ConstSpan, ConstSpan, MutSpan)>;
  using TerminalFn = std::function<void(double, ConstSpan, ConstSpan, MutSpan)>;
  using HamiltonianFn =
      std::function<void(double, ConstSpan, ConstSpan, ConstSpan, ConstSpan, ConstSpan, MutSpan)>;

  /// f(tau, x, u, p) -> n_x
  StageFn dynamics;
  /// C(tau, x, u, p) -> n_c
  StageFn constraint;
  /// psi(tau, x, p) -> n_psi
  TerminalFn terminal;
  /// dpsi/dx, row-major n_psi x n_x
  TerminalFn terminal_x;
  /// dpsi/dp, row-major n_psi x n_p
  TerminalFn terminal_p;
  /// dphi/dx -> n_x
  TerminalFn terminal_cost_x;
  /// dphi/dp -> n_p
  TerminalFn terminal_cost_p;
  /// dH/du -> n_u
  HamiltonianFn hamiltonian_u;
  /// dH/dx -> n_x
  HamiltonianFn hamiltonian_x;
  /// dH/dp -> n_p
  HamiltonianFn hamiltonian_p;

  /// Optional scalar values, used for reporting and by cost oracles.
  std::function<double(double, ConstSpan, ConstSpan)> terminal_cost;
  std::function<double(double, ConstSpan, ConstSpan, ConstSpan)> stage_cost;
};

struct OcpSpec {
  OcpDims dims;
  OcpCallbacks fn;
  /// Horizon length T in horizon-time units; the step is T / N.
  double horizon = 1.0;

  double dtau() const { return horizon / static_cast<double>(dims.N); }
};

/// U = [u_0, ..., u_{N-1}, mu_0, ..., mu_{N-1}, nu, p].
class DecisionVector {
 public:
  DecisionVector() = default;
  explicit DecisionVector(const OcpDims& dims) : dims_(dims), data_(dims.m(), 0.0) {}
  DecisionVector(const OcpDims& dims, Vec data) : dims_(dims), data_(std::move(data)) {
    if (data_.size() != dims_.m()) throw std::invalid_argument("DecisionVector: length does not match dims");
  }

  const OcpDims& dims() const noexcept { return dims_; }
  std::size_t size() const noexcept { return data_.size(); }

  std::size_t u_offset(std::size_t i) const { return i * dims_.n_u; }
  std::size_t mu_offset(std::size_t i) const { return dims_.N * dims_.n_u + i * dims_.n_c; }
  std::size_t nu_offset() const { return dims_.N * (dims_.n_u + dims_.n_c); }
  std::size_t p_offset() const { return nu_offset() + dims_.n_psi; }

  MutSpan u(std::size_t i) { return block(u_offset(i), dims_.n_u); }
  ConstSpan u(std::size_t i) const { return block(u_offset(i), dims_.n_u); }
  MutSpan mu(std::size_t i) { return block(mu_offset(i), dims_.n_c); }
  ConstSpan mu(std::size_t i) const { return block(mu_offset(i), dims_.n_c); }
  MutSpan nu() { return block(nu_offset(), dims_.n_psi); }
  ConstSpan nu() const { return block(nu_offset(), dims_.n_psi); }
  MutSpan p() { return block(p_offset(), dims_.n_p); }
  ConstSpan p() const { return block(p_offset(), dims_.n_p); }

  Vec& data() noexcept { return data_; }
  const Vec& data() const noexcept { return data_; }

  bool operator==(const DecisionVector&) const = default;

 private:
  MutSpan block(std::size_t off, std::size_t len) { return MutSpan(data_).subspan(off, len); }
  ConstSpan block(std::size_t off, std::size_t len) const { return ConstSpan(data_).subspan(off, len); }

  OcpDims dims_;
  Vec data_;
};

/// States and costates on the horizon grid, N+1 points each.
struct HorizonTrajectory {
  std::size_t n_x = 0;
  std::size_t N = 0;
  Vec states;
  Vec costates;

  HorizonTrajectory() = default;
  HorizonTrajectory(std::size_t nx, std::size_t n)
      : n_x(nx), N(n), states((n + 1) * nx, 0.0), costates((n + 1) * nx, 0.0) {}

  MutSpan x(std::size_t i) { return MutSpan(states).subspan(i * n_x, n_x); }
  ConstSpan x(std::size_t i) const { return ConstSpan(states).subspan(i * n_x, n_x); }
  MutSpan lambda(std::size_t i) { return MutSpan(costates).subspan(i * n_x, n_x); }
  ConstSpan lambda(std::size_t i) const { return ConstSpan(costates).subspan(i * n_x, n_x); }
};

}  // namespace cnmpc
