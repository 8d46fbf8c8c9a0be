/// \file cnmpc/precond.hpp
/// \brief LU preconditioner rebuilt on a fixed time schedule t = j * t_p.

#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

#include "cnmpc/continuation.hpp"
#include "cnmpc/linalg.hpp"
#include "cnmpc/ocp.hpp"

namespace cnmpc {

struct PrecondConfig {
  bool enabled = false;
  /// Rebuild period in seconds.
  double t_p = 0.2;
  bool symmetrize_before_factor = false;
  AssemblyOptions assembly{};

  void validate() const {
    if (enabled && !(t_p > 0.0)) throw std::invalid_argument("PrecondConfig: t_p must be positive");
  }
};

struct PrecondState {
  std::optional<LUFactors> factors;
  std::optional<double> built_at;
  int rebuild_count = 0;
  /// Set when the last rebuild attempt failed and older factors are in use.
  bool stale = false;
  std::string last_warning;
};

/// True when enabled and either nothing is built yet or a full period has
/// elapsed. Half a sampling period of slack absorbs drift in t.
inline bool should_rebuild(const PrecondConfig& cfg, const PrecondState& st, double t, double dt) {
  if (!cfg.enabled) return false;
  if (!st.factors || !st.built_at) return true;
  return t >= *st.built_at + cfg.t_p - 0.5 * dt;
}

/// Assembles the forward-difference Jacobian at (U, x, t), optionally
/// symmetrizes it, and factors it. On a singular matrix the previous
/// factors are kept and the state is marked stale.
inline PrecondState rebuild(const OcpSpec& spec, const DecisionVector& U, ConstSpan x, double t, double h,
                            const PrecondConfig& cfg, PrecondState previous = {}) {
  const FdOperator a = fd_map(spec, U, x, t, h);
  DenseMatrix A = assemble_jacobian(a, cfg.assembly);
  if (cfg.symmetrize_before_factor) A = symmetrize(A);
  try {
    LUFactors f = lu_factor(A);
    PrecondState next;
    next.factors = std::move(f);
    next.built_at = t;
    next.rebuild_count = previous.rebuild_count + 1;
    return next;
  } catch (const SingularMatrixError& e) {
    previous.stale = true;
    previous.last_warning = std::string("preconditioner rebuild at t=") + std::to_string(t) + " failed: " + e.what();
    return previous;
  }
}

/// z = U^{-1} (L^{-1} P r) with the stored factors, or z = r when disabled
/// or nothing has been built.
inline Vec apply(const PrecondConfig& cfg, const PrecondState& st, ConstSpan r) {
  if (cfg.enabled && st.factors) return lu_solve(*st.factors, r);
  return Vec(r.begin(), r.end());
}

/// Callable view usable as a Krylov preconditioner.
class LuPreconditioner {
 public:
  LuPreconditioner(const PrecondConfig& cfg, const PrecondState& st) : cfg_(&cfg), st_(&st) {}
  Vec operator()(ConstSpan r) const { return apply(*cfg_, *st_, r); }

 private:
  const PrecondConfig* cfg_;
  const PrecondState* st_;
};

}  // namespace cnmpc
