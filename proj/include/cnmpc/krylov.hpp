/// \file cnmpc/krylov.hpp
/// \brief Matrix-free Krylov solvers: preconditioned GMRES without restarts
///        and preconditioned MINRES.
///
/// Both solvers accept any type modelling LinearMap (a `dimension()` and a
/// const `apply(span) -> Vec`) and any callable preconditioner `r -> z`.
/// The map is allowed to be mildly nonlinear, as the forward-difference
/// Jacobian operator is; no matrix is ever formed.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string_view>
#include <utility>
#include <vector>

#include "cnmpc/errors.hpp"
#include "cnmpc/linalg.hpp"

namespace cnmpc {

template <class M>
concept LinearMap = requires(const M& map, ConstSpan v) {
  { map.dimension() } -> std::convertible_to<std::size_t>;
  { map.apply(v) } -> std::convertible_to<Vec>;
};

template <class P>
concept Preconditioner = requires(const P& precond, ConstSpan r) {
  { precond(r) } -> std::convertible_to<Vec>;
};

/// Adapts an arbitrary callable `Vec(ConstSpan)` into a LinearMap.
class FunctionMap {
 public:
  FunctionMap(std::size_t dimension, std::function<Vec(ConstSpan)> fn)
      : dimension_(dimension), fn_(std::move(fn)) {}

  std::size_t dimension() const noexcept { return dimension_; }
  Vec apply(ConstSpan v) const { return fn_(v); }

 private:
  std::size_t dimension_;
  std::function<Vec(ConstSpan)> fn_;
};

/// Matrix-vector product with an explicit dense matrix.
class MatrixMap {
 public:
  explicit MatrixMap(DenseMatrix a) : a_(std::move(a)) {}

  std::size_t dimension() const noexcept { return a_.order(); }
  Vec apply(ConstSpan v) const { return a_.multiply(v); }

 private:
  DenseMatrix a_;
};

struct IdentityPreconditioner {
  Vec operator()(ConstSpan r) const { return Vec(r.begin(), r.end()); }
};

enum class KrylovMethod { gmres, minres };

inline std::string_view to_string(KrylovMethod k) {
  return k == KrylovMethod::gmres ? "gmres" : "minres";
}

struct KrylovOptions {
  int k_max = 10;
  /// Relative tolerance on the preconditioned residual, measured against the
  /// initial preconditioned residual.
  double tol = 1e-5;
  /// When false the solver always performs k_max iterations (barring
  /// breakdown).
  bool early_exit = true;
};

struct KrylovResult {
  Vec x;
  /// Preconditioned residual estimate at exit.
  double residual_norm = 0.0;
  /// Preconditioned norm of the initial residual.
  double initial_residual_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  bool breakdown = false;
  /// Residual estimate after each iteration (index 0 is the initial value).
  std::vector<double> residual_history;

  double relative_residual() const {
    return initial_residual_norm > 0.0 ? residual_norm / initial_residual_norm : 0.0;
  }
};

/// Upper-Hessenberg (k+1) x k matrix stored by columns; column j keeps its
/// j+2 leading entries.
class HessenbergMatrix {
 public:
  std::size_t cols() const noexcept { return columns_.size(); }
  std::size_t rows() const noexcept { return columns_.size() + 1; }

  void push_column(Vec col) {
    if (col.size() != columns_.size() + 2)
      throw std::invalid_argument("HessenbergMatrix: column j needs j+2 entries");
    columns_.push_back(std::move(col));
  }

  double operator()(std::size_t i, std::size_t j) const {
    return i < columns_[j].size() ? columns_[j][i] : 0.0;
  }

  const Vec& column(std::size_t j) const { return columns_[j]; }

 private:
  std::vector<Vec> columns_;
};

struct LeastSquaresSolution {
  Vec y;
  /// Attained minimum of ||H y - beta e1||.
  double residual = 0.0;
  bool rank_deficient = false;
};

/// Incremental QR of a Hessenberg least-squares problem by Givens rotations.
/// The residual of the projected problem is available after every column.
class GivensLeastSquares {
 public:
  explicit GivensLeastSquares(double beta) : rhs_{beta} {}

  /// Appends column k of H (k+2 entries) and returns the new residual.
  double push_column(Vec h) {
    const std::size_t k = r_columns_.size();
    for (std::size_t i = 0; i < k; ++i) {
      const double t = cos_[i] * h[i] + sin_[i] * h[i + 1];
      h[i + 1] = -sin_[i] * h[i] + cos_[i] * h[i + 1];
      h[i] = t;
    }
    const double rr = std::hypot(h[k], h[k + 1]);
    double c = 1.0, s = 0.0;
    if (rr != 0.0) {
      c = h[k] / rr;
      s = h[k + 1] / rr;
    }
    cos_.push_back(c);
    sin_.push_back(s);
    h[k] = rr;
    h.pop_back();
    r_columns_.push_back(std::move(h));
    rhs_.push_back(-s * rhs_[k]);
    rhs_[k] = c * rhs_[k];
    return residual();
  }

  std::size_t cols() const noexcept { return r_columns_.size(); }
  double residual() const { return std::abs(rhs_.back()); }

  /// Back substitution on the triangular factor. Reports rank deficiency
  /// instead of dividing by a negligible diagonal.
  bool solve(Vec& y) const {
    const std::size_t k = cols();
    y.assign(k, 0.0);
    double scale_r = 0.0;
    for (const Vec& c : r_columns_) scale_r = std::max(scale_r, norm_inf(c));
    const double floor = std::numeric_limits<double>::epsilon() * scale_r * static_cast<double>(k + 1);
    for (std::size_t ii = k; ii-- > 0;) {
      if (std::abs(r_columns_[ii][ii]) <= floor) return false;
      double s = rhs_[ii];
      for (std::size_t j = ii + 1; j < k; ++j) s -= r_columns_[j][ii] * y[j];
      y[ii] = s / r_columns_[ii][ii];
    }
    return true;
  }

 private:
  std::vector<Vec> r_columns_;
  Vec cos_, sin_;
  Vec rhs_;
};

namespace detail {

inline LeastSquaresSolution min_norm_lsq(const HessenbergMatrix& h, double beta) {
  const auto k = static_cast<Eigen::Index>(h.cols());
  Eigen::MatrixXd hm = Eigen::MatrixXd::Zero(k + 1, k);
  for (Eigen::Index j = 0; j < k; ++j)
    for (Eigen::Index i = 0; i <= j + 1; ++i) hm(i, j) = h(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(k + 1);
  rhs(0) = beta;
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(hm);
  const Eigen::VectorXd y = cod.solve(rhs);
  LeastSquaresSolution out;
  out.y.assign(y.data(), y.data() + y.size());
  out.residual = (hm * y - rhs).norm();
  out.rank_deficient = true;
  return out;
}

/// b - a(x0); a zero initial guess costs no map evaluation (a(0) = 0).
template <class Map>
Vec initial_residual(const Map& a, ConstSpan b, ConstSpan x0) {
  Vec r(b.begin(), b.end());
  if (std::any_of(x0.begin(), x0.end(), [](double v) { return v != 0.0; })) {
    const Vec ax = a.apply(x0);
    axpy(-1.0, ax, r);
  }
  return r;
}

}  // namespace detail

/// argmin_y ||H y - (beta, 0, ..., 0)^T||_2 for an upper-Hessenberg H.
inline LeastSquaresSolution hessenberg_lsq(const HessenbergMatrix& h, double beta) {
  GivensLeastSquares qr(beta);
  for (std::size_t j = 0; j < h.cols(); ++j) qr.push_column(h.column(j));
  LeastSquaresSolution out;
  if (!qr.solve(out.y)) return detail::min_norm_lsq(h, beta);
  out.residual = qr.residual();
  return out;
}

/// Basis and projected matrix of the last GMRES call, for diagnostics.
struct GmresTrace {
  std::vector<Vec> basis;
  HessenbergMatrix hessenberg;
};

/// Preconditioned GMRES without restarts.
///
/// Arnoldi runs on the preconditioned operator T a(.) with classical
/// Gram-Schmidt. Exits early once the preconditioned residual estimate
/// falls below tol * ||T (b - a(x0))|| (unless disabled), or on a lucky
/// breakdown, where the solution is exact in the current subspace.
template <LinearMap Map, Preconditioner Precond>
KrylovResult gmres(const Map& a, const Precond& precond, ConstSpan b, ConstSpan x0,
                   const KrylovOptions& opt, GmresTrace* trace = nullptr) {
  const std::size_t m = a.dimension();
  if (opt.k_max < 1) throw std::invalid_argument("gmres: k_max must be >= 1");
  if (!(opt.tol >= 0.0)) throw std::invalid_argument("gmres: tol must be nonnegative");
  if (b.size() != m || x0.size() != m) throw std::invalid_argument("gmres: dimension mismatch");

  KrylovResult res;
  res.x.assign(x0.begin(), x0.end());

  Vec r = detail::initial_residual(a, b, x0);
  Vec z = precond(r);
  const double beta = norm2(z);
  res.initial_residual_norm = beta;
  res.residual_norm = beta;
  res.residual_history.push_back(beta);
  if (beta == 0.0) {
    res.converged = true;
    return res;
  }

  std::vector<Vec> v;
  v.reserve(static_cast<std::size_t>(opt.k_max) + 1);
  scale(1.0 / beta, z);
  v.push_back(std::move(z));

  HessenbergMatrix h;
  GivensLeastSquares qr(beta);
  const double breakdown_floor = std::numeric_limits<double>::epsilon() * beta;

  for (int k = 0; k < opt.k_max; ++k) {
    z = precond(a.apply(v[static_cast<std::size_t>(k)]));
    Vec hcol(static_cast<std::size_t>(k) + 2);
    for (std::size_t i = 0; i <= static_cast<std::size_t>(k); ++i) hcol[i] = dot(v[i], z);
    for (std::size_t i = 0; i <= static_cast<std::size_t>(k); ++i) axpy(-hcol[i], v[i], z);
    const double znorm = norm2(z);
    hcol[static_cast<std::size_t>(k) + 1] = znorm;
    h.push_column(hcol);
    res.residual_norm = qr.push_column(std::move(hcol));
    res.residual_history.push_back(res.residual_norm);
    res.iterations = k + 1;

    if (znorm <= breakdown_floor) {
      res.breakdown = true;
      break;
    }
    scale(1.0 / znorm, z);
    v.push_back(std::move(z));
    if (opt.early_exit && res.residual_norm <= opt.tol * beta) break;
  }

  Vec y;
  if (!qr.solve(y)) {
    LeastSquaresSolution ls = detail::min_norm_lsq(h, beta);
    y = std::move(ls.y);
    res.residual_norm = ls.residual;
  }
  for (std::size_t j = 0; j < y.size(); ++j) axpy(y[j], v[j], res.x);
  res.converged = res.breakdown || res.residual_norm <= opt.tol * beta;

  if (trace != nullptr) {
    v.resize(static_cast<std::size_t>(res.iterations));
    trace->basis = std::move(v);
    trace->hessenberg = std::move(h);
  }
  return res;
}

/// Preconditioned MINRES (Paige-Saunders) via the three-term Lanczos
/// recurrence. Needs a symmetric map and a symmetric positive definite
/// preconditioner; the residual estimate is in the preconditioner norm.
/// Keeps a fixed set of work vectors regardless of k_max.
template <LinearMap Map, Preconditioner Precond>
KrylovResult minres(const Map& a, const Precond& precond, ConstSpan b, ConstSpan x0,
                    const KrylovOptions& opt) {
  const std::size_t m = a.dimension();
  if (opt.k_max < 1) throw std::invalid_argument("minres: k_max must be >= 1");
  if (!(opt.tol >= 0.0)) throw std::invalid_argument("minres: tol must be nonnegative");
  if (b.size() != m || x0.size() != m) throw std::invalid_argument("minres: dimension mismatch");
  constexpr double eps = std::numeric_limits<double>::epsilon();

  KrylovResult res;
  res.x.assign(x0.begin(), x0.end());

  Vec r1 = detail::initial_residual(a, b, x0);
  Vec y = precond(r1);
  double beta1 = dot(r1, y);
  if (beta1 < 0.0) throw IndefinitePreconditionerError("minres: preconditioner is not positive definite");
  beta1 = std::sqrt(beta1);
  res.initial_residual_norm = beta1;
  res.residual_norm = beta1;
  res.residual_history.push_back(beta1);
  if (beta1 == 0.0) {
    res.converged = true;
    return res;
  }

  Vec r2 = r1;
  Vec v(m), w(m, 0.0), w1(m, 0.0), w2(m, 0.0);
  double old_beta = 0.0, beta = beta1;
  double dbar = 0.0, epsln = 0.0, phibar = beta1;
  double cs = -1.0, sn = 0.0;

  for (int itn = 1; itn <= opt.k_max; ++itn) {
    for (std::size_t i = 0; i < m; ++i) v[i] = y[i] / beta;
    y = a.apply(v);
    if (itn >= 2) axpy(-beta / old_beta, r1, y);
    const double alpha = dot(v, y);
    axpy(-alpha / beta, r2, y);
    std::swap(r1, r2);
    r2 = y;
    y = precond(r2);
    old_beta = beta;
    double beta_sq = dot(r2, y);
    if (beta_sq < 0.0) throw IndefinitePreconditionerError("minres: preconditioner is not positive definite");
    beta = std::sqrt(beta_sq);

    const double old_eps = epsln;
    const double delta = cs * dbar + sn * alpha;
    const double gbar = sn * dbar - cs * alpha;
    epsln = sn * beta;
    dbar = -cs * beta;

    const double gamma = std::max(std::hypot(gbar, beta), eps);
    cs = gbar / gamma;
    sn = beta / gamma;
    const double phi = cs * phibar;
    phibar = sn * phibar;

    std::swap(w1, w2);
    std::swap(w2, w);
    for (std::size_t i = 0; i < m; ++i) w[i] = (v[i] - old_eps * w1[i] - delta * w2[i]) / gamma;
    axpy(phi, w, res.x);

    res.iterations = itn;
    res.residual_norm = phibar;
    res.residual_history.push_back(phibar);

    if (beta <= eps * beta1) {
      res.breakdown = true;
      break;
    }
    if (opt.early_exit && phibar <= opt.tol * beta1) break;
  }
  res.converged = res.breakdown || res.residual_norm <= opt.tol * beta1;
  return res;
}

template <LinearMap Map, Preconditioner Precond>
KrylovResult krylov_solve(KrylovMethod method, const Map& a, const Precond& precond, ConstSpan b,
                          ConstSpan x0, const KrylovOptions& opt) {
  return method == KrylovMethod::gmres ? gmres(a, precond, b, x0, opt) : minres(a, precond, b, x0, opt);
}

}  // namespace cnmpc
