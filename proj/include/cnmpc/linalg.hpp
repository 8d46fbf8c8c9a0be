/// \file cnmpc/linalg.hpp
/// \brief Dense vectors and matrices, LU factorization with partial pivoting.

#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "cnmpc/errors.hpp"

namespace cnmpc {

using Vec = std::vector<double>;
using ConstSpan = std::span<const double>;
using MutSpan = std::span<double>;

inline double dot(ConstSpan a, ConstSpan b) {
  assert(a.size() == b.size());
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(ConstSpan a) { return std::sqrt(dot(a, a)); }

inline double norm_inf(ConstSpan a) {
  double s = 0.0;
  for (double v : a) s = std::max(s, std::abs(v));
  return s;
}

/// y += alpha * x
inline void axpy(double alpha, ConstSpan x, MutSpan y) {
  assert(x.size() == y.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

inline void scale(double alpha, MutSpan x) {
  for (double& v : x) v *= alpha;
}

inline bool all_finite(ConstSpan a) {
  return std::all_of(a.begin(), a.end(), [](double v) { return std::isfinite(v); });
}

/// Square row-major matrix.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  explicit DenseMatrix(std::size_t order, double fill = 0.0)
      : order_(order), data_(order * order, fill) {}

  static DenseMatrix identity(std::size_t order) {
    DenseMatrix m(order);
    for (std::size_t i = 0; i < order; ++i) m(i, i) = 1.0;
    return m;
  }

  static DenseMatrix from_rows(const std::vector<std::vector<double>>& rows) {
    DenseMatrix m(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != rows.size())
        throw std::invalid_argument("DenseMatrix::from_rows: matrix is not square");
      std::copy(rows[i].begin(), rows[i].end(), m.row(i).begin());
    }
    return m;
  }

  static DenseMatrix diagonal(ConstSpan d) {
    DenseMatrix m(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return m;
  }

  std::size_t order() const noexcept { return order_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * order_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * order_ + j]; }

  MutSpan row(std::size_t i) { return {data_.data() + i * order_, order_}; }
  ConstSpan row(std::size_t i) const { return {data_.data() + i * order_, order_}; }

  void set_column(std::size_t j, ConstSpan col) {
    assert(col.size() == order_);
    for (std::size_t i = 0; i < order_; ++i) (*this)(i, j) = col[i];
  }

  Vec column(std::size_t j) const {
    Vec c(order_);
    for (std::size_t i = 0; i < order_; ++i) c[i] = (*this)(i, j);
    return c;
  }

  ConstSpan data() const noexcept { return data_; }

  DenseMatrix transposed() const {
    DenseMatrix t(order_);
    for (std::size_t i = 0; i < order_; ++i)
      for (std::size_t j = 0; j < order_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  Vec multiply(ConstSpan v) const {
    assert(v.size() == order_);
    Vec out(order_);
    for (std::size_t i = 0; i < order_; ++i) out[i] = dot(row(i), v);
    return out;
  }

  DenseMatrix multiply(const DenseMatrix& b) const {
    assert(b.order_ == order_);
    DenseMatrix c(order_);
    for (std::size_t i = 0; i < order_; ++i)
      for (std::size_t k = 0; k < order_; ++k) {
        const double a_ik = (*this)(i, k);
        if (a_ik == 0.0) continue;
        for (std::size_t j = 0; j < order_; ++j) c(i, j) += a_ik * b(k, j);
      }
    return c;
  }

  /// Frobenius norm.
  double norm_fro() const { return norm2(data_); }

  double max_abs() const { return norm_inf(data_); }

  bool operator==(const DenseMatrix&) const = default;

 private:
  std::size_t order_ = 0;
  std::vector<double> data_;
};

inline DenseMatrix operator-(const DenseMatrix& a, const DenseMatrix& b) {
  assert(a.order() == b.order());
  DenseMatrix c(a.order());
  for (std::size_t i = 0; i < a.order(); ++i)
    for (std::size_t j = 0; j < a.order(); ++j) c(i, j) = a(i, j) - b(i, j);
  return c;
}

/// P*A = L*U with L unit lower triangular. Both factors share one packed
/// matrix; perm[i] is the row of A that ends up in row i of P*A.
class LUFactors {
 public:
  LUFactors(DenseMatrix packed, std::vector<std::size_t> perm)
      : packed_(std::move(packed)), perm_(std::move(perm)) {}

  std::size_t order() const noexcept { return packed_.order(); }
  const std::vector<std::size_t>& perm() const noexcept { return perm_; }
  const DenseMatrix& packed() const noexcept { return packed_; }

  DenseMatrix lower() const {
    DenseMatrix l = DenseMatrix::identity(order());
    for (std::size_t i = 0; i < order(); ++i)
      for (std::size_t j = 0; j < i; ++j) l(i, j) = packed_(i, j);
    return l;
  }

  DenseMatrix upper() const {
    DenseMatrix u(order());
    for (std::size_t i = 0; i < order(); ++i)
      for (std::size_t j = i; j < order(); ++j) u(i, j) = packed_(i, j);
    return u;
  }

  DenseMatrix permutation() const {
    DenseMatrix p(order());
    for (std::size_t i = 0; i < order(); ++i) p(i, perm_[i]) = 1.0;
    return p;
  }

  bool operator==(const LUFactors&) const = default;

 private:
  DenseMatrix packed_;
  std::vector<std::size_t> perm_;
};

/// Gaussian elimination with partial pivoting (largest absolute entry in the
/// column). Throws SingularMatrixError when a pivot column is exactly zero.
inline LUFactors lu_factor(const DenseMatrix& a) {
  const std::size_t m = a.order();
  if (!all_finite(a.data())) throw std::invalid_argument("lu_factor: non-finite entry");
  DenseMatrix lu = a;
  std::vector<std::size_t> perm(m);
  std::iota(perm.begin(), perm.end(), std::size_t{0});

  for (std::size_t k = 0; k < m; ++k) {
    std::size_t piv = k;
    double best = std::abs(lu(k, k));
    for (std::size_t i = k + 1; i < m; ++i) {
      if (std::abs(lu(i, k)) > best) {
        best = std::abs(lu(i, k));
        piv = i;
      }
    }
    if (best == 0.0) throw SingularMatrixError(k);
    if (piv != k) {
      std::swap_ranges(lu.row(k).begin(), lu.row(k).end(), lu.row(piv).begin());
      std::swap(perm[k], perm[piv]);
    }
    const double pivot = lu(k, k);
    for (std::size_t i = k + 1; i < m; ++i) {
      const double l_ik = lu(i, k) / pivot;
      lu(i, k) = l_ik;
      if (l_ik == 0.0) continue;
      for (std::size_t j = k + 1; j < m; ++j) lu(i, j) -= l_ik * lu(k, j);
    }
  }
  return LUFactors(std::move(lu), std::move(perm));
}

/// Solves A z = r given the factors of A: permute, forward, then backward
/// substitution.
inline Vec lu_solve(const LUFactors& f, ConstSpan r) {
  const std::size_t m = f.order();
  if (r.size() != m) throw std::invalid_argument("lu_solve: dimension mismatch");
  const DenseMatrix& lu = f.packed();
  Vec z(m);
  for (std::size_t i = 0; i < m; ++i) z[i] = r[f.perm()[i]];
  for (std::size_t i = 1; i < m; ++i) {
    double s = z[i];
    for (std::size_t j = 0; j < i; ++j) s -= lu(i, j) * z[j];
    z[i] = s;
  }
  for (std::size_t ii = m; ii-- > 0;) {
    double s = z[ii];
    for (std::size_t j = ii + 1; j < m; ++j) s -= lu(ii, j) * z[j];
    z[ii] = s / lu(ii, ii);
  }
  return z;
}

inline Vec dense_solve(const DenseMatrix& a, ConstSpan b) { return lu_solve(lu_factor(a), b); }

}  // namespace cnmpc
