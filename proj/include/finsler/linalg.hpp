#pragma once

// Tiny dense square matrices over double or Jet, with partial-pivot inversion.

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "finsler/error.hpp"
#include "finsler/jet.hpp"

namespace finsler {

inline constexpr double kPivotFloor = 1e-12;

template <class T>
class SquareMatrix {
public:
  SquareMatrix() = default;
  SquareMatrix(int n, T fill) : n_(n), data_(static_cast<std::size_t>(n * n), std::move(fill)) {}

  int dim() const noexcept { return n_; }
  T& operator()(int i, int j) { return data_[static_cast<std::size_t>(i * n_ + j)]; }
  const T& operator()(int i, int j) const { return data_[static_cast<std::size_t>(i * n_ + j)]; }

private:
  int n_ = 0;
  std::vector<T> data_;
};

using Matrix = SquareMatrix<double>;
using JetMatrix = SquareMatrix<Jet>;

inline double value_of(double v) { return v; }
inline double value_of(const Jet& v) { return v.value(); }

/// Gauss-Jordan inverse with partial pivoting on the value part. Throws
/// SingularMetric when a pivot falls below kPivotFloor times its row scale.
template <class T>
SquareMatrix<T> inverse(const SquareMatrix<T>& m) {
  const int n = m.dim();
  SquareMatrix<T> work = m;
  SquareMatrix<T> inv = m;
  std::vector<double> scale(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      scale[static_cast<std::size_t>(i)] = std::max(scale[static_cast<std::size_t>(i)], std::abs(value_of(m(i, j))));
      inv(i, j) = m(i, j) * 0.0;
      if (i == j) inv(i, j) += 1.0;
    }
    if (scale[static_cast<std::size_t>(i)] == 0.0) throw SingularMetric("matrix has a zero row");
  }

  for (int col = 0; col < n; ++col) {
    int pivot = col;
    double best = -1.0;
    for (int r = col; r < n; ++r) {
      const double cand = std::abs(value_of(work(r, col))) / scale[static_cast<std::size_t>(r)];
      if (cand > best) {
        best = cand;
        pivot = r;
      }
    }
    if (!(best >= kPivotFloor)) throw SingularMetric("pivot below floor in column " + std::to_string(col));
    if (pivot != col) {
      for (int j = 0; j < n; ++j) {
        std::swap(work(pivot, j), work(col, j));
        std::swap(inv(pivot, j), inv(col, j));
      }
      std::swap(scale[static_cast<std::size_t>(pivot)], scale[static_cast<std::size_t>(col)]);
    }
    const T p = work(col, col);
    const T recip = 1.0 / p;
    for (int j = 0; j < n; ++j) {
      work(col, j) = work(col, j) * recip;
      inv(col, j) = inv(col, j) * recip;
    }
    for (int r = 0; r < n; ++r) {
      if (r == col) continue;
      const T f = work(r, col);
      if (value_of(f) == 0.0 && std::is_same_v<T, double>) continue;
      for (int j = 0; j < n; ++j) {
        work(r, j) = work(r, j) - f * work(col, j);
        inv(r, j) = inv(r, j) - f * inv(col, j);
      }
    }
  }
  return inv;
}

/// True when the symmetric value matrix admits a Cholesky factorization.
template <class T>
bool is_positive_definite(const SquareMatrix<T>& m) {
  const int n = m.dim();
  std::vector<double> l(static_cast<std::size_t>(n * n), 0.0);
  for (int j = 0; j < n; ++j) {
    double diag = value_of(m(j, j));
    for (int k = 0; k < j; ++k) diag -= l[static_cast<std::size_t>(j * n + k)] * l[static_cast<std::size_t>(j * n + k)];
    if (!(diag > 0.0)) return false;
    const double ljj = std::sqrt(diag);
    l[static_cast<std::size_t>(j * n + j)] = ljj;
    for (int i = j + 1; i < n; ++i) {
      double s = value_of(m(i, j));
      for (int k = 0; k < j; ++k) s -= l[static_cast<std::size_t>(i * n + k)] * l[static_cast<std::size_t>(j * n + k)];
      l[static_cast<std::size_t>(i * n + j)] = s / ljj;
    }
  }
  return true;
}

template <class T>
Matrix values(const SquareMatrix<T>& m) {
  Matrix out(m.dim(), 0.0);
  for (int i = 0; i < m.dim(); ++i)
    for (int j = 0; j < m.dim(); ++j) out(i, j) = value_of(m(i, j));
  return out;
}

inline double determinant(Matrix m) {
  const int n = m.dim();
  double det = 1.0;
  for (int col = 0; col < n; ++col) {
    int pivot = col;
    for (int r = col + 1; r < n; ++r)
      if (std::abs(m(r, col)) > std::abs(m(pivot, col))) pivot = r;
    if (m(pivot, col) == 0.0) return 0.0;
    if (pivot != col) {
      for (int j = 0; j < n; ++j) std::swap(m(pivot, j), m(col, j));
      det = -det;
    }
    det *= m(col, col);
    for (int r = col + 1; r < n; ++r) {
      const double f = m(r, col) / m(col, col);
      for (int j = col; j < n; ++j) m(r, j) -= f * m(col, j);
    }
  }
  return det;
}

}  // namespace finsler
