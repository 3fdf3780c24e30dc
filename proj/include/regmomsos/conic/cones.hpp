#pragma once

// Cone descriptions and the vector-space conventions shared by the conic
// program, its dump format and the interior-point solver.
//
// PSD blocks of side s are stored as the scaled lower-triangular
// vectorization of length s(s+1)/2, column by column: entry (i, j), i >= j,
// is multiplied by sqrt(2) when i != j. With this scaling the Euclidean
// inner product of two vectorized matrices is the trace inner product.
//
// Second-order blocks are laid out (t, u) with t >= ||u||_2.

#include <cmath>
#include <algorithm>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace regmomsos::conic {

enum class ConeKind { Free, NonNeg, SecondOrder, PSD };

inline std::string_view to_string(ConeKind k) {
  switch (k) {
    case ConeKind::Free: return "FREE";
    case ConeKind::NonNeg: return "NONNEG";
    case ConeKind::SecondOrder: return "SOC";
    case ConeKind::PSD: return "PSD";
  }
  return "?";
}

struct ConeBlock {
  ConeKind kind = ConeKind::Free;
  int size = 0;  ///< dimension, or matrix side for PSD

  static ConeBlock free(int dim) { return {ConeKind::Free, dim}; }
  static ConeBlock nonneg(int dim) { return {ConeKind::NonNeg, dim}; }
  static ConeBlock soc(int dim) { return {ConeKind::SecondOrder, dim}; }
  static ConeBlock psd(int side) { return {ConeKind::PSD, side}; }

  /// Number of scalar variables occupied.
  int dim() const { return kind == ConeKind::PSD ? size * (size + 1) / 2 : size; }

  /// Barrier degree (rank of the Jordan algebra, SOC counted as 1).
  int degree() const {
    switch (kind) {
      case ConeKind::Free: return 0;
      case ConeKind::NonNeg: return size;
      case ConeKind::SecondOrder: return 1;
      case ConeKind::PSD: return size;
    }
    return 0;
  }

  friend bool operator==(const ConeBlock&, const ConeBlock&) = default;
};

struct ConeSpec {
  std::vector<ConeBlock> blocks;

  int dim() const {
    int d = 0;
    for (const auto& b : blocks) d += b.dim();
    return d;
  }
  int degree() const {
    int d = 0;
    for (const auto& b : blocks) d += b.degree();
    return d;
  }
  void validate() const {
    for (const auto& b : blocks) {
      if (b.size < 0) throw std::invalid_argument("ConeSpec: negative block size");
      if (b.kind == ConeKind::SecondOrder && b.size < 2) {
        throw std::invalid_argument("ConeSpec: second-order block needs dim >= 2");
      }
    }
  }
  friend bool operator==(const ConeSpec&, const ConeSpec&) = default;
};

inline int svec_dim(int side) { return side * (side + 1) / 2; }

/// Position of (i, j) (either order) inside svec of a side-s matrix.
inline int svec_index(int s, int i, int j) {
  if (i < j) std::swap(i, j);
  // column j starts after columns 0..j-1 of lengths s, s-1, ...
  return j * s - j * (j - 1) / 2 + (i - j);
}

template <class Derived>
using VectorOf = Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1>;

template <class Derived>
inline VectorOf<Derived> svec(const Eigen::MatrixBase<Derived>& expr) {
  using T = typename Derived::Scalar;
  // product expressions would otherwise be re-evaluated for every coefficient read
  const auto& m = expr.eval();
  const int s = static_cast<int>(m.rows());
  const T r2 = std::sqrt(T(2));
  VectorOf<Derived> v(svec_dim(s));
  int k = 0;
  for (int j = 0; j < s; ++j) {
    v[k++] = m(j, j);
    for (int i = j + 1; i < s; ++i) v[k++] = r2 * T(0.5) * (m(i, j) + m(j, i));
  }
  return v;
}

template <class Derived>
inline Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> smat(
    const Eigen::MatrixBase<Derived>& v) {
  using T = typename Derived::Scalar;
  const int n = static_cast<int>(v.size());
  const int s = static_cast<int>((std::sqrt(8.0 * n + 1.0) - 1.0) / 2.0 + 0.5);
  if (svec_dim(s) != n) throw std::invalid_argument("smat: length is not triangular");
  const T r2 = std::sqrt(T(2));
  Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic> m(s, s);
  int k = 0;
  for (int j = 0; j < s; ++j) {
    m(j, j) = v[k++];
    for (int i = j + 1; i < s; ++i) {
      m(i, j) = m(j, i) = v[k++] / r2;
    }
  }
  return m;
}

/// Jordan-algebra primitives of the second-order cone, e = (1, 0, ..., 0).
namespace soc {

template <class D>
inline typename D::Scalar det(const Eigen::MatrixBase<D>& x) {
  return x[0] * x[0] - x.tail(x.size() - 1).squaredNorm();
}

/// x o y = (x . y, x0 y1 + y0 x1)
template <class D1, class D2>
inline VectorOf<D1> jordan(const Eigen::MatrixBase<D1>& x, const Eigen::MatrixBase<D2>& y) {
  VectorOf<D1> r(x.size());
  r[0] = x.dot(y);
  r.tail(x.size() - 1) = x[0] * y.tail(y.size() - 1) + y[0] * x.tail(x.size() - 1);
  return r;
}

/// Solve lambda o u = r for u.
template <class D1, class D2>
inline VectorOf<D1> jordan_solve(const Eigen::MatrixBase<D1>& lambda, const Eigen::MatrixBase<D2>& r) {
  const long n = lambda.size();
  const auto l0 = lambda[0];
  const auto l1 = lambda.tail(n - 1);
  const auto r1 = r.tail(n - 1);
  VectorOf<D1> u(n);
  u[0] = (l0 * r[0] - l1.dot(r1)) / det(lambda);
  u.tail(n - 1) = (r1 - u[0] * l1) / l0;
  return u;
}

template <class D>
inline VectorOf<D> sqrt(const Eigen::MatrixBase<D>& x) {
  using T = typename D::Scalar;
  const T a = std::sqrt(std::max(det(x), T(0)));
  VectorOf<D> r = x;
  r[0] += a;
  return r / std::sqrt(T(2) * (x[0] + a));
}

template <class D>
inline VectorOf<D> inverse(const Eigen::MatrixBase<D>& x) {
  VectorOf<D> r = -x;
  r[0] = x[0];
  return r / det(x);
}

/// Quadratic representation Q_w u = 2 w (w . u) - det(w) J u.
template <class D1, class D2>
inline VectorOf<D1> quad(const Eigen::MatrixBase<D1>& w, const Eigen::MatrixBase<D2>& u) {
  using T = typename D1::Scalar;
  VectorOf<D1> r = T(2) * w.dot(u) * w;
  const T dw = det(w);
  r[0] -= dw * u[0];
  r.tail(u.size() - 1) += dw * u.tail(u.size() - 1);
  return r;
}

/// Nesterov-Todd scaling point w of interior x, s: Q_w s = x.
template <class D1, class D2>
inline VectorOf<D1> nt_point(const Eigen::MatrixBase<D1>& x, const Eigen::MatrixBase<D2>& s) {
  using T = typename D1::Scalar;
  const T dx = std::sqrt(det(x));
  const T ds = std::sqrt(det(s));
  const VectorOf<D1> xb = x / dx;
  const VectorOf<D1> sb = s / ds;
  const T gamma = std::sqrt(T(0.5) * (T(1) + xb.dot(sb)));
  VectorOf<D1> wb = xb;
  wb[0] += sb[0];
  wb.tail(x.size() - 1) -= sb.tail(s.size() - 1);
  wb /= T(2) * gamma;
  return std::sqrt(dx / ds) * wb;
}

/// Largest alpha with x + alpha dx in the cone (x interior); +inf if unbounded.
template <class D1, class D2>
inline typename D1::Scalar max_step(const Eigen::MatrixBase<D1>& x, const Eigen::MatrixBase<D2>& dx) {
  using T = typename D1::Scalar;
  const long n = x.size();
  const T a = det(dx);
  const T b = T(2) * (x[0] * dx[0] - x.tail(n - 1).dot(dx.tail(n - 1)));
  const T c = det(x);
  const T inf = std::numeric_limits<T>::infinity();
  if (a == T(0)) return b < T(0) ? -c / b : inf;
  const T disc = b * b - T(4) * a * c;
  if (disc < T(0)) return inf;  // det(x + alpha dx) never vanishes
  const T sq = std::sqrt(disc);
  const T q = T(-0.5) * (b + (b >= T(0) ? sq : -sq));
  const T r1 = q / a;
  const T r2 = (q != T(0)) ? c / q : inf;
  T best = inf;
  if (r1 > T(0)) best = std::min(best, r1);
  if (r2 > T(0)) best = std::min(best, r2);
  return best;
}

}  // namespace soc

}  // namespace regmomsos::conic
