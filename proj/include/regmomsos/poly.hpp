#pragma once

// Multivariate polynomials in the monomial basis and in tensor-product
// orthonormal bases, with change of basis, products, projection, norms and
// affine pullbacks.

#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "regmomsos/basis1d.hpp"
#include "regmomsos/multi_index.hpp"

namespace regmomsos {

using CoeffMap = std::map<MultiIndex, double, GradedLexLess>;

namespace detail {

inline void accumulate(CoeffMap& m, const MultiIndex& a, double v) {
  if (v == 0.0) return;
  auto [it, inserted] = m.emplace(a, v);
  if (!inserted) {
    it->second += v;
    if (it->second == 0.0) m.erase(it);
  }
}

inline int max_degree(const CoeffMap& m) {
  int d = -1;
  for (const auto& [a, c] : m) d = std::max(d, total_degree(a));
  return d;
}

}  // namespace detail

/// Polynomial sum_alpha c_alpha x^alpha. Zero coefficients are never stored.
class MonomialPoly {
 public:
  MonomialPoly() = default;
  explicit MonomialPoly(int n) : n_(n) {
    if (n < 1) throw std::invalid_argument("MonomialPoly: n must be >= 1");
  }
  MonomialPoly(int n, std::initializer_list<std::pair<MultiIndex, double>> terms) : MonomialPoly(n) {
    for (const auto& [a, c] : terms) add_term(a, c);
  }

  static MonomialPoly constant(int n, double c) {
    MonomialPoly p(n);
    p.add_term(MultiIndex(n, 0), c);
    return p;
  }

  int n() const { return n_; }
  const CoeffMap& terms() const { return terms_; }
  int degree() const { return detail::max_degree(terms_); }
  bool is_zero() const { return terms_.empty(); }

  double coeff(const MultiIndex& a) const {
    auto it = terms_.find(a);
    return it == terms_.end() ? 0.0 : it->second;
  }

  void add_term(const MultiIndex& a, double c) {
    if (static_cast<int>(a.size()) != n_) {
      throw std::invalid_argument("MonomialPoly: exponent vector of length " +
                                  std::to_string(a.size()) + ", expected " + std::to_string(n_));
    }
    for (int e : a) {
      if (e < 0) throw std::invalid_argument("MonomialPoly: negative exponent");
    }
    detail::accumulate(terms_, a, c);
  }

  double evaluate(const std::vector<double>& x) const {
    double acc = 0.0;
    for (const auto& [a, c] : terms_) {
      double t = c;
      for (int i = 0; i < n_; ++i) t *= std::pow(x[i], a[i]);
      acc += t;
    }
    return acc;
  }

  MonomialPoly& operator+=(const MonomialPoly& o) {
    check_same(o);
    for (const auto& [a, c] : o.terms_) detail::accumulate(terms_, a, c);
    return *this;
  }
  MonomialPoly& operator-=(const MonomialPoly& o) {
    check_same(o);
    for (const auto& [a, c] : o.terms_) detail::accumulate(terms_, a, -c);
    return *this;
  }
  MonomialPoly& operator*=(double s) {
    if (s == 0.0) {
      terms_.clear();
      return *this;
    }
    for (auto& [a, c] : terms_) c *= s;
    return *this;
  }
  friend MonomialPoly operator+(MonomialPoly a, const MonomialPoly& b) { return a += b; }
  friend MonomialPoly operator-(MonomialPoly a, const MonomialPoly& b) { return a -= b; }
  friend MonomialPoly operator*(double s, MonomialPoly a) { return a *= s; }
  friend MonomialPoly operator*(const MonomialPoly& p, const MonomialPoly& q) {
    p.check_same(q);
    MonomialPoly r(p.n_);
    MultiIndex e(p.n_);
    for (const auto& [a, ca] : p.terms_) {
      for (const auto& [b, cb] : q.terms_) {
        for (int i = 0; i < p.n_; ++i) e[i] = a[i] + b[i];
        detail::accumulate(r.terms_, e, ca * cb);
      }
    }
    return r;
  }
  friend bool operator==(const MonomialPoly& a, const MonomialPoly& b) {
    return a.n_ == b.n_ && a.terms_ == b.terms_;
  }

 private:
  void check_same(const MonomialPoly& o) const {
    if (o.n_ != n_) throw std::invalid_argument("MonomialPoly: dimension mismatch");
  }

  int n_ = 1;
  CoeffMap terms_;
};

/// Polynomial sum_alpha c_alpha b_alpha(x) with b_alpha = prod_i b_{alpha_i}(x_i)
/// orthonormal for the product of the per-coordinate families.
class OrthoPoly {
 public:
  OrthoPoly() = default;
  explicit OrthoPoly(std::vector<MeasureFamily> families) : families_(std::move(families)) {
    if (families_.empty()) throw std::invalid_argument("OrthoPoly: need at least one coordinate");
  }

  static OrthoPoly basis_element(std::vector<MeasureFamily> families, const MultiIndex& a,
                                 double c = 1.0) {
    OrthoPoly p(std::move(families));
    p.add_term(a, c);
    return p;
  }

  int n() const { return static_cast<int>(families_.size()); }
  const std::vector<MeasureFamily>& families() const { return families_; }
  const CoeffMap& coeffs() const { return coeffs_; }
  int degree() const { return detail::max_degree(coeffs_); }

  double coeff(const MultiIndex& a) const {
    auto it = coeffs_.find(a);
    return it == coeffs_.end() ? 0.0 : it->second;
  }

  void add_term(const MultiIndex& a, double c) {
    if (static_cast<int>(a.size()) != n()) throw std::invalid_argument("OrthoPoly: bad index length");
    detail::accumulate(coeffs_, a, c);
  }

  double evaluate(const std::vector<double>& x) const {
    const int deg = std::max(degree(), 0);
    std::vector<std::vector<double>> vals(n());
    for (int i = 0; i < n(); ++i) vals[i] = eval_basis(families_[i], deg, x[i]);
    double acc = 0.0;
    for (const auto& [a, c] : coeffs_) {
      double t = c;
      for (int i = 0; i < n(); ++i) t *= vals[i][a[i]];
      acc += t;
    }
    return acc;
  }

  OrthoPoly& operator+=(const OrthoPoly& o) {
    check_same(o);
    for (const auto& [a, c] : o.coeffs_) detail::accumulate(coeffs_, a, c);
    return *this;
  }
  OrthoPoly& operator-=(const OrthoPoly& o) {
    check_same(o);
    for (const auto& [a, c] : o.coeffs_) detail::accumulate(coeffs_, a, -c);
    return *this;
  }
  OrthoPoly& operator*=(double s) {
    if (s == 0.0) {
      coeffs_.clear();
      return *this;
    }
    for (auto& [a, c] : coeffs_) c *= s;
    return *this;
  }
  friend OrthoPoly operator+(OrthoPoly a, const OrthoPoly& b) { return a += b; }
  friend OrthoPoly operator-(OrthoPoly a, const OrthoPoly& b) { return a -= b; }
  friend OrthoPoly operator*(double s, OrthoPoly a) { return a *= s; }

  void check_same(const OrthoPoly& o) const {
    if (o.families_ != families_) {
      throw std::invalid_argument("OrthoPoly: operands use different reference measures");
    }
  }

 private:
  std::vector<MeasureFamily> families_;
  CoeffMap coeffs_;
};

namespace detail {

// Monomial coefficients (length deg+1) -> orthonormal coefficients, by Horner
// synthesis q <- x q + c_k with x q applied through the Jacobi operator.
inline std::vector<double> monomial_to_ortho_1d(MeasureFamily f, const std::vector<double>& c) {
  const int m = static_cast<int>(c.size()) - 1;
  std::vector<double> q(c.size(), 0.0);
  std::vector<double> next(c.size(), 0.0);
  int top = -1;  // current degree of q
  for (int k = m; k >= 0; --k) {
    std::fill(next.begin(), next.end(), 0.0);
    for (int i = 0; i <= top; ++i) {
      if (q[i] == 0.0) continue;
      next[i + 1] += jacobi_offdiag(f, i) * q[i];
      if (i > 0) next[i - 1] += jacobi_offdiag(f, i - 1) * q[i];
    }
    next[0] += c[k];
    q.swap(next);
    ++top;
  }
  return q;
}

// Monomial expansions of b_0..b_m (row k holds the coefficients of b_k).
inline std::vector<std::vector<double>> basis_monomial_table(MeasureFamily f, int m) {
  std::vector<std::vector<double>> t(m + 1, std::vector<double>(m + 1, 0.0));
  t[0][0] = 1.0;
  if (m == 0) return t;
  t[1][1] = 1.0 / jacobi_offdiag(f, 0);
  for (int k = 1; k < m; ++k) {
    const double ak = jacobi_offdiag(f, k);
    const double akm = jacobi_offdiag(f, k - 1);
    for (int e = 0; e <= k; ++e) t[k + 1][e + 1] += t[k][e] / ak;
    for (int e = 0; e < k; ++e) t[k + 1][e] -= akm * t[k - 1][e] / ak;
  }
  return t;
}

// Apply a 1-D linear map along coordinate `axis` of a coefficient map.
template <class Fn>
CoeffMap transform_axis(const CoeffMap& in, int axis, Fn&& fn) {
  std::map<MultiIndex, std::vector<double>, GradedLexLess> groups;
  for (const auto& [a, c] : in) {
    MultiIndex key = a;
    key[axis] = 0;
    auto& v = groups[key];
    if (static_cast<int>(v.size()) <= a[axis]) v.resize(a[axis] + 1, 0.0);
    v[a[axis]] += c;
  }
  CoeffMap out;
  for (auto& [key, series] : groups) {
    const std::vector<double> mapped = fn(series);
    MultiIndex a = key;
    for (std::size_t k = 0; k < mapped.size(); ++k) {
      a[axis] = static_cast<int>(k);
      accumulate(out, a, mapped[k]);
    }
  }
  return out;
}

}  // namespace detail

/// Exact change of basis from monomials to the tensor orthonormal basis.
inline OrthoPoly to_ortho(const MonomialPoly& p, const std::vector<MeasureFamily>& families) {
  if (static_cast<int>(families.size()) != p.n()) {
    throw std::invalid_argument("to_ortho: one measure family per coordinate required");
  }
  CoeffMap cur = p.terms();
  for (int ax = 0; ax < p.n(); ++ax) {
    cur = detail::transform_axis(cur, ax, [&](const std::vector<double>& s) {
      return detail::monomial_to_ortho_1d(families[ax], s);
    });
  }
  OrthoPoly out(families);
  for (const auto& [a, c] : cur) out.add_term(a, c);
  return out;
}

/// Inverse of to_ortho.
inline MonomialPoly from_ortho(const OrthoPoly& p) {
  CoeffMap cur = p.coeffs();
  for (int ax = 0; ax < p.n(); ++ax) {
    const MeasureFamily f = p.families()[ax];
    cur = detail::transform_axis(cur, ax, [&](const std::vector<double>& s) {
      const int m = static_cast<int>(s.size()) - 1;
      const auto table = detail::basis_monomial_table(f, m);
      std::vector<double> out(s.size(), 0.0);
      for (int k = 0; k <= m; ++k) {
        if (s[k] == 0.0) continue;
        for (int e = 0; e <= k; ++e) out[e] += s[k] * table[k][e];
      }
      return out;
    });
  }
  MonomialPoly out(p.n());
  for (const auto& [a, c] : cur) out.add_term(a, c);
  return out;
}

/// Product of two tensor basis elements, accumulated into `out` with weight w.
inline void accumulate_basis_product(CoeffMap& out, const std::vector<MeasureFamily>& fams,
                                     const MultiIndex& a, const MultiIndex& b, double w) {
  const int n = static_cast<int>(fams.size());
  std::vector<const SparseCoeffs*> f(n);
  for (int i = 0; i < n; ++i) f[i] = &linearize_product(fams[i], a[i], b[i]);
  // odometer over the per-coordinate sparse factors
  std::vector<std::size_t> pos(n, 0);
  MultiIndex e(n);
  while (true) {
    double v = w;
    for (int i = 0; i < n; ++i) {
      const auto& [k, c] = (*f[i])[pos[i]];
      e[i] = k;
      v *= c;
    }
    detail::accumulate(out, e, v);
    int i = n - 1;
    while (i >= 0 && ++pos[i] == f[i]->size()) pos[i--] = 0;
    if (i < 0) break;
  }
}

inline OrthoPoly multiply(const OrthoPoly& p, const OrthoPoly& q) {
  p.check_same(q);
  CoeffMap out;
  for (const auto& [a, ca] : p.coeffs()) {
    for (const auto& [b, cb] : q.coeffs()) accumulate_basis_product(out, p.families(), a, b, ca * cb);
  }
  OrthoPoly r(p.families());
  for (const auto& [a, c] : out) r.add_term(a, c);
  return r;
}

/// Orthogonal projection onto polynomials of degree <= d. In an orthonormal
/// basis this is coefficient truncation.
inline OrthoPoly project(const OrthoPoly& p, int d) {
  if (d < 0) throw std::invalid_argument("project: d must be >= 0");
  OrthoPoly r(p.families());
  for (const auto& [a, c] : p.coeffs()) {
    if (total_degree(a) <= d) r.add_term(a, c);
  }
  return r;
}

/// Drops monomials of total degree > d. Not an orthogonal projection.
inline MonomialPoly truncate_monomial_degree(const MonomialPoly& p, int d) {
  MonomialPoly r(p.n());
  for (const auto& [a, c] : p.terms()) {
    if (total_degree(a) <= d) r.add_term(a, c);
  }
  return r;
}

inline double l2_norm(const OrthoPoly& p) {
  double s = 0.0;
  for (const auto& [a, c] : p.coeffs()) s += c * c;
  return std::sqrt(s);
}

/// Coordinate-wise map x_i -> scale_i x_i + shift_i.
struct AffineMap {
  std::vector<double> scale;
  std::vector<double> shift;

  static AffineMap identity(int n) { return {std::vector<double>(n, 1.0), std::vector<double>(n, 0.0)}; }

  /// Map sending [-1, 1] onto [lo_i, hi_i] per axis.
  static AffineMap from_box(const std::vector<std::pair<double, double>>& box) {
    AffineMap m;
    for (const auto& [lo, hi] : box) {
      if (!(hi > lo)) throw std::invalid_argument("AffineMap::from_box: need lo < hi");
      m.scale.push_back(0.5 * (hi - lo));
      m.shift.push_back(0.5 * (hi + lo));
    }
    return m;
  }

  int n() const { return static_cast<int>(scale.size()); }

  void validate() const {
    if (scale.size() != shift.size()) throw std::invalid_argument("AffineMap: size mismatch");
    for (double a : scale) {
      if (a == 0.0 || !std::isfinite(a)) throw std::invalid_argument("AffineMap: scale must be nonzero");
    }
  }

  std::vector<double> apply(const std::vector<double>& x) const {
    std::vector<double> y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = scale[i] * x[i] + shift[i];
    return y;
  }

  AffineMap inverse() const {
    validate();
    AffineMap m;
    for (std::size_t i = 0; i < scale.size(); ++i) {
      m.scale.push_back(1.0 / scale[i]);
      m.shift.push_back(-shift[i] / scale[i]);
    }
    return m;
  }
};

/// p composed with the map: q(x) = p(scale x + shift).
inline MonomialPoly pullback(const MonomialPoly& p, const AffineMap& map) {
  map.validate();
  if (map.n() != p.n()) throw std::invalid_argument("pullback: dimension mismatch");
  CoeffMap cur = p.terms();
  for (int ax = 0; ax < p.n(); ++ax) {
    const double a = map.scale[ax];
    const double c = map.shift[ax];
    cur = detail::transform_axis(cur, ax, [&](const std::vector<double>& s) {
      // sum_k s_k (a x + c)^k = sum_k s_k sum_j binom(k, j) a^j c^(k-j) x^j
      const int m = static_cast<int>(s.size()) - 1;
      std::vector<double> out(s.size(), 0.0);
      for (int k = 0; k <= m; ++k) {
        if (s[k] == 0.0) continue;
        double binom = 1.0;
        for (int j = 0; j <= k; ++j) {
          out[j] += s[k] * binom * std::pow(a, j) * std::pow(c, k - j);
          binom = binom * (k - j) / (j + 1);
        }
      }
      return out;
    });
  }
  MonomialPoly out(p.n());
  for (const auto& [al, v] : cur) out.add_term(al, v);
  return out;
}

}  // namespace regmomsos
