#pragma once

// One-dimensional orthonormal polynomial families for the catalog of
// reference probability measures.
//
// Every family is described by its symmetric Jacobi matrix: with
// a_k := J(k, k+1) the orthonormal polynomials satisfy
//
//   x b_k(x) = a_k b_{k+1}(x) + a_{k-1} b_{k-1}(x),   b_0 = 1, a_{-1} := 0.
//
// All three catalog measures are symmetric, so the diagonal of J vanishes.

#include <cmath>
#include <cstdint>
#include <map>
#include <mutex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace regmomsos {

enum class MeasureFamily {
  GaussianStd,  ///< standard normal on R, probabilists' Hermite
  ArcsineUnit,  ///< dx / (pi sqrt(1 - x^2)) on [-1, 1], Chebyshev T
  UniformUnit   ///< dx / 2 on [-1, 1], Legendre
};

inline std::string_view to_string(MeasureFamily f) {
  switch (f) {
    case MeasureFamily::GaussianStd: return "gaussian";
    case MeasureFamily::ArcsineUnit: return "arcsine";
    case MeasureFamily::UniformUnit: return "uniform";
  }
  return "?";
}

inline MeasureFamily measure_from_string(std::string_view s) {
  if (s == "gaussian") return MeasureFamily::GaussianStd;
  if (s == "arcsine") return MeasureFamily::ArcsineUnit;
  if (s == "uniform") return MeasureFamily::UniformUnit;
  throw std::invalid_argument("unknown measure family '" + std::string(s) +
                              "' (expected gaussian | arcsine | uniform)");
}

/// Off-diagonal Jacobi entry a_k = J(k, k+1).
inline double jacobi_offdiag(MeasureFamily f, int k) {
  switch (f) {
    case MeasureFamily::GaussianStd:
      return std::sqrt(static_cast<double>(k + 1));
    case MeasureFamily::ArcsineUnit:
      return k == 0 ? 1.0 / std::sqrt(2.0) : 0.5;
    case MeasureFamily::UniformUnit: {
      const double kk = k;
      return (kk + 1.0) / std::sqrt((2.0 * kk + 1.0) * (2.0 * kk + 3.0));
    }
  }
  return 0.0;
}

/// Three-term recurrence x b_k = alpha_{k+1} b_{k+1} + beta_k b_k + gamma_k b_{k-1}.
struct Recurrence {
  MeasureFamily family;
  double alpha(int k_plus_1) const { return jacobi_offdiag(family, k_plus_1 - 1); }
  double beta(int) const { return 0.0; }
  double gamma(int k) const { return k == 0 ? 0.0 : jacobi_offdiag(family, k - 1); }
};

/// Values b_0(x) .. b_{k_max}(x) by forward recurrence.
inline std::vector<double> eval_basis(MeasureFamily f, int k_max, double x) {
  if (k_max < 0) throw std::invalid_argument("eval_basis: k_max must be >= 0");
  std::vector<double> b(static_cast<std::size_t>(k_max) + 1);
  b[0] = 1.0;
  if (k_max == 0) return b;
  b[1] = x / jacobi_offdiag(f, 0);
  for (int k = 1; k < k_max; ++k) {
    b[k + 1] = (x * b[k] - jacobi_offdiag(f, k - 1) * b[k - 1]) / jacobi_offdiag(f, k);
  }
  return b;
}

struct Quadrature {
  std::vector<double> nodes;
  std::vector<double> weights;
  int exactness_degree = 0;
};

/// m-point Gauss rule from the eigen-decomposition of the m x m Jacobi matrix.
inline Quadrature gauss_rule(MeasureFamily f, int m) {
  if (m < 1) throw std::invalid_argument("gauss_rule: m must be >= 1");
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd sub(std::max(m - 1, 0));
  for (int k = 0; k + 1 < m; ++k) sub[k] = jacobi_offdiag(f, k);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
  if (es.info() != Eigen::Success) {
    throw std::runtime_error("gauss_rule: Jacobi eigen-decomposition failed for m = " +
                             std::to_string(m));
  }
  Quadrature q;
  q.exactness_degree = 2 * m - 1;
  q.nodes.resize(m);
  q.weights.resize(m);
  for (int i = 0; i < m; ++i) {
    q.nodes[i] = es.eigenvalues()[i];
    const double v0 = es.eigenvectors()(0, i);
    q.weights[i] = v0 * v0;
  }
  // Symmetric measures: snap the middle node of odd rules onto the origin.
  if (m % 2 == 1) q.nodes[m / 2] = 0.0;
  return q;
}

/// Raw moment \int x^k dmu of the catalog measure.
inline double family_moment(MeasureFamily f, int k) {
  if (k < 0) throw std::invalid_argument("family_moment: k must be >= 0");
  if (k % 2 == 1) return 0.0;
  const int h = k / 2;
  switch (f) {
    case MeasureFamily::GaussianStd: {
      double v = 1.0;  // (2h - 1)!!
      for (int i = 2 * h - 1; i > 1; i -= 2) v *= i;
      return v;
    }
    case MeasureFamily::ArcsineUnit: {
      double v = 1.0;  // binom(2h, h) / 4^h
      for (int i = 1; i <= h; ++i) v *= (h + i) / (4.0 * i);
      return v;
    }
    case MeasureFamily::UniformUnit:
      return 1.0 / (k + 1.0);
  }
  return 0.0;
}

/// Sparse 1-D coefficient vector: (index, value), increasing index.
using SparseCoeffs = std::vector<std::pair<int, double>>;

namespace detail {

inline constexpr double kLinearizationClamp = 1e-13;

inline SparseCoeffs linearize_chebyshev(int i, int j) {
  const auto nu = [](int k) { return k == 0 ? 1.0 : std::sqrt(2.0); };
  const int hi = i + j;
  const int lo = std::abs(i - j);
  const double scale = nu(i) * nu(j) * 0.5;
  if (hi == lo) return {{hi, scale * 2.0 / nu(hi)}};
  return {{lo, scale / nu(lo)}, {hi, scale / nu(hi)}};
}

// He_i He_j = sum_k k! binom(i, k) binom(j, k) He_{i+j-2k}, rescaled to the
// orthonormal b_k = He_k / sqrt(k!).
inline SparseCoeffs linearize_hermite(int i, int j) {
  const auto lfact = [](int k) { return std::lgamma(static_cast<long double>(k) + 1.0L); };
  SparseCoeffs out;
  for (int k = std::min(i, j); k >= 0; --k) {
    const int m = i + j - 2 * k;
    const long double lg = 0.5L * (lfact(i) + lfact(j) + lfact(m)) - lfact(k) - lfact(i - k) - lfact(j - k);
    out.emplace_back(m, static_cast<double>(std::exp(lg)));
  }
  return out;
}

}  // namespace detail

/// Linearization of b_i b_j by exact Gauss quadrature: c_k = \int b_i b_j b_k dmu.
inline SparseCoeffs linearize_product_quadrature(MeasureFamily f, int i, int j) {
  if (i < 0 || j < 0) throw std::invalid_argument("linearize_product: negative degree");
  const int top = i + j;
  // integrand degree i + j + k <= 2 (i + j) needs 2m - 1 >= 2 top
  const Quadrature q = gauss_rule(f, top + 1);
  std::vector<std::vector<double>> vals;
  vals.reserve(q.nodes.size());
  for (double x : q.nodes) vals.push_back(eval_basis(f, top, x));
  SparseCoeffs out;
  const int lo = std::abs(i - j);
  for (int k = lo; k <= top; ++k) {
    if ((k - lo) % 2 != 0) continue;  // parity of a symmetric measure
    double acc = 0.0;
    for (std::size_t n = 0; n < q.nodes.size(); ++n) {
      acc += q.weights[n] * vals[n][i] * vals[n][j] * vals[n][k];
    }
    if (std::abs(acc) > detail::kLinearizationClamp) out.emplace_back(k, acc);
  }
  return out;
}

namespace detail {

class LinearizationCache {
 public:
  const SparseCoeffs& get(MeasureFamily f, int i, int j) {
    if (i > j) std::swap(i, j);
    const Key key{static_cast<int>(f), i, j};
    {
      std::lock_guard<std::mutex> lock(mutex_);
      auto it = table_.find(key);
      if (it != table_.end()) return it->second;
    }
    SparseCoeffs c = f == MeasureFamily::ArcsineUnit   ? linearize_chebyshev(i, j)
                     : f == MeasureFamily::GaussianStd ? linearize_hermite(i, j)
                                                       : linearize_product_quadrature(f, i, j);
    std::lock_guard<std::mutex> lock(mutex_);
    // std::map never invalidates references, so returning into it is safe.
    return table_.emplace(key, std::move(c)).first->second;
  }

 private:
  using Key = std::tuple<int, int, int>;
  std::mutex mutex_;
  std::map<Key, SparseCoeffs> table_;
};

inline LinearizationCache& linearization_cache() {
  static LinearizationCache cache;
  return cache;
}

}  // namespace detail

/// b_i b_j = sum_k c_k b_k. Closed forms for Chebyshev and Hermite, exact
/// quadrature for Legendre. Results are memoized process-wide.
inline const SparseCoeffs& linearize_product(MeasureFamily f, int i, int j) {
  if (i < 0 || j < 0) throw std::invalid_argument("linearize_product: negative degree");
  return detail::linearization_cache().get(f, i, j);
}

}  // namespace regmomsos
