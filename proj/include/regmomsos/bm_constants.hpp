#pragma once

// Christoffel-Darboux polynomials and Bernstein-Markov constants.
//
// For a reference measure mu with orthonormal basis b_alpha, the degree-2d
// Christoffel-Darboux polynomial is p_2d(x) = sum_{|alpha| <= 2d} b_alpha(x)^2
// and c_2d = sup_{x in K} sqrt(p_2d(x)) satisfies
//
//   sup_K |r| <= c_2d ||r||_{L2(mu)}   for every r of degree <= 2d.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "regmomsos/basis1d.hpp"

namespace regmomsos {

enum class DomainKind { UnitBox, Point, Unbounded };

/// Certification domain, in the coordinates of the reference measure.
struct DomainSpec {
  DomainKind kind = DomainKind::Unbounded;
  std::vector<std::vector<double>> points;  ///< Point only

  static DomainSpec unit_box() { return {DomainKind::UnitBox, {}}; }
  static DomainSpec unbounded() { return {DomainKind::Unbounded, {}}; }
  static DomainSpec point_list(std::vector<std::vector<double>> pts) {
    return {DomainKind::Point, std::move(pts)};
  }

  void validate(int n) const {
    if (kind != DomainKind::Point) return;
    if (points.empty()) throw std::invalid_argument("DomainSpec: point list must be nonempty");
    for (const auto& p : points) {
      if (static_cast<int>(p.size()) != n) throw std::invalid_argument("DomainSpec: point has wrong dimension");
      for (double v : p) {
        if (!std::isfinite(v)) throw std::invalid_argument("DomainSpec: non-finite point coordinate");
      }
    }
  }

  friend bool operator==(const DomainSpec&, const DomainSpec&) = default;
};

inline std::string_view to_string(DomainKind k) {
  switch (k) {
    case DomainKind::UnitBox: return "box";
    case DomainKind::Point: return "point";
    case DomainKind::Unbounded: return "none";
  }
  return "?";
}

/// p_2d(x) = sum over |alpha| <= 2d of prod_i b_{alpha_i}(x_i)^2.
inline double cd_polynomial(const std::vector<MeasureFamily>& fams, int d, const std::vector<double>& x) {
  if (d < 0) throw std::invalid_argument("cd_polynomial: d must be >= 0");
  if (x.size() != fams.size()) throw std::invalid_argument("cd_polynomial: dimension mismatch");
  const int top = 2 * d;
  // acc[t] = sum over exponents of the coordinates seen so far with total degree t
  std::vector<double> acc(top + 1, 0.0);
  acc[0] = 1.0;
  for (std::size_t i = 0; i < fams.size(); ++i) {
    auto b = eval_basis(fams[i], top, x[i]);
    for (double& v : b) v *= v;
    std::vector<double> next(top + 1, 0.0);
    for (int t = 0; t <= top; ++t) {
      if (acc[t] == 0.0) continue;
      for (int k = 0; t + k <= top; ++k) next[t + k] += acc[t] * b[k];
    }
    acc = std::move(next);
  }
  double s = 0.0;
  for (double v : acc) s += v;
  return s;
}

struct BMConstant {
  double value = 0.0;
  /// True when the value is a grid supremum, which may underestimate c_2d.
  bool estimate = false;
  std::string method;  ///< "closed-form", "corner", "point" or "grid"
  /// Grid supremum of sqrt(p_2d) over the box, when computed alongside a closed form.
  std::optional<double> grid_supremum;
};

namespace detail {

inline constexpr std::size_t kMaxGridPoints = 10'000'000;

/// Max of f over the tensor grid with `per_axis` points in [lo_i, hi_i].
template <class Fn>
inline std::pair<double, std::vector<double>> grid_max(int n, const std::vector<double>& lo,
                                                       const std::vector<double>& hi, int per_axis, Fn&& f) {
  std::vector<int> idx(n, 0);
  std::vector<double> x(n), best_x(n);
  double best = -std::numeric_limits<double>::infinity();
  while (true) {
    for (int i = 0; i < n; ++i) x[i] = lo[i] + (hi[i] - lo[i]) * idx[i] / (per_axis - 1);
    const double v = f(x);
    if (v > best) {
      best = v;
      best_x = x;
    }
    int i = n - 1;
    while (i >= 0 && ++idx[i] == per_axis) idx[i--] = 0;
    if (i < 0) break;
  }
  return {best, best_x};
}

inline int points_per_axis(int n, int wanted) {
  int k = wanted;
  while (k > 2 && std::pow(static_cast<double>(k), n) > static_cast<double>(kMaxGridPoints)) --k;
  return k;
}

}  // namespace detail

/// sup over [-1,1]^n of sqrt(p_2d) on a 401-per-axis grid plus one local refinement.
inline double cd_grid_supremum(const std::vector<MeasureFamily>& fams, int d) {
  const int n = static_cast<int>(fams.size());
  const int k = detail::points_per_axis(n, 401);
  auto f = [&](const std::vector<double>& x) { return cd_polynomial(fams, d, x); };
  auto [best, at] = detail::grid_max(n, std::vector<double>(n, -1.0), std::vector<double>(n, 1.0), k, f);
  const double h = 2.0 / (k - 1);
  std::vector<double> lo(n), hi(n);
  for (int i = 0; i < n; ++i) {
    lo[i] = std::max(-1.0, at[i] - h);
    hi[i] = std::min(1.0, at[i] + h);
  }
  const auto refined = detail::grid_max(n, lo, hi, detail::points_per_axis(n, 41), f);
  return std::sqrt(std::max(best, refined.first));
}

/// c_2d for the domain, or nullopt when no finite constant exists.
inline std::optional<BMConstant> bm_constant(const DomainSpec& dom, const std::vector<MeasureFamily>& fams,
                                             int d) {
  if (d < 0) throw std::invalid_argument("bm_constant: d must be >= 0");
  const int n = static_cast<int>(fams.size());
  dom.validate(n);
  switch (dom.kind) {
    case DomainKind::Unbounded: return std::nullopt;
    case DomainKind::Point: {
      double best = 0.0;
      for (const auto& p : dom.points) best = std::max(best, cd_polynomial(fams, d, p));
      return BMConstant{std::sqrt(best), false, "point", std::nullopt};
    }
    case DomainKind::UnitBox: {
      const bool all_arcsine =
          std::all_of(fams.begin(), fams.end(), [](MeasureFamily f) { return f == MeasureFamily::ArcsineUnit; });
      const bool endpoint_max = std::all_of(fams.begin(), fams.end(), [](MeasureFamily f) {
        return f == MeasureFamily::ArcsineUnit || f == MeasureFamily::UniformUnit;
      });
      const double dd = d;
      if (all_arcsine && n == 1) {
        return BMConstant{std::sqrt(4.0 * dd + 1.0), false, "closed-form", std::nullopt};
      }
      if (all_arcsine && n == 2) {
        return BMConstant{std::sqrt(8.0 * dd * dd + 4.0 * dd + 1.0), false, "closed-form", std::nullopt};
      }
      if (endpoint_max) {
        // |b_k| attains its maximum over [-1, 1] at x = 1 for Chebyshev and Legendre
        return BMConstant{std::sqrt(cd_polynomial(fams, d, std::vector<double>(n, 1.0))), false, "corner",
                          std::nullopt};
      }
      const double g = cd_grid_supremum(fams, d);
      return BMConstant{g, true, "grid", g};
    }
  }
  return std::nullopt;
}

}  // namespace regmomsos
