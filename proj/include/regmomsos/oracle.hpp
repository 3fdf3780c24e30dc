#pragma once

// Brute-force reference computations: grid minimization, tensor Gauss
// quadrature and dense symmetric eigenvalues.

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "regmomsos/basis1d.hpp"
#include "regmomsos/poly.hpp"

namespace regmomsos::oracle {

inline constexpr double kMaxGridPoints = 1e7;
inline constexpr double kFeasibilityTol = -1e-9;

struct GridSpec {
  std::vector<double> lo, hi;
  std::vector<int> count;

  static GridSpec uniform(int n, double lo, double hi, int per_axis) {
    return {std::vector<double>(n, lo), std::vector<double>(n, hi), std::vector<int>(n, per_axis)};
  }

  int n() const { return static_cast<int>(lo.size()); }

  void validate() const {
    if (lo.size() != hi.size() || lo.size() != count.size() || lo.empty()) {
      throw std::invalid_argument("GridSpec: bounds and counts must have the same nonzero length");
    }
    double total = 1.0;
    for (std::size_t i = 0; i < lo.size(); ++i) {
      if (!std::isfinite(lo[i]) || !std::isfinite(hi[i]) || !(lo[i] <= hi[i])) {
        throw std::invalid_argument("GridSpec: bounds must be finite with lo <= hi");
      }
      if (count[i] < 2) throw std::invalid_argument("GridSpec: at least 2 points per axis");
      total *= count[i];
    }
    if (total > kMaxGridPoints) throw std::invalid_argument("GridSpec: more than 1e7 grid points");
  }
};

struct GridMinimum {
  double value = std::numeric_limits<double>::infinity();  ///< +inf when no grid point is feasible
  std::vector<double> argmin;
  bool feasible() const { return std::isfinite(value); }
};

/// Minimum of p over the grid points with g_j >= -1e-9 for every j.
inline GridMinimum grid_minimize(const MonomialPoly& p, const std::vector<MonomialPoly>& feasibility,
                                 const GridSpec& grid) {
  grid.validate();
  const int n = grid.n();
  if (p.n() != n) throw std::invalid_argument("grid_minimize: dimension mismatch");
  for (const auto& g : feasibility) {
    if (g.n() != n) throw std::invalid_argument("grid_minimize: constraint dimension mismatch");
  }
  GridMinimum best;
  std::vector<int> idx(n, 0);
  std::vector<double> x(n);
  while (true) {
    for (int i = 0; i < n; ++i) {
      x[i] = grid.lo[i] + (grid.hi[i] - grid.lo[i]) * idx[i] / (grid.count[i] - 1);
    }
    bool ok = true;
    for (const auto& g : feasibility) {
      if (g.evaluate(x) < kFeasibilityTol) {
        ok = false;
        break;
      }
    }
    if (ok) {
      const double v = p.evaluate(x);
      if (v < best.value) {
        best.value = v;
        best.argmin = x;
      }
    }
    int i = n - 1;
    while (i >= 0 && ++idx[i] == grid.count[i]) idx[i--] = 0;
    if (i < 0) break;
  }
  return best;
}

/// Integral of p against the product measure with a tensor Gauss rule exact up
/// to degree `exactness` per coordinate.
inline double integrate(const MonomialPoly& p, const std::vector<MeasureFamily>& measure, int exactness) {
  if (static_cast<int>(measure.size()) != p.n()) throw std::invalid_argument("integrate: dimension mismatch");
  if (exactness < std::max(p.degree(), 0)) {
    throw std::domain_error("integrate: exactness " + std::to_string(exactness) + " below degree " +
                            std::to_string(p.degree()));
  }
  const int m = exactness / 2 + 1;
  std::vector<Quadrature> rules;
  for (MeasureFamily f : measure) rules.push_back(gauss_rule(f, m));
  const int n = p.n();
  std::vector<int> idx(n, 0);
  std::vector<double> x(n);
  long double acc = 0.0L;
  while (true) {
    double w = 1.0;
    for (int i = 0; i < n; ++i) {
      x[i] = rules[i].nodes[idx[i]];
      w *= rules[i].weights[idx[i]];
    }
    acc += static_cast<long double>(w) * p.evaluate(x);
    int i = n - 1;
    while (i >= 0 && ++idx[i] == m) idx[i--] = 0;
    if (i < 0) break;
  }
  return static_cast<double>(acc);
}

/// Smallest eigenvalue of a symmetric matrix; rejects asymmetry above 1e-12.
inline double min_eigenvalue(const Eigen::MatrixXd& M) {
  if (M.rows() != M.cols()) throw std::invalid_argument("min_eigenvalue: matrix is not square");
  if (M.size() == 0) throw std::invalid_argument("min_eigenvalue: empty matrix");
  const double asym = (M - M.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12 * std::max(1.0, M.cwiseAbs().maxCoeff())) {
    throw std::invalid_argument("min_eigenvalue: matrix is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

}  // namespace regmomsos::oracle
