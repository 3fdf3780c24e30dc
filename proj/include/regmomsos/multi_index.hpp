#pragma once

// Multi-indices and the graded-lexicographic order used for every
// coefficient layout in the library.
//
// Order: total degree ascending; within one degree, exponent vectors are
// compared left to right and the larger leading exponent comes first, so
// for n = 2 the degree-2 block is (2,0), (1,1), (0,2).

#include <algorithm>
#include <cstddef>
#include <map>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace regmomsos {

using MultiIndex = std::vector<int>;

inline int total_degree(const MultiIndex& a) { return std::accumulate(a.begin(), a.end(), 0); }

struct GradedLexLess {
  bool operator()(const MultiIndex& a, const MultiIndex& b) const {
    const int da = total_degree(a);
    const int db = total_degree(b);
    if (da != db) return da < db;
    return std::lexicographical_compare(b.begin(), b.end(), a.begin(), a.end());
  }
};

/// All alpha in N^n with |alpha| <= d, in graded-lex order.
inline std::vector<MultiIndex> graded_indices(int n, int d) {
  if (n < 1) throw std::invalid_argument("graded_indices: n must be >= 1");
  std::vector<MultiIndex> out;
  if (d < 0) return out;
  MultiIndex a(n, 0);
  for (int t = 0; t <= d; ++t) {
    // Enumerate compositions of t into n parts, lexicographically descending.
    std::fill(a.begin(), a.end(), 0);
    a[0] = t;
    while (true) {
      out.push_back(a);
      // find rightmost position j < n-1 with a[j] > 0, move one unit right
      int j = n - 2;
      while (j >= 0 && a[j] == 0) --j;
      if (j < 0) break;
      a[j] -= 1;
      const int rest = std::accumulate(a.begin() + j + 1, a.end(), 0) + 1;
      std::fill(a.begin() + j + 1, a.end(), 0);
      a[j + 1] = rest;
    }
  }
  return out;
}

/// binom(n + d, n): size of graded_indices(n, d).
inline std::size_t index_count(int n, int d) {
  if (d < 0) return 0;
  double v = 1.0;
  for (int i = 1; i <= n; ++i) v = v * (d + i) / i;
  return static_cast<std::size_t>(v + 0.5);
}

/// Position lookup for one graded index set.
class IndexSet {
 public:
  IndexSet() = default;
  IndexSet(int n, int d) : n_(n), d_(d), list_(graded_indices(n, d)) {
    for (std::size_t i = 0; i < list_.size(); ++i) pos_.emplace(list_[i], i);
  }

  int n() const { return n_; }
  int degree() const { return d_; }
  std::size_t size() const { return list_.size(); }
  const MultiIndex& operator[](std::size_t i) const { return list_[i]; }
  const std::vector<MultiIndex>& list() const { return list_; }

  /// Position of alpha, or -1 when |alpha| > degree.
  long find(const MultiIndex& a) const {
    auto it = pos_.find(a);
    return it == pos_.end() ? -1 : static_cast<long>(it->second);
  }

 private:
  int n_ = 0;
  int d_ = -1;
  std::vector<MultiIndex> list_;
  std::map<MultiIndex, std::size_t, GradedLexLess> pos_;
};

}  // namespace regmomsos
