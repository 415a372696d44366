// Test-side oracles, kept independent of the implementation paths they
// check: central finite differences, brute-force pairwise AUC, subset
// motif enumeration, and a finite-difference hypergradient.
#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "gradsurge/graph.hpp"

namespace oracles {

// central difference d f / d x_i with a magnitude-scaled step
inline std::vector<double> fd_gradient(const std::function<double(const std::vector<double>&)>& f,
                                       std::vector<double> x, double h_scale = 1e-6) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double x0 = x[i];
    const double h = h_scale * (1.0 + std::fabs(x0));
    x[i] = x0 + h;
    const double fp = f(x);
    x[i] = x0 - h;
    const double fm = f(x);
    x[i] = x0;
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

inline double rel_err(double got, double want) {
  const double denom = std::max({std::fabs(got), std::fabs(want), 1e-12});
  return std::fabs(got - want) / denom;
}

// worst elementwise relative error over entries that are not both tiny
inline double max_rel_err(const std::vector<double>& got, const std::vector<double>& want,
                          double floor = 1e-6) {
  double worst = 0.0;
  for (std::size_t i = 0; i < got.size(); ++i)
    if (std::max(std::fabs(got[i]), std::fabs(want[i])) > floor)
      worst = std::max(worst, rel_err(got[i], want[i]));
  return worst;
}

inline double vec_norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

inline double vec_rel_err(const std::vector<double>& got, const std::vector<double>& want) {
  double s = 0.0;
  for (std::size_t i = 0; i < got.size(); ++i) s += (got[i] - want[i]) * (got[i] - want[i]);
  return std::sqrt(s) / std::max(vec_norm(want), 1e-12);
}

// quadratic-time pairwise AUC with ties counted one half
inline double brute_auc(const std::vector<double>& s, const std::vector<int>& y) {
  double wins = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[i] != 1 || y[j] != 0) continue;
      ++pairs;
      if (s[i] > s[j])
        wins += 1.0;
      else if (s[i] == s[j])
        wins += 0.5;
    }
  return wins / static_cast<double>(pairs);
}

inline bool subset_triangle(const gradsurge::SyntheticGraph& g) {
  const int n = g.n_nodes();
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b)
      for (int c = b + 1; c < n; ++c)
        if (g.has_edge(a, b) && g.has_edge(b, c) && g.has_edge(a, c)) return true;
  return false;
}

inline bool subset_chordless_c4(const gradsurge::SyntheticGraph& g) {
  const int n = g.n_nodes();
  // three distinct cyclic orderings of each 4-subset
  const int orders[3][4] = {{0, 1, 2, 3}, {0, 1, 3, 2}, {0, 2, 1, 3}};
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b)
      for (int c = b + 1; c < n; ++c)
        for (int d = c + 1; d < n; ++d) {
          const int v[4] = {a, b, c, d};
          for (const auto& o : orders) {
            const int p = v[o[0]], q = v[o[1]], r = v[o[2]], s = v[o[3]];
            if (g.has_edge(p, q) && g.has_edge(q, r) && g.has_edge(r, s) && g.has_edge(s, p) &&
                !g.has_edge(p, r) && !g.has_edge(q, s))
              return true;
          }
        }
  return false;
}

}  // namespace oracles
