#pragma once

#include <functional>
#include <string>
#include <vector>

#include "gradsurge/autodiff.hpp"
#include "gradsurge/common.hpp"

namespace gradsurge {

// Target-task gradient plus k auxiliary gradients over the shared
// parameters, all in the canonical flattening order.
struct GradientBundle {
  FlatVec target;
  std::vector<FlatVec> aux;

  int k() const { return static_cast<int>(aux.size()); }
  void validate() const;  // equal lengths, finite entries
};

// Learned scaling factors replacing explicit rotation matrices.
struct RotationScalars {
  double kappa_t = 0.0;
  std::vector<double> kappa_aux;  // one per auxiliary task

  // starts at projected-gradient behavior
  static RotationScalars init(int k) { return {0.0, std::vector<double>(k, 1.0)}; }
  void clamp(double kappa_max);
};

enum class CombinerKind { Ft, Mtl, GradSim, GradScale, PcGrad, RcGrad };

std::string combiner_name(CombinerKind k);

// g_t + sum_i w_i g_{a,i}
FlatVec combine_mtl(const GradientBundle& b, const std::vector<double>& w);

// g_t + sum_i max(0, cos(g_t, g_{a,i})) g_{a,i}; conflicting tasks dropped.
// All-zero g_t returns g_t unchanged with a logged warning.
FlatVec combine_gradsim(const GradientBundle& b);

// g_t + sum_i max(1, |g_t| / |g_{a,i}|) g_{a,i}; zero-norm aux pass through
// as zeros. symmetric_clamp additionally attenuates dominant aux gradients
// (factor |g_t|/|g_a| when |g_a| > |g_t|); off by default.
FlatVec combine_gradscale(const GradientBundle& b, bool symmetric_clamp = false);

// component of g_a orthogonal to g_t; |g_t| must be positive
FlatVec pcgrad_project(const FlatVec& g_a, const FlatVec& g_t);

// conflicting tasks (g_t . g_a < 0) projected, others kept as-is
FlatVec combine_pcgrad(const GradientBundle& b);

// conflicting tasks contribute kappa_i * proj(g_a); non-conflicting tasks
// get the gradscale factor; target term is (1 + kappa_t) g_t when at least
// one task conflicts
FlatVec combine_rcgrad(const GradientBundle& b, const RotationScalars& kappa,
                       bool symmetric_clamp = false);

// One-step lookahead update of the rotation scalars:
//   theta' = theta - alpha * combine_rcgrad(bundle, kappa)
//   kappa_j <- clamp(kappa_j - eta * dL(theta')/dkappa_j, 0, kappa_max)
// with dL/dkappa_t = -alpha * gradL(theta') . g_t and
//      dL/dkappa_i = -alpha * gradL(theta') . proj(g_a_i) (0 if no conflict).
// loss_grad evaluates the gradient of the selection loss at theta'.
struct KappaUpdateResult {
  RotationScalars kappa;
  std::vector<double> partials;  // [d/dkappa_t, d/dkappa_1, ..., d/dkappa_k]
};
KappaUpdateResult update_kappa(const FlatVec& theta, const GradientBundle& b,
                               const RotationScalars& kappa, double alpha, double eta_kappa,
                               double kappa_max, const GradFn& loss_grad);

}  // namespace gradsurge
