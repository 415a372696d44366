#pragma once

#include <vector>

#include "gradsurge/autodiff.hpp"
#include "gradsurge/common.hpp"

namespace gradsurge {

// Outer-loop task weights, one per auxiliary task.
using TaskWeights = std::vector<double>;

inline TaskWeights init_task_weights(int k) {
  return TaskWeights(k, k > 0 ? 1.0 / k : 0.0);
}

struct BiLevelConfig {
  int neumann_steps = 3;       // M
  double neumann_beta = 0.001; // step inside the Neumann recursion
  int update_every = 10;       // r inner steps between outer updates
  double eta_w = 0.001;        // outer learning rate
  double w_max = 10.0;
  bool allow_negative_w = false;

  void validate() const;
};

// Row i of the mixed partial d/dw d/dtheta L_total: since
// L_total = L_t + sum_i w_i L_{a,i}, row i is just grad L_{a,i}(theta).
std::vector<FlatVec> mixed_partial_rows(const FlatVec& theta, const std::vector<GradFn>& aux_grads);

// Truncated-Neumann hypergradient:
//   p = q = grad L_val(theta)
//   repeat M times: p -= beta * H_total p;  q += p
//   return_i = -(q . grad L_{a,i}(theta))
// The raw recursion output is returned; beta * q approximates
// H^-1 grad L_val, so comparisons against the exact implicit-function
// hypergradient scale the result by beta. A growing |p| (spectral radius
// of I - beta H above 1) raises a numeric error advising a smaller beta.
std::vector<double> neumann_hypergrad(const FlatVec& theta, const GradFn& total_grad,
                                      const GradFn& val_grad, const std::vector<GradFn>& aux_grads,
                                      const BiLevelConfig& cfg);

}  // namespace gradsurge
