#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "gradsurge/autodiff.hpp"
#include "gradsurge/common.hpp"

namespace gradsurge {

// Analytically solvable bi-level testbed:
//   inner loss  L(theta, w) = 1/2 th'A th - b'th + sum_i w_i (1/2 th'A_i th - b_i'th)
//   outer loss  L_val(theta) = 1/2 th'A_v th - b_v'th
// The closed-form best response and hypergradient provide the oracle the
// Neumann path is checked against; Eigen handles the small dense algebra so
// the oracle shares no code with the iterative implementation.
struct QuadraticBilevelProblem {
  Eigen::MatrixXd a;
  Eigen::VectorXd b;
  std::vector<Eigen::MatrixXd> a_aux;
  std::vector<Eigen::VectorXd> b_aux;
  Eigen::MatrixXd a_val;
  Eigen::VectorXd b_val;

  int dim() const { return static_cast<int>(a.rows()); }
  int k() const { return static_cast<int>(a_aux.size()); }

  Eigen::MatrixXd inner_hessian(const std::vector<double>& w) const;
  // theta*(w) = H(w)^-1 (b + sum w_i b_i); near-singular H is a usage error
  Eigen::VectorXd best_response(const std::vector<double>& w) const;
  double val_loss(const Eigen::VectorXd& theta) const;
  double lambda_max(const std::vector<double>& w) const;
  double lambda_min(const std::vector<double>& w) const;

  // exact hypergradient d L_val(theta*(w)) / dw by closed-form differentiation
  std::vector<double> hypergrad(const std::vector<double>& w) const;

  // adapters for the matrix-free implementation path
  GradFn total_grad_fn(std::vector<double> w) const;
  GradFn val_grad_fn() const;
  std::vector<GradFn> aux_grad_fns() const;

  // Random SPD instance with controlled spectra: target Hessian eigenvalues
  // in [eig_lo, eig_hi], per-task in [aux_eig_lo, aux_eig_hi]. Keeping the
  // per-task scale small keeps H(w) well inside the Neumann convergence
  // regime for w in [0, 1].
  static QuadraticBilevelProblem random(int dim, int k, std::uint64_t seed, double eig_lo = 0.7,
                                        double eig_hi = 1.0, double aux_eig_lo = 0.01,
                                        double aux_eig_hi = 0.05);
};

// used only as the exit gate for the testbed's own precondition
inline constexpr double kMaxInnerCondition = 1e10;

}  // namespace gradsurge
