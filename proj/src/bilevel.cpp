#include "gradsurge/bilevel.hpp"

#include <cmath>

#include "gradsurge/kernels.hpp"

namespace gradsurge {

void BiLevelConfig::validate() const {
  if (neumann_steps < 0) throw ConfigError("neumann_steps must be >= 0");
  if (neumann_beta <= 0.0) throw ConfigError("neumann_beta must be > 0");
  if (update_every < 1) throw ConfigError("update_every must be >= 1");
  if (eta_w <= 0.0) throw ConfigError("eta_w must be > 0");
}

std::vector<FlatVec> mixed_partial_rows(const FlatVec& theta, const std::vector<GradFn>& aux_grads) {
  std::vector<FlatVec> rows;
  rows.reserve(aux_grads.size());
  for (const GradFn& g : aux_grads) {
    FlatVec row = g(theta);
    if (row.size() != theta.size()) throw UsageError("auxiliary gradient length mismatch");
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<double> neumann_hypergrad(const FlatVec& theta, const GradFn& total_grad,
                                      const GradFn& val_grad, const std::vector<GradFn>& aux_grads,
                                      const BiLevelConfig& cfg) {
  cfg.validate();
  FlatVec p = val_grad(theta);
  if (p.size() != theta.size()) throw UsageError("validation gradient length mismatch");
  FlatVec q = p;

  const double p0_norm = kernels::nrm2(p);
  for (int j = 1; j <= cfg.neumann_steps; ++j) {
    FlatVec hp = hvp(total_grad, theta, p);
    kernels::axpy(-cfg.neumann_beta, hp, p);
    const double pn = kernels::nrm2(p);
    // for a convergent series |p| is non-increasing; geometric growth means
    // beta is outside the 2/lambda_max radius
    if (!std::isfinite(pn) || pn > 10.0 * p0_norm)
      throw NumericError(
          "Neumann series diverging at step " + std::to_string(j) +
          " (|p| grew from " + std::to_string(p0_norm) + " to " + std::to_string(pn) +
          "); reduce neumann_beta below 2/lambda_max of the inner Hessian");
    kernels::axpy(1.0, p, q);
  }

  const std::vector<FlatVec> rows = mixed_partial_rows(theta, aux_grads);
  std::vector<double> out(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) out[i] = -kernels::dot(q, rows[i]);
  return out;
}

}  // namespace gradsurge
