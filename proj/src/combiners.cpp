#include "gradsurge/combiners.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

#include "gradsurge/kernels.hpp"

namespace gradsurge {

void GradientBundle::validate() const {
  for (const FlatVec& g : aux)
    if (g.size() != target.size())
      throw UsageError("gradient bundle vectors must all have the target's length");
  auto finite = [](const FlatVec& v) {
    for (double x : v)
      if (!std::isfinite(x)) return false;
    return true;
  };
  if (!finite(target)) throw NumericError("non-finite target gradient");
  for (const FlatVec& g : aux)
    if (!finite(g)) throw NumericError("non-finite auxiliary gradient");
}

void RotationScalars::clamp(double kappa_max) {
  kappa_t = std::clamp(kappa_t, 0.0, kappa_max);
  for (double& k : kappa_aux) k = std::clamp(k, 0.0, kappa_max);
}

std::string combiner_name(CombinerKind k) {
  switch (k) {
    case CombinerKind::Ft: return "ft";
    case CombinerKind::Mtl: return "mtl";
    case CombinerKind::GradSim: return "gradsim";
    case CombinerKind::GradScale: return "gradscale";
    case CombinerKind::PcGrad: return "pcgrad";
    case CombinerKind::RcGrad: return "rcgrad";
  }
  throw UsageError("unknown combiner kind");
}

FlatVec combine_mtl(const GradientBundle& b, const std::vector<double>& w) {
  if (static_cast<int>(w.size()) != b.k())
    throw UsageError("task weight count does not match bundle");
  FlatVec out = b.target;
  for (int i = 0; i < b.k(); ++i) kernels::axpy(w[i], b.aux[i], out);
  return out;
}

FlatVec combine_gradsim(const GradientBundle& b) {
  const double tnorm = kernels::nrm2(b.target);
  FlatVec out = b.target;
  if (tnorm == 0.0) {
    if (b.k() > 0)
      std::cerr << "[gradsurge] warning: gradsim with zero target gradient; "
                   "cosine treated as 0, auxiliary tasks dropped\n";
    return out;
  }
  for (const FlatVec& g : b.aux) {
    const double anorm = kernels::nrm2(g);
    if (anorm == 0.0) continue;
    const double cosv = kernels::dot(b.target, g) / (tnorm * anorm);
    if (cosv > 0.0) kernels::axpy(cosv, g, out);
  }
  return out;
}

FlatVec combine_gradscale(const GradientBundle& b, bool symmetric_clamp) {
  const double tnorm = kernels::nrm2(b.target);
  FlatVec out = b.target;
  for (const FlatVec& g : b.aux) {
    const double anorm = kernels::nrm2(g);
    if (anorm == 0.0) continue;
    double factor = std::max(1.0, tnorm / anorm);
    if (symmetric_clamp && anorm > tnorm && tnorm > 0.0) factor = tnorm / anorm;
    kernels::axpy(factor, g, out);
  }
  return out;
}

FlatVec pcgrad_project(const FlatVec& g_a, const FlatVec& g_t) {
  if (g_a.size() != g_t.size()) throw UsageError("projection operands differ in length");
  const double tt = kernels::sumsq(g_t);
  if (tt == 0.0) throw UsageError("cannot project onto a zero target gradient");
  const double coef = kernels::dot(g_a, g_t) / tt;
  FlatVec out = g_a;
  kernels::axpy(-coef, g_t, out);
  return out;
}

FlatVec combine_pcgrad(const GradientBundle& b) {
  FlatVec out = b.target;
  for (const FlatVec& g : b.aux) {
    if (kernels::dot(b.target, g) < 0.0) {
      FlatVec proj = pcgrad_project(g, b.target);
      kernels::axpy(1.0, proj, out);
    } else {
      kernels::axpy(1.0, g, out);
    }
  }
  return out;
}

FlatVec combine_rcgrad(const GradientBundle& b, const RotationScalars& kappa,
                       bool symmetric_clamp) {
  if (static_cast<int>(kappa.kappa_aux.size()) != b.k())
    throw UsageError("rotation scalar count does not match bundle");
  const double tnorm = kernels::nrm2(b.target);

  bool any_conflict = false;
  std::vector<bool> conflict(b.k(), false);
  for (int i = 0; i < b.k(); ++i) {
    // strict inequality: an exactly orthogonal gradient is not a conflict
    conflict[i] = kernels::dot(b.target, b.aux[i]) < 0.0;
    any_conflict = any_conflict || conflict[i];
  }

  FlatVec out = b.target;
  if (any_conflict) kernels::axpy(kappa.kappa_t, b.target, out);  // (1 + kappa_t) g_t
  for (int i = 0; i < b.k(); ++i) {
    const FlatVec& g = b.aux[i];
    if (conflict[i]) {
      FlatVec proj = pcgrad_project(g, b.target);
      kernels::axpy(kappa.kappa_aux[i], proj, out);
    } else {
      const double anorm = kernels::nrm2(g);
      if (anorm == 0.0) continue;
      double factor = std::max(1.0, tnorm / anorm);
      if (symmetric_clamp && anorm > tnorm && tnorm > 0.0) factor = tnorm / anorm;
      kernels::axpy(factor, g, out);
    }
  }
  return out;
}

KappaUpdateResult update_kappa(const FlatVec& theta, const GradientBundle& b,
                               const RotationScalars& kappa, double alpha, double eta_kappa,
                               double kappa_max, const GradFn& loss_grad) {
  if (alpha <= 0.0 || eta_kappa <= 0.0) throw UsageError("update_kappa needs positive step sizes");
  KappaUpdateResult res;
  res.kappa = kappa;
  res.partials.assign(1 + b.k(), 0.0);

  std::vector<bool> conflict(b.k(), false);
  bool any_conflict = false;
  for (int i = 0; i < b.k(); ++i) {
    conflict[i] = kernels::dot(b.target, b.aux[i]) < 0.0;
    any_conflict = any_conflict || conflict[i];
  }
  // kappa only enters through the conflict branch; nothing to update otherwise
  if (!any_conflict) return res;

  FlatVec combined = combine_rcgrad(b, kappa);
  FlatVec theta_next = theta;
  kernels::axpy(-alpha, combined, theta_next);
  FlatVec grad_next = loss_grad(theta_next);
  if (grad_next.size() != theta.size()) throw UsageError("update_kappa: loss_grad length mismatch");

  // chain rule through the linear update theta' = theta - alpha g(kappa)
  res.partials[0] = -alpha * kernels::dot(grad_next, b.target);
  res.kappa.kappa_t = kappa.kappa_t - eta_kappa * res.partials[0];
  for (int i = 0; i < b.k(); ++i) {
    if (!conflict[i]) continue;
    FlatVec proj = pcgrad_project(b.aux[i], b.target);
    res.partials[1 + i] = -alpha * kernels::dot(grad_next, proj);
    res.kappa.kappa_aux[i] = kappa.kappa_aux[i] - eta_kappa * res.partials[1 + i];
  }
  res.kappa.clamp(kappa_max);
  return res;
}

}  // namespace gradsurge
