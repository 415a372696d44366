#include "gradsurge/quadratic.hpp"

#include "gradsurge/rng.hpp"

namespace gradsurge {

namespace {

Eigen::VectorXd to_eigen(const FlatVec& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

FlatVec from_eigen(const Eigen::VectorXd& v) { return FlatVec(v.data(), v.data() + v.size()); }

void check_weights(const QuadraticBilevelProblem& p, const std::vector<double>& w) {
  if (static_cast<int>(w.size()) != p.k()) throw UsageError("weight count does not match problem");
  for (double wi : w)
    if (wi < 0.0) throw UsageError("quadratic testbed requires w >= 0");
}

}  // namespace

Eigen::MatrixXd QuadraticBilevelProblem::inner_hessian(const std::vector<double>& w) const {
  check_weights(*this, w);
  Eigen::MatrixXd h = a;
  for (int i = 0; i < k(); ++i) h += w[i] * a_aux[i];
  return h;
}

Eigen::VectorXd QuadraticBilevelProblem::best_response(const std::vector<double>& w) const {
  const Eigen::MatrixXd h = inner_hessian(w);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
  const double lmin = es.eigenvalues().minCoeff();
  const double lmax = es.eigenvalues().maxCoeff();
  if (lmin <= 0.0 || lmax / lmin > kMaxInnerCondition)
    throw UsageError("inner Hessian is near-singular (condition number above 1e10)");
  Eigen::VectorXd rhs = b;
  for (int i = 0; i < k(); ++i) rhs += w[i] * b_aux[i];
  return h.ldlt().solve(rhs);
}

double QuadraticBilevelProblem::val_loss(const Eigen::VectorXd& theta) const {
  return 0.5 * theta.dot(a_val * theta) - b_val.dot(theta);
}

double QuadraticBilevelProblem::lambda_max(const std::vector<double>& w) const {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(inner_hessian(w));
  return es.eigenvalues().maxCoeff();
}

double QuadraticBilevelProblem::lambda_min(const std::vector<double>& w) const {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(inner_hessian(w));
  return es.eigenvalues().minCoeff();
}

std::vector<double> QuadraticBilevelProblem::hypergrad(const std::vector<double>& w) const {
  // differentiate H(w) theta* = b + sum w_i b_i:
  //   dtheta*/dw_i = H^-1 (b_i - A_i theta*)
  //   dL_val/dw_i  = (A_v theta* - b_v) . dtheta*/dw_i
  const Eigen::VectorXd theta = best_response(w);
  const Eigen::MatrixXd h = inner_hessian(w);
  const auto solver = h.ldlt();
  const Eigen::VectorXd grad_val = a_val * theta - b_val;
  std::vector<double> out(k());
  for (int i = 0; i < k(); ++i) {
    const Eigen::VectorXd dtheta = solver.solve(b_aux[i] - a_aux[i] * theta);
    out[i] = grad_val.dot(dtheta);
  }
  return out;
}

GradFn QuadraticBilevelProblem::total_grad_fn(std::vector<double> w) const {
  check_weights(*this, w);
  return [this, w = std::move(w)](const FlatVec& theta) {
    const Eigen::VectorXd t = to_eigen(theta);
    Eigen::VectorXd g = a * t - b;
    for (int i = 0; i < k(); ++i) g += w[i] * (a_aux[i] * t - b_aux[i]);
    return from_eigen(g);
  };
}

GradFn QuadraticBilevelProblem::val_grad_fn() const {
  return [this](const FlatVec& theta) {
    const Eigen::VectorXd t = to_eigen(theta);
    return from_eigen(Eigen::VectorXd(a_val * t - b_val));
  };
}

std::vector<GradFn> QuadraticBilevelProblem::aux_grad_fns() const {
  std::vector<GradFn> fns;
  for (int i = 0; i < k(); ++i) {
    fns.push_back([this, i](const FlatVec& theta) {
      const Eigen::VectorXd t = to_eigen(theta);
      return from_eigen(Eigen::VectorXd(a_aux[i] * t - b_aux[i]));
    });
  }
  return fns;
}

namespace {

Eigen::MatrixXd random_spd(int dim, Rng& rng, double eig_lo, double eig_hi) {
  Eigen::MatrixXd m(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) m(i, j) = rng.uniform(-1.0, 1.0);
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
  const Eigen::MatrixXd q = qr.householderQ();
  Eigen::VectorXd eigs(dim);
  for (int i = 0; i < dim; ++i) eigs(i) = rng.uniform(eig_lo, eig_hi);
  return q * eigs.asDiagonal() * q.transpose();
}

}  // namespace

QuadraticBilevelProblem QuadraticBilevelProblem::random(int dim, int k, std::uint64_t seed,
                                                        double eig_lo, double eig_hi,
                                                        double aux_eig_lo, double aux_eig_hi) {
  if (dim < 1 || k < 0) throw UsageError("bad quadratic problem dimensions");
  Rng rng(derive_seed(seed, 0x717561'64ULL));
  QuadraticBilevelProblem p;
  p.a = random_spd(dim, rng, eig_lo, eig_hi);
  p.b = Eigen::VectorXd(dim);
  for (int i = 0; i < dim; ++i) p.b(i) = rng.uniform(-1.0, 1.0);
  for (int t = 0; t < k; ++t) {
    p.a_aux.push_back(random_spd(dim, rng, aux_eig_lo, aux_eig_hi));
    Eigen::VectorXd bt(dim);
    for (int i = 0; i < dim; ++i) bt(i) = rng.uniform(-1.0, 1.0);
    p.b_aux.push_back(bt);
  }
  p.a_val = random_spd(dim, rng, eig_lo, eig_hi);
  p.b_val = Eigen::VectorXd(dim);
  for (int i = 0; i < dim; ++i) p.b_val(i) = rng.uniform(-1.0, 1.0);
  return p;
}

}  // namespace gradsurge
