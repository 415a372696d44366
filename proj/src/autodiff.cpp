#include "gradsurge/autodiff.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <string>

#include "gradsurge/kernels.hpp"

namespace gradsurge {

namespace {

double sigmoid_stable(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// max(z,0) - z*y + log(1 + exp(-|z|)), the overflow-safe BCE form
double bce_logit(double z, double y) {
  return std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::fabs(z)));
}

}  // namespace

int Tape::check_id(int id) const {
  if (id < 0 || id >= static_cast<int>(nodes_.size()))
    throw UsageError("tape node id out of range: " + std::to_string(id));
  return id;
}

int Tape::push(Node n, const char* opname) {
  if (!n.val.all_finite())
    throw NumericError(std::string("non-finite value in op '") + opname + "'");
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

int Tape::leaf(Tensor value, bool needs_grad) {
  Node n;
  n.op = Op::Leaf;
  n.val = std::move(value);
  n.needs_grad = needs_grad;
  return push(std::move(n), "leaf");
}

int Tape::matmul(int a, int b) {
  check_id(a);
  check_id(b);
  const Tensor& ta = nodes_[a].val;
  const Tensor& tb = nodes_[b].val;
  if (ta.rank() != 2 || tb.rank() != 2)
    throw ConfigError("matmul requires rank-2 operands, got " + ta.shape_str() + " and " + tb.shape_str());
  if (ta.shape[1] != tb.shape[0])
    throw ConfigError("matmul inner dimensions do not match: " + ta.shape_str() + " * " + tb.shape_str());
  Node n;
  n.op = Op::Matmul;
  n.in = {a, b};
  n.val = Tensor::zeros({ta.shape[0], tb.shape[1]});
  kernels::matmul(ta.data.data(), tb.data.data(), n.val.data.data(), ta.shape[0], ta.shape[1], tb.shape[1]);
  n.needs_grad = wants(a) || wants(b);
  return push(std::move(n), "matmul");
}

int Tape::add(int a, int b) {
  check_id(a);
  check_id(b);
  const Tensor& ta = nodes_[a].val;
  const Tensor& tb = nodes_[b].val;
  Node n;
  n.in = {a, b};
  n.needs_grad = wants(a) || wants(b);
  if (ta.same_shape(tb)) {
    n.op = Op::Add;
    n.val = Tensor::zeros(ta.shape);
    kernels::add(ta.data, tb.data, n.val.data);
  } else if (ta.rank() == 2 && tb.rank() == 1 && ta.shape[1] == tb.shape[0]) {
    // broadcast over the leading batch axis
    n.op = Op::AddBroadcast;
    n.val = ta;
    const int rows = ta.shape[0], cols = ta.shape[1];
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) n.val.data[static_cast<std::size_t>(i) * cols + j] += tb.data[j];
  } else {
    throw ConfigError("add shape mismatch: " + ta.shape_str() + " vs " + tb.shape_str());
  }
  return push(std::move(n), "add");
}

int Tape::mul(int a, int b) {
  check_id(a);
  check_id(b);
  const Tensor& ta = nodes_[a].val;
  const Tensor& tb = nodes_[b].val;
  if (!ta.same_shape(tb))
    throw ConfigError("mul shape mismatch: " + ta.shape_str() + " vs " + tb.shape_str());
  Node n;
  n.op = Op::Mul;
  n.in = {a, b};
  n.val = Tensor::zeros(ta.shape);
  kernels::mul(ta.data, tb.data, n.val.data);
  n.needs_grad = wants(a) || wants(b);
  return push(std::move(n), "mul");
}

int Tape::scalar_mul(int a, double s) {
  check_id(a);
  Node n;
  n.op = Op::ScalarMul;
  n.in = {a, -1};
  n.scalar = s;
  n.val = nodes_[a].val;
  kernels::scal(s, n.val.data);
  n.needs_grad = wants(a);
  return push(std::move(n), "scalar-mul");
}

int Tape::relu(int a) {
  check_id(a);
  Node n;
  n.op = Op::Relu;
  n.in = {a, -1};
  n.val = nodes_[a].val;
  for (double& v : n.val.data) v = v > 0.0 ? v : 0.0;
  n.needs_grad = wants(a);
  return push(std::move(n), "relu");
}

int Tape::sigmoid(int a) {
  check_id(a);
  Node n;
  n.op = Op::Sigmoid;
  n.in = {a, -1};
  n.val = nodes_[a].val;
  for (double& v : n.val.data) v = sigmoid_stable(v);
  n.needs_grad = wants(a);
  return push(std::move(n), "sigmoid");
}

int Tape::mean_all(int a) {
  check_id(a);
  const Tensor& ta = nodes_[a].val;
  if (ta.size() == 0) throw UsageError("mean-reduce of empty tensor");
  Node n;
  n.op = Op::MeanAll;
  n.in = {a, -1};
  n.val = Tensor::scalar(kernels::sum(ta.data) / static_cast<double>(ta.size()));
  n.needs_grad = wants(a);
  return push(std::move(n), "mean-reduce");
}

int Tape::sum_all(int a) {
  check_id(a);
  Node n;
  n.op = Op::SumAll;
  n.in = {a, -1};
  n.val = Tensor::scalar(kernels::sum(nodes_[a].val.data));
  n.needs_grad = wants(a);
  return push(std::move(n), "sum-reduce");
}

int Tape::mean_rows(int a) {
  check_id(a);
  const Tensor& ta = nodes_[a].val;
  if (ta.rank() != 2) throw ConfigError("mean_rows requires rank-2 input, got " + ta.shape_str());
  const int rows = ta.shape[0], cols = ta.shape[1];
  Node n;
  n.op = Op::MeanRows;
  n.in = {a, -1};
  n.val = Tensor::zeros({cols});
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) n.val.data[j] += ta.at(i, j);
  for (double& v : n.val.data) v /= rows;
  n.needs_grad = wants(a);
  return push(std::move(n), "mean-reduce");
}

int Tape::sum_cols(int a) {
  check_id(a);
  const Tensor& ta = nodes_[a].val;
  if (ta.rank() != 2) throw ConfigError("sum_cols requires rank-2 input, got " + ta.shape_str());
  const int rows = ta.shape[0], cols = ta.shape[1];
  Node n;
  n.op = Op::SumCols;
  n.in = {a, -1};
  n.val = Tensor::zeros({rows});
  for (int i = 0; i < rows; ++i) {
    double s = 0.0;
    for (int j = 0; j < cols; ++j) s += ta.at(i, j);
    n.val.data[i] = s;
  }
  n.needs_grad = wants(a);
  return push(std::move(n), "sum-reduce");
}

int Tape::concat_rows(const std::vector<int>& parts) {
  if (parts.empty()) throw UsageError("concat of zero tensors");
  int cols = -1, rows = 0;
  for (int p : parts) {
    check_id(p);
    const Tensor& t = nodes_[p].val;
    const int c = t.cols();
    if (cols == -1) cols = c;
    if (c != cols) throw ConfigError("concat column mismatch");
    rows += t.rows();
  }
  Node n;
  n.op = Op::ConcatRows;
  n.extra_in = parts;
  n.val = Tensor::zeros({rows, cols});
  std::size_t off = 0;
  for (int p : parts) {
    const Tensor& t = nodes_[p].val;
    std::copy(t.data.begin(), t.data.end(), n.val.data.begin() + off);
    off += t.size();
    n.needs_grad = n.needs_grad || wants(p);
  }
  return push(std::move(n), "concat");
}

int Tape::gather_rows(int a, std::vector<int> idx) {
  check_id(a);
  const Tensor& ta = nodes_[a].val;
  if (ta.rank() != 2) throw ConfigError("index-gather requires rank-2 input, got " + ta.shape_str());
  const int rows = ta.shape[0], cols = ta.shape[1];
  for (int i : idx)
    if (i < 0 || i >= rows) throw UsageError("index-gather row " + std::to_string(i) + " out of range");
  Node n;
  n.op = Op::GatherRows;
  n.in = {a, -1};
  n.val = Tensor::zeros({static_cast<int>(idx.size()), cols});
  for (std::size_t r = 0; r < idx.size(); ++r)
    std::copy(ta.data.begin() + static_cast<std::size_t>(idx[r]) * cols,
              ta.data.begin() + static_cast<std::size_t>(idx[r] + 1) * cols, n.val.data.begin() + r * cols);
  n.idx = std::move(idx);
  n.needs_grad = wants(a);
  return push(std::move(n), "index-gather");
}

int Tape::transpose(int a) {
  check_id(a);
  const Tensor& ta = nodes_[a].val;
  if (ta.rank() != 2) throw ConfigError("transpose requires rank-2 input, got " + ta.shape_str());
  const int rows = ta.shape[0], cols = ta.shape[1];
  Node n;
  n.op = Op::Transpose;
  n.in = {a, -1};
  n.val = Tensor::zeros({cols, rows});
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) n.val.at(j, i) = ta.at(i, j);
  n.needs_grad = wants(a);
  return push(std::move(n), "transpose");
}

int Tape::bce_with_logits(int logits, int labels) {
  check_id(logits);
  check_id(labels);
  const Tensor& tz = nodes_[logits].val;
  const Tensor& ty = nodes_[labels].val;
  if (!tz.same_shape(ty))
    throw ConfigError("bce-with-logits shape mismatch: " + tz.shape_str() + " vs " + ty.shape_str());
  Node n;
  n.op = Op::BceLogits;
  n.in = {logits, labels};
  n.val = Tensor::zeros(tz.shape);
  for (std::size_t i = 0; i < tz.size(); ++i) n.val.data[i] = bce_logit(tz.data[i], ty.data[i]);
  n.needs_grad = wants(logits);
  return push(std::move(n), "binary-cross-entropy-with-logits");
}

int Tape::softmax_cross_entropy(int logits, std::vector<int> labels) {
  check_id(logits);
  const Tensor& tz = nodes_[logits].val;
  if (tz.rank() != 2) throw ConfigError("softmax-cross-entropy requires rank-2 logits");
  const int rows = tz.shape[0], classes = tz.shape[1];
  if (static_cast<int>(labels.size()) != rows)
    throw ConfigError("softmax-cross-entropy label count does not match logit rows");
  for (int y : labels)
    if (y < 0 || y >= classes) throw UsageError("softmax-cross-entropy label out of range");
  Node n;
  n.op = Op::SoftmaxCe;
  n.in = {logits, -1};
  n.val = Tensor::zeros({rows});
  for (int i = 0; i < rows; ++i) {
    double m = tz.at(i, 0);
    for (int c = 1; c < classes; ++c) m = std::max(m, tz.at(i, c));
    double lse = 0.0;
    for (int c = 0; c < classes; ++c) lse += std::exp(tz.at(i, c) - m);
    n.val.data[i] = m + std::log(lse) - tz.at(i, labels[i]);
  }
  n.idx = std::move(labels);
  n.needs_grad = wants(logits);
  return push(std::move(n), "softmax-cross-entropy");
}

int Tape::mse(int a, int b) {
  check_id(a);
  check_id(b);
  const Tensor& ta = nodes_[a].val;
  const Tensor& tb = nodes_[b].val;
  if (!ta.same_shape(tb))
    throw ConfigError("mean-squared-error shape mismatch: " + ta.shape_str() + " vs " + tb.shape_str());
  Node n;
  n.op = Op::Mse;
  n.in = {a, b};
  n.val = Tensor::zeros(ta.shape);
  for (std::size_t i = 0; i < ta.size(); ++i) {
    const double d = ta.data[i] - tb.data[i];
    n.val.data[i] = d * d;
  }
  n.needs_grad = wants(a) || wants(b);
  return push(std::move(n), "mean-squared-error");
}

void Tape::accumulate(int id, const Tensor& g) {
  Node& n = nodes_[id];
  if (!n.needs_grad) return;
  if (n.grad.data.empty()) n.grad = Tensor::zeros(n.val.shape);
  kernels::axpy(1.0, g.data, n.grad.data);
}

const Tensor& Tape::grad(int id) const {
  check_id(id);
  if (!backward_done_) throw UsageError("grad() called before backward()");
  const Node& n = nodes_[id];
  if (!n.needs_grad) throw UsageError("gradient was not tracked for this node");
  return n.grad;
}

void Tape::backward(int loss) {
  check_id(loss);
  if (backward_done_) throw UsageError("backward() may be called once per tape");
  if (!nodes_[loss].val.is_scalar()) throw UsageError("backward requires a scalar loss");
  backward_done_ = true;
  if (nodes_[loss].needs_grad) {
    nodes_[loss].grad = Tensor::zeros(nodes_[loss].val.shape);
    nodes_[loss].grad.data[0] = 1.0;
  }
  // reverse sweep over the topologically ordered tape, each entry once
  for (int id = loss; id >= 0; --id) {
    const Node& n = nodes_[id];
    if (!n.needs_grad || n.grad.data.empty() || n.op == Op::Leaf) continue;
    backward_node(id);
  }
  // parameters off the loss path get exact zeros
  for (Node& n : nodes_)
    if (n.needs_grad && n.grad.data.empty()) n.grad = Tensor::zeros(n.val.shape);
}

void Tape::backward_node(int id) {
  Node& n = nodes_[id];
  const Tensor& g = n.grad;
  const int a = n.in[0], b = n.in[1];
  switch (n.op) {
    case Op::Leaf:
      break;
    case Op::Matmul: {
      const Tensor& ta = nodes_[a].val;
      const Tensor& tb = nodes_[b].val;
      const int m = ta.shape[0], k = ta.shape[1], p = tb.shape[1];
      if (wants(a)) {
        Tensor da = Tensor::zeros(ta.shape);
        kernels::matmul_nt(g.data.data(), tb.data.data(), da.data.data(), m, p, k);
        accumulate(a, da);
      }
      if (wants(b)) {
        Tensor db = Tensor::zeros(tb.shape);
        kernels::matmul_tn(ta.data.data(), g.data.data(), db.data.data(), k, m, p);
        accumulate(b, db);
      }
      break;
    }
    case Op::Add:
      if (wants(a)) accumulate(a, g);
      if (wants(b)) accumulate(b, g);
      break;
    case Op::AddBroadcast: {
      if (wants(a)) accumulate(a, g);
      if (wants(b)) {
        const int rows = n.val.shape[0], cols = n.val.shape[1];
        Tensor db = Tensor::zeros({cols});
        for (int i = 0; i < rows; ++i)
          for (int j = 0; j < cols; ++j) db.data[j] += g.at(i, j);
        accumulate(b, db);
      }
      break;
    }
    case Op::Mul: {
      if (wants(a)) {
        Tensor da = Tensor::zeros(n.val.shape);
        kernels::mul(g.data, nodes_[b].val.data, da.data);
        accumulate(a, da);
      }
      if (wants(b)) {
        Tensor db = Tensor::zeros(n.val.shape);
        kernels::mul(g.data, nodes_[a].val.data, db.data);
        accumulate(b, db);
      }
      break;
    }
    case Op::ScalarMul: {
      Tensor da = g;
      kernels::scal(n.scalar, da.data);
      accumulate(a, da);
      break;
    }
    case Op::Relu: {
      const Tensor& x = nodes_[a].val;
      Tensor da = Tensor::zeros(x.shape);
      for (std::size_t i = 0; i < x.size(); ++i) da.data[i] = x.data[i] > 0.0 ? g.data[i] : 0.0;
      accumulate(a, da);
      break;
    }
    case Op::Sigmoid: {
      Tensor da = Tensor::zeros(n.val.shape);
      for (std::size_t i = 0; i < n.val.size(); ++i) {
        const double s = n.val.data[i];
        da.data[i] = g.data[i] * s * (1.0 - s);
      }
      accumulate(a, da);
      break;
    }
    case Op::MeanAll: {
      const Tensor& x = nodes_[a].val;
      Tensor da = Tensor::zeros(x.shape);
      const double gv = g.data[0] / static_cast<double>(x.size());
      for (double& v : da.data) v = gv;
      accumulate(a, da);
      break;
    }
    case Op::SumAll: {
      const Tensor& x = nodes_[a].val;
      Tensor da = Tensor::zeros(x.shape);
      for (double& v : da.data) v = g.data[0];
      accumulate(a, da);
      break;
    }
    case Op::MeanRows: {
      const Tensor& x = nodes_[a].val;
      const int rows = x.shape[0], cols = x.shape[1];
      Tensor da = Tensor::zeros(x.shape);
      for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) da.at(i, j) = g.data[j] / rows;
      accumulate(a, da);
      break;
    }
    case Op::SumCols: {
      const Tensor& x = nodes_[a].val;
      const int rows = x.shape[0], cols = x.shape[1];
      Tensor da = Tensor::zeros(x.shape);
      for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) da.at(i, j) = g.data[i];
      accumulate(a, da);
      break;
    }
    case Op::ConcatRows: {
      std::size_t off = 0;
      for (int p : n.extra_in) {
        const Tensor& tp = nodes_[p].val;
        if (wants(p)) {
          Tensor dp = Tensor::zeros(tp.shape);
          std::copy(g.data.begin() + off, g.data.begin() + off + tp.size(), dp.data.begin());
          accumulate(p, dp);
        }
        off += tp.size();
      }
      break;
    }
    case Op::GatherRows: {
      const Tensor& x = nodes_[a].val;
      const int cols = x.shape[1];
      Tensor da = Tensor::zeros(x.shape);
      for (std::size_t r = 0; r < n.idx.size(); ++r)
        for (int j = 0; j < cols; ++j) da.at(n.idx[r], j) += g.data[r * cols + j];
      accumulate(a, da);
      break;
    }
    case Op::Transpose: {
      const Tensor& x = nodes_[a].val;
      Tensor da = Tensor::zeros(x.shape);
      for (int i = 0; i < x.shape[0]; ++i)
        for (int j = 0; j < x.shape[1]; ++j) da.at(i, j) = g.at(j, i);
      accumulate(a, da);
      break;
    }
    case Op::BceLogits: {
      const Tensor& z = nodes_[a].val;
      const Tensor& y = nodes_[b].val;
      Tensor dz = Tensor::zeros(z.shape);
      for (std::size_t i = 0; i < z.size(); ++i)
        dz.data[i] = g.data[i] * (sigmoid_stable(z.data[i]) - y.data[i]);
      accumulate(a, dz);
      break;
    }
    case Op::SoftmaxCe: {
      const Tensor& z = nodes_[a].val;
      const int rows = z.shape[0], classes = z.shape[1];
      Tensor dz = Tensor::zeros(z.shape);
      for (int i = 0; i < rows; ++i) {
        double m = z.at(i, 0);
        for (int c = 1; c < classes; ++c) m = std::max(m, z.at(i, c));
        double lse = 0.0;
        for (int c = 0; c < classes; ++c) lse += std::exp(z.at(i, c) - m);
        for (int c = 0; c < classes; ++c) {
          const double p = std::exp(z.at(i, c) - m) / lse;
          dz.at(i, c) = g.data[i] * (p - (c == n.idx[i] ? 1.0 : 0.0));
        }
      }
      accumulate(a, dz);
      break;
    }
    case Op::Mse: {
      const Tensor& ta = nodes_[a].val;
      const Tensor& tb = nodes_[b].val;
      if (wants(a)) {
        Tensor da = Tensor::zeros(ta.shape);
        for (std::size_t i = 0; i < ta.size(); ++i)
          da.data[i] = 2.0 * (ta.data[i] - tb.data[i]) * g.data[i];
        accumulate(a, da);
      }
      if (wants(b)) {
        Tensor db = Tensor::zeros(tb.shape);
        for (std::size_t i = 0; i < tb.size(); ++i)
          db.data[i] = -2.0 * (ta.data[i] - tb.data[i]) * g.data[i];
        accumulate(b, db);
      }
      break;
    }
  }
}

FlatVec hvp(const GradFn& grad_fn, const FlatVec& theta, const FlatVec& v) {
  if (v.size() != theta.size()) throw UsageError("hvp: v length does not match theta");
  const double vnorm = kernels::nrm2(v);
  if (vnorm == 0.0) return FlatVec(theta.size(), 0.0);  // fast path: H*0 = 0
  const double tnorm = kernels::nrm2(theta);
  const double eps = std::sqrt(DBL_EPSILON) * (1.0 + tnorm) / std::max(vnorm, 1e-12);

  FlatVec tp = theta;
  kernels::axpy(eps, v, tp);
  FlatVec gp = grad_fn(tp);
  FlatVec tm = theta;
  kernels::axpy(-eps, v, tm);
  FlatVec gm = grad_fn(tm);
  if (gp.size() != theta.size() || gm.size() != theta.size())
    throw UsageError("hvp: grad_fn returned wrong length");

  FlatVec out(theta.size());
  const double inv = 1.0 / (2.0 * eps);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (gp[i] - gm[i]) * inv;
  return out;
}

}  // namespace gradsurge
