#pragma once

#include <array>
#include <functional>
#include <vector>

#include "gradsurge/common.hpp"
#include "gradsurge/tensor.hpp"

namespace gradsurge {

// Reverse-mode tape over dense tensors. One tape per loss evaluation;
// parameters enter as leaves and their gradients are read back after
// backward(). A tape is single-threaded; distinct tapes are independent.
class Tape {
 public:
  // Leaves. Gradients are accumulated only into leaves created with
  // needs_grad=true (and interior nodes on a path to one); everything else
  // receives exact zeros.
  int leaf(Tensor value, bool needs_grad);
  int constant(Tensor value) { return leaf(std::move(value), false); }

  // C = A * B (rank-2 only; inner dimensions must match)
  int matmul(int a, int b);
  // same shape, or [n,d] + [d] broadcast over the leading batch axis
  int add(int a, int b);
  // elementwise product, same shape
  int mul(int a, int b);
  int scalar_mul(int a, double s);
  int relu(int a);
  int sigmoid(int a);
  // mean/sum reductions: over all entries -> scalar, or over the leading
  // axis ([n,d] -> [d]) / trailing axis ([n,d] -> [n])
  int mean_all(int a);
  int sum_all(int a);
  int mean_rows(int a);
  int sum_cols(int a);
  // stack rank-2 inputs with equal column counts along the row axis
  int concat_rows(const std::vector<int>& parts);
  // row selection by integer index list (repeats allowed)
  int gather_rows(int a, std::vector<int> idx);
  int transpose(int a);
  // elementwise binary cross-entropy on logits; labels are constants
  int bce_with_logits(int logits, int labels);
  // per-row softmax cross-entropy: logits [n,C], labels in [0,C)
  int softmax_cross_entropy(int logits, std::vector<int> labels);
  // elementwise squared error (a - b)^2
  int mse(int a, int b);

  // Reverse sweep from a scalar loss. May be called once per tape.
  void backward(int loss);

  const Tensor& val(int id) const { return nodes_[check_id(id)].val; }
  const Tensor& grad(int id) const;
  double scalar_val(int id) const { return val(id).data[0]; }

  std::size_t size() const { return nodes_.size(); }

 private:
  enum class Op {
    Leaf,
    Matmul,
    Add,
    AddBroadcast,
    Mul,
    ScalarMul,
    Relu,
    Sigmoid,
    MeanAll,
    SumAll,
    MeanRows,
    SumCols,
    ConcatRows,
    GatherRows,
    Transpose,
    BceLogits,
    SoftmaxCe,
    Mse,
  };

  struct Node {
    Op op;
    std::array<int, 2> in{-1, -1};
    std::vector<int> extra_in;   // ConcatRows only
    std::vector<int> idx;        // GatherRows / SoftmaxCe labels
    double scalar = 0.0;         // ScalarMul
    Tensor val;
    Tensor grad;
    bool needs_grad = false;
  };

  int push(Node n, const char* opname);
  int check_id(int id) const;
  bool wants(int id) const { return nodes_[id].needs_grad; }
  void accumulate(int id, const Tensor& g);
  void backward_node(int id);

  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

// Gradient oracle of a scalar loss: theta -> grad of loss at theta.
using GradFn = std::function<FlatVec(const FlatVec&)>;

// Hessian-vector product by central differences of the gradient:
//   (grad(theta + eps v) - grad(theta - eps v)) / (2 eps)
// with eps = sqrt(machine eps) * (1 + |theta|) / max(|v|, 1e-12).
// v == 0 returns zeros without evaluating the gradient.
FlatVec hvp(const GradFn& grad_fn, const FlatVec& theta, const FlatVec& v);

}  // namespace gradsurge
