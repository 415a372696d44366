#pragma once

#include <cstdint>
#include <vector>

#include "gradsurge/model.hpp"

namespace gradsurge {

using Batch = std::vector<const SyntheticGraph*>;

struct LossParams {
  double am_mask_ratio = 0.15;
  int ep_neg_per_pos = 1;
};

struct LossEval {
  double value = 0.0;
  FlatVec shared_grad;  // w.r.t. shared encoder, canonical order; empty unless gradients requested
  FlatVec head_grad;    // w.r.t. this task's own head; empty for ep
};

// One entry point for every task loss. All losses are deterministic given
// (model parameters, batch, seed) and nonnegative.
LossEval eval_loss(const Model& m, TaskId task, const Batch& batch, const LossParams& p,
                   std::uint64_t seed, bool want_grad);

// forward-only conveniences
double loss_target(const Model& m, const Batch& batch);
double loss_am(const Model& m, const Batch& batch, double mask_ratio, std::uint64_t seed);
double loss_ep(const Model& m, const Batch& batch, int n_neg_per_pos, std::uint64_t seed);
double loss_ig(const Model& m, const Batch& batch, std::uint64_t seed);
double loss_mp(const Model& m, const Batch& batch);

// sigmoid of the target-head logit per graph, for ranking metrics
std::vector<double> target_scores(const Model& m, const Batch& batch);

Batch make_batch(const std::vector<SyntheticGraph>& graphs);

}  // namespace gradsurge
