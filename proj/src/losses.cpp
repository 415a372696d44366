#include "gradsurge/losses.hpp"

#include <cmath>

namespace gradsurge {

namespace {

// pooled mean of elementwise-loss nodes with differing lengths:
// sum each, add the scalars in order, divide by the total entry count
int pooled_mean(Tape& tape, const std::vector<int>& pieces, std::size_t count) {
  int total = -1;
  for (int p : pieces) {
    int s = tape.sum_all(p);
    total = total < 0 ? s : tape.add(total, s);
  }
  return tape.scalar_mul(total, 1.0 / static_cast<double>(count));
}

int target_like_loss(Tape& tape, const TapeModel& tm, const Batch& batch, TaskId head_task,
                     bool flip_labels) {
  std::vector<int> embs;
  std::vector<double> labels;
  for (const SyntheticGraph* g : batch) {
    embs.push_back(encode_graph_on_tape(tm, *g));
    const double y = static_cast<double>(g->target_label);
    labels.push_back(flip_labels ? 1.0 - y : y);
  }
  int feats = tape.concat_rows(embs);                       // [B, d]
  int logits = head_forward_on_tape(tm, head_task, feats);  // [B, 1]
  int ylab = tape.constant(Tensor::matrix(static_cast<int>(labels.size()), 1, labels));
  return tape.mean_all(tape.bce_with_logits(logits, ylab));
}

int am_loss(Tape& tape, const TapeModel& tm, const Batch& batch, double mask_ratio,
            std::uint64_t seed) {
  if (!(mask_ratio > 0.0 && mask_ratio <= 1.0)) throw UsageError("am mask_ratio must be in (0, 1]");
  std::vector<int> masked_embs;
  std::vector<int> true_types;
  for (std::size_t gi = 0; gi < batch.size(); ++gi) {
    const SyntheticGraph& g = *batch[gi];
    const int n = g.n_nodes();
    const int n_mask = static_cast<int>(std::ceil(mask_ratio * n));
    Rng rng(derive_seed(seed, 0xa3000000ULL + gi));
    std::vector<int> mask_idx = rng.sample_without_replacement(n, n_mask);

    std::vector<int> types = g.node_types;
    for (int i : mask_idx) types[i] = kMaskType;
    int h = encode_nodes_on_tape(tm, g, &types);
    masked_embs.push_back(tape.gather_rows(h, mask_idx));
    for (int i : mask_idx) true_types.push_back(g.node_types[i]);
  }
  int feats = tape.concat_rows(masked_embs);              // [M, d]
  int logits = head_forward_on_tape(tm, TaskId::Am, feats);  // [M, kNodeTypes]
  return tape.mean_all(tape.softmax_cross_entropy(logits, true_types));
}

int ep_loss(Tape& tape, const TapeModel& tm, const Batch& batch, int n_neg_per_pos,
            std::uint64_t seed) {
  if (n_neg_per_pos < 1) throw UsageError("ep n_neg_per_pos must be >= 1");
  std::vector<int> pieces;
  std::size_t n_pairs = 0;
  for (std::size_t gi = 0; gi < batch.size(); ++gi) {
    const SyntheticGraph& g = *batch[gi];
    const int n = g.n_nodes();
    std::vector<std::pair<int, int>> non_edges;
    for (int u = 0; u < n; ++u)
      for (int v = u + 1; v < n; ++v)
        if (!g.has_edge(u, v)) non_edges.emplace_back(u, v);
    if (g.n_edges() == 0 || non_edges.empty()) continue;  // unusable graph, skipped

    const int avail_neg = static_cast<int>(non_edges.size());
    const int n_pos = std::min(g.n_edges(), std::max(1, avail_neg / n_neg_per_pos));
    const int n_neg = std::min(n_pos * n_neg_per_pos, avail_neg);

    Rng rng(derive_seed(seed, 0xeb000000ULL + gi));
    std::vector<int> pos_idx = rng.sample_without_replacement(g.n_edges(), n_pos);
    std::vector<int> neg_idx = rng.sample_without_replacement(avail_neg, n_neg);

    std::vector<int> us, vs;
    std::vector<double> labels;
    for (int i : pos_idx) {
      us.push_back(g.edges[i].first);
      vs.push_back(g.edges[i].second);
      labels.push_back(1.0);
    }
    for (int i : neg_idx) {
      us.push_back(non_edges[i].first);
      vs.push_back(non_edges[i].second);
      labels.push_back(0.0);
    }

    int h = encode_nodes_on_tape(tm, g);
    int hu = tape.gather_rows(h, us);
    int hv = tape.gather_rows(h, vs);
    int logits = tape.sum_cols(tape.mul(hu, hv));  // dot product per pair
    int ylab = tape.constant(Tensor::vector(labels));
    pieces.push_back(tape.bce_with_logits(logits, ylab));
    n_pairs += labels.size();
  }
  if (pieces.empty()) throw UsageError("ep: batch has zero usable graphs");
  return pooled_mean(tape, pieces, n_pairs);
}

int ig_loss(Tape& tape, const TapeModel& tm, const Batch& batch, std::uint64_t seed) {
  if (batch.size() < 2) throw UsageError("ig: batch must contain at least 2 graphs");
  const int w_ig = tm.heads.at(TaskId::Ig).first;

  std::vector<int> node_embs;  // H_g [n, d]
  std::vector<int> ws_cols;    // W s_g [d, 1]
  for (const SyntheticGraph* g : batch) {
    int h = encode_nodes_on_tape(tm, *g);
    node_embs.push_back(h);
    int summary_row = tape.concat_rows({tape.mean_rows(h)});  // [1, d]
    ws_cols.push_back(tape.matmul(w_ig, tape.transpose(summary_row)));
  }

  std::vector<int> pieces;
  std::size_t n_pairs = 0;
  for (std::size_t gi = 0; gi < batch.size(); ++gi) {
    const int n = batch[gi]->n_nodes();
    Rng rng(derive_seed(seed, 0x16000000ULL + gi));
    std::size_t other = rng.uniform_below(batch.size() - 1);
    if (other >= gi) ++other;  // partner graph for the negative pairs

    int pos = tape.matmul(node_embs[gi], ws_cols[gi]);     // [n, 1]
    int neg = tape.matmul(node_embs[gi], ws_cols[other]);  // [n, 1]
    int ones = tape.constant(Tensor::matrix(n, 1, std::vector<double>(n, 1.0)));
    int zeros = tape.constant(Tensor::matrix(n, 1, std::vector<double>(n, 0.0)));
    pieces.push_back(tape.bce_with_logits(pos, ones));
    pieces.push_back(tape.bce_with_logits(neg, zeros));
    n_pairs += 2 * static_cast<std::size_t>(n);
  }
  return pooled_mean(tape, pieces, n_pairs);
}

int mp_loss(Tape& tape, const TapeModel& tm, const Batch& batch) {
  std::vector<int> embs;
  std::vector<double> labels;
  for (const SyntheticGraph* g : batch) {
    embs.push_back(encode_graph_on_tape(tm, *g));
    labels.push_back(static_cast<double>(g->motifs[0]));
    labels.push_back(static_cast<double>(g->motifs[1]));
  }
  int feats = tape.concat_rows(embs);
  int logits = head_forward_on_tape(tm, TaskId::Mp, feats);  // [B, 2]
  int ylab = tape.constant(Tensor::matrix(static_cast<int>(batch.size()), 2, labels));
  return tape.mean_all(tape.bce_with_logits(logits, ylab));
}

}  // namespace

LossEval eval_loss(const Model& m, TaskId task, const Batch& batch, const LossParams& p,
                   std::uint64_t seed, bool want_grad) {
  if (batch.empty()) throw UsageError("loss evaluation on an empty batch");
  Tape tape;
  TapeModel tm = TapeModel::make(tape, m, want_grad);
  int loss = -1;
  switch (task) {
    case TaskId::Target: loss = target_like_loss(tape, tm, batch, TaskId::Target, false); break;
    case TaskId::Adv: loss = target_like_loss(tape, tm, batch, TaskId::Adv, true); break;
    case TaskId::Am: loss = am_loss(tape, tm, batch, p.am_mask_ratio, seed); break;
    case TaskId::Ep: loss = ep_loss(tape, tm, batch, p.ep_neg_per_pos, seed); break;
    case TaskId::Ig: loss = ig_loss(tape, tm, batch, seed); break;
    case TaskId::Mp: loss = mp_loss(tape, tm, batch); break;
  }
  LossEval out;
  out.value = tape.scalar_val(loss);
  if (want_grad) {
    tape.backward(loss);
    out.shared_grad = shared_grad_from_tape(tape, tm);
    if (task != TaskId::Ep) out.head_grad = head_grad_from_tape(tape, tm, task);
  }
  return out;
}

double loss_target(const Model& m, const Batch& batch) {
  return eval_loss(m, TaskId::Target, batch, {}, 0, false).value;
}

double loss_am(const Model& m, const Batch& batch, double mask_ratio, std::uint64_t seed) {
  LossParams p;
  p.am_mask_ratio = mask_ratio;
  return eval_loss(m, TaskId::Am, batch, p, seed, false).value;
}

double loss_ep(const Model& m, const Batch& batch, int n_neg_per_pos, std::uint64_t seed) {
  LossParams p;
  p.ep_neg_per_pos = n_neg_per_pos;
  return eval_loss(m, TaskId::Ep, batch, p, seed, false).value;
}

double loss_ig(const Model& m, const Batch& batch, std::uint64_t seed) {
  return eval_loss(m, TaskId::Ig, batch, {}, seed, false).value;
}

double loss_mp(const Model& m, const Batch& batch) {
  return eval_loss(m, TaskId::Mp, batch, {}, 0, false).value;
}

std::vector<double> target_scores(const Model& m, const Batch& batch) {
  if (batch.empty()) throw UsageError("scores requested for an empty batch");
  Tape tape;
  TapeModel tm = TapeModel::make(tape, m, false);
  std::vector<int> embs;
  for (const SyntheticGraph* g : batch) embs.push_back(encode_graph_on_tape(tm, *g));
  int logits = head_forward_on_tape(tm, TaskId::Target, tape.concat_rows(embs));
  int probs = tape.sigmoid(logits);
  return tape.val(probs).data;
}

Batch make_batch(const std::vector<SyntheticGraph>& graphs) {
  Batch b;
  b.reserve(graphs.size());
  for (const auto& g : graphs) b.push_back(&g);
  return b;
}

}  // namespace gradsurge
