#include "gradsurge/train.hpp"

#include <algorithm>
#include <cmath>

#include "gradsurge/kernels.hpp"
#include "gradsurge/metrics.hpp"

namespace gradsurge {

namespace {

struct AdamState {
  FlatVec m, v;
  int t = 0;

  void step(FlatVec& theta, const FlatVec& g, double lr) {
    if (m.empty()) {
      m.assign(theta.size(), 0.0);
      v.assign(theta.size(), 0.0);
    }
    ++t;
    const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    const double bc1 = 1.0 - std::pow(b1, t);
    const double bc2 = 1.0 - std::pow(b2, t);
    for (std::size_t i = 0; i < theta.size(); ++i) {
      m[i] = b1 * m[i] + (1.0 - b1) * g[i];
      v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
      theta[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps);
    }
  }
};

std::vector<Batch> make_epoch_batches(const std::vector<const SyntheticGraph*>& pool,
                                      int batch_size, std::uint64_t seed) {
  std::vector<int> order(pool.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  Rng rng(seed);
  rng.shuffle(order);
  std::vector<Batch> batches;
  for (std::size_t at = 0; at < order.size(); at += batch_size) {
    Batch b;
    for (std::size_t i = at; i < order.size() && i < at + batch_size; ++i)
      b.push_back(pool[order[i]]);
    batches.push_back(std::move(b));
  }
  return batches;
}

// gradient of the target loss w.r.t. shared parameters, as a function of
// theta, on a fixed batch (heads held at their current values)
GradFn make_target_grad_fn(const Model& m, const Batch& batch) {
  return [model = m, batch](const FlatVec& theta) mutable {
    set_shared(model, theta);
    return eval_loss(model, TaskId::Target, batch, {}, 0, true).shared_grad;
  };
}

struct Snapshot {
  FlatVec shared;
  std::map<TaskId, FlatVec> heads;

  static Snapshot take(const Model& m) {
    Snapshot s;
    s.shared = flatten_shared(m);
    for (const auto& [task, head] : m.heads) s.heads[task] = flatten_head(head);
    return s;
  }
  void restore(Model& m) const {
    set_shared(m, shared);
    for (auto& [task, head] : m.heads) set_head(head, heads.at(task));
  }
};

double safe_eval(const Model& m, TaskId task, const Batch& batch, const LossParams& p,
                 std::uint64_t seed, bool* ok) {
  try {
    double v = eval_loss(m, task, batch, p, seed, false).value;
    *ok = true;
    return v;
  } catch (const UsageError&) {
    *ok = false;  // e.g. ep on a batch with no usable graphs
    return 0.0;
  }
}

}  // namespace

GradientBundle compute_bundle(const Model& m, const Batch& target_batch, const Batch& aux_batch,
                              const LossParams& p, std::uint64_t step_seed,
                              std::vector<FlatVec>* head_grads, std::vector<double>* loss_values) {
  GradientBundle bundle;
  if (head_grads) head_grads->clear();
  if (loss_values) loss_values->clear();

  LossEval target = eval_loss(m, TaskId::Target, target_batch, p, derive_seed(step_seed, 0), true);
  bundle.target = std::move(target.shared_grad);
  if (head_grads) head_grads->push_back(std::move(target.head_grad));
  if (loss_values) loss_values->push_back(target.value);

  for (std::size_t i = 0; i < m.aux_tasks.size(); ++i) {
    LossEval aux = eval_loss(m, m.aux_tasks[i], aux_batch, p, derive_seed(step_seed, 1 + i), true);
    bundle.aux.push_back(std::move(aux.shared_grad));
    if (head_grads) head_grads->push_back(std::move(aux.head_grad));
    if (loss_values) loss_values->push_back(aux.value);
  }
  return bundle;
}

TrainResult train_model(Model& m, const DatasetSplit& split, const ExperimentConfig& cfg) {
  if (split.train.empty()) throw UsageError("training requires a nonempty train split");
  const bool bilevel_method = cfg.method == Method::Blo || cfg.method == Method::Blorc;
  if (bilevel_method && split.aux_heldout.empty() && m.n_aux() > 0)
    throw UsageError("bi-level methods require a nonempty aux_heldout split");

  const int k = m.n_aux();
  const LossParams& lp = cfg.losses;

  // target supervision may be restricted; self-supervised tasks always see
  // the full train split
  Batch full_train = make_batch(split.train);
  Batch target_pool = full_train;
  if (cfg.target_train_limit > 0 &&
      cfg.target_train_limit < static_cast<int>(target_pool.size()))
    target_pool.resize(cfg.target_train_limit);
  const bool shared_pool = target_pool.size() == full_train.size();
  Batch heldout = make_batch(split.aux_heldout);
  Batch valid = make_batch(split.valid);

  TrainResult res;
  TaskWeights w = init_task_weights(k);
  RotationScalars kappa = RotationScalars::init(k);

  AdamState adam_shared;
  std::map<TaskId, AdamState> adam_heads;

  auto apply_shared = [&](const FlatVec& g) {
    FlatVec theta = flatten_shared(m);
    if (cfg.use_adam)
      adam_shared.step(theta, g, cfg.alpha);
    else
      kernels::axpy(-cfg.alpha, g, theta);
    set_shared(m, theta);
  };
  auto apply_head = [&](TaskId task, const FlatVec& g) {
    if (g.empty()) return;  // parameter-free task
    TaskHead& head = m.heads.at(task);
    FlatVec phi = flatten_head(head);
    if (cfg.use_adam)
      adam_heads[task].step(phi, g, cfg.alpha);
    else
      kernels::axpy(-cfg.alpha, g, phi);
    set_head(head, phi);
  };

  // optional adaptation-free stage: auxiliary tasks alone
  for (int pe = 0; pe < cfg.pretrain_epochs && k > 0; ++pe) {
    auto batches = make_epoch_batches(full_train, cfg.batch_size,
                                      derive_seed(cfg.seed, 0x9e000000ULL + pe));
    for (std::size_t bi = 0; bi < batches.size(); ++bi) {
      const std::uint64_t step_seed = derive_seed(cfg.seed, 0x9f000000ULL + pe * 1024 + bi);
      FlatVec total;
      for (int i = 0; i < k; ++i) {
        LossEval aux = eval_loss(m, m.aux_tasks[i], batches[bi], lp, derive_seed(step_seed, 1 + i), true);
        if (total.empty())
          total = std::move(aux.shared_grad);
        else
          kernels::axpy(1.0, aux.shared_grad, total);
        apply_head(m.aux_tasks[i], aux.head_grad);
      }
      apply_shared(total);
    }
  }

  int global_step = 0;
  int outer_count = 0;
  double best_auc = -1.0;
  double best_loss = std::numeric_limits<double>::infinity();
  bool have_best = false;
  Snapshot best_snapshot = Snapshot::take(m);

  // grad of the target loss on the aux-heldout split, used by the outer
  // problems as the generalization signal
  auto make_heldout_grad_fn = [&]() { return make_target_grad_fn(m, heldout); };

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    auto target_batches =
        make_epoch_batches(target_pool, cfg.batch_size, derive_seed(cfg.seed, 0x10000000ULL + epoch));
    auto aux_batches = shared_pool
                           ? target_batches
                           : make_epoch_batches(full_train, cfg.batch_size,
                                                derive_seed(cfg.seed, 0x20000000ULL + epoch));
    const std::size_t steps = std::max(target_batches.size(), k > 0 ? aux_batches.size() : 0ul);

    for (std::size_t s = 0; s < steps; ++s) {
      const Batch& tb = target_batches[s % target_batches.size()];
      const Batch& ab = aux_batches[s % aux_batches.size()];
      const std::uint64_t step_seed = derive_seed(cfg.seed, 0x30000000ULL + global_step);

      std::vector<FlatVec> head_grads;
      GradientBundle bundle = compute_bundle(m, tb, ab, lp, step_seed, &head_grads, nullptr);

      FlatVec direction;
      switch (cfg.method) {
        case Method::Ft:
          direction = bundle.target;
          break;
        case Method::Mtl:
          direction = combine_mtl(bundle, std::vector<double>(k, 1.0));
          break;
        case Method::GradSim:
          direction = combine_gradsim(bundle);
          break;
        case Method::GradScale:
          direction = combine_gradscale(bundle, cfg.gradscale_symmetric);
          break;
        case Method::PcGrad:
          direction = combine_pcgrad(bundle);
          break;
        case Method::RcGrad: {
          // kappa learned every step against the training target loss
          auto upd = update_kappa(flatten_shared(m), bundle, kappa, cfg.alpha, cfg.eta_kappa,
                                  cfg.kappa_max, make_target_grad_fn(m, tb));
          kappa = upd.kappa;
          res.kappa_trace.push_back({global_step, 0, kappa.kappa_t});
          for (int i = 0; i < k; ++i)
            res.kappa_trace.push_back({global_step, 1 + i, kappa.kappa_aux[i]});
          direction = combine_rcgrad(bundle, kappa, cfg.gradscale_symmetric);
          break;
        }
        case Method::Blo:
          direction = combine_mtl(bundle, w);
          break;
        case Method::Blorc: {
          if (k > 0 && (global_step + 1) % cfg.bilevel.update_every == 0) {
            // kappa learned against the held-out target loss
            auto upd = update_kappa(flatten_shared(m), bundle, kappa, cfg.alpha, cfg.eta_kappa,
                                    cfg.kappa_max, make_heldout_grad_fn());
            kappa = upd.kappa;
            res.kappa_trace.push_back({global_step, 0, kappa.kappa_t});
            for (int i = 0; i < k; ++i)
              res.kappa_trace.push_back({global_step, 1 + i, kappa.kappa_aux[i]});
          }
          direction = combine_rcgrad(bundle, kappa, cfg.gradscale_symmetric);
          break;
        }
      }

      apply_shared(direction);
      apply_head(TaskId::Target, head_grads[0]);
      for (int i = 0; i < k; ++i) apply_head(m.aux_tasks[i], head_grads[1 + i]);

      if (cfg.method == Method::Blo && k > 0 && (global_step + 1) % cfg.bilevel.update_every == 0) {
        const std::uint64_t outer_seed = derive_seed(cfg.seed, 0x40000000ULL + outer_count);
        ++outer_count;

        // losses pinned to one seed so the HVP differentiates a fixed function
        auto total_grad = [&, outer_seed](const FlatVec& theta) {
          Model probe = m;
          set_shared(probe, theta);
          FlatVec g =
              eval_loss(probe, TaskId::Target, target_pool, lp, derive_seed(outer_seed, 0), true)
                  .shared_grad;
          for (int i = 0; i < k; ++i) {
            LossEval aux = eval_loss(probe, m.aux_tasks[i], full_train, lp,
                                     derive_seed(outer_seed, 1 + i), true);
            kernels::axpy(w[i], aux.shared_grad, g);
          }
          return g;
        };
        auto val_grad = [&, outer_seed](const FlatVec& theta) {
          Model probe = m;
          set_shared(probe, theta);
          return eval_loss(probe, TaskId::Target, heldout, lp, derive_seed(outer_seed, 100), true)
              .shared_grad;
        };
        std::vector<GradFn> aux_grads;
        for (int i = 0; i < k; ++i) {
          aux_grads.push_back([&, i, outer_seed](const FlatVec& theta) {
            Model probe = m;
            set_shared(probe, theta);
            return eval_loss(probe, m.aux_tasks[i], full_train, lp, derive_seed(outer_seed, 1 + i),
                             true)
                .shared_grad;
          });
        }

        std::vector<double> hg =
            neumann_hypergrad(flatten_shared(m), total_grad, val_grad, aux_grads, cfg.bilevel);
        const double lo = cfg.bilevel.allow_negative_w ? -cfg.bilevel.w_max : 0.0;
        for (int i = 0; i < k; ++i) {
          w[i] = std::clamp(w[i] - cfg.bilevel.eta_w * hg[i], lo, cfg.bilevel.w_max);
          res.w_trace.push_back({global_step, i, w[i]});
        }
      }

      ++global_step;
    }

    // epoch bookkeeping: losses on the full pools, metric on valid
    EpochStats stats;
    stats.epoch = epoch;
    const std::uint64_t eval_seed = derive_seed(cfg.seed, 0x50000000ULL + epoch);
    bool ok = false;
    stats.train_losses["target"] = safe_eval(m, TaskId::Target, target_pool, lp, eval_seed, &ok);
    for (int i = 0; i < k; ++i) {
      double v = safe_eval(m, m.aux_tasks[i], full_train, lp, derive_seed(eval_seed, 1 + i), &ok);
      if (ok) stats.train_losses[task_name(m.aux_tasks[i])] = v;
    }
    if (!valid.empty()) {
      stats.valid_losses["target"] = safe_eval(m, TaskId::Target, valid, lp, eval_seed, &ok);
      for (int i = 0; i < k; ++i) {
        double v = safe_eval(m, m.aux_tasks[i], valid, lp, derive_seed(eval_seed, 101 + i), &ok);
        if (ok) stats.valid_losses[task_name(m.aux_tasks[i])] = v;
      }
      std::vector<double> scores = target_scores(m, valid);
      std::vector<int> labels;
      for (const SyntheticGraph* g : valid) labels.push_back(g->target_label);
      try {
        stats.valid_auc = roc_auc(scores, labels);
      } catch (const UsageError&) {
        stats.valid_auc_defined = false;  // single-class valid split
      }
    } else {
      stats.valid_auc_defined = false;
    }

    const double vloss = stats.valid_losses.count("target")
                             ? stats.valid_losses.at("target")
                             : stats.train_losses.at("target");
    bool better;
    if (stats.valid_auc_defined)
      better = !have_best || stats.valid_auc > best_auc;
    else
      better = !have_best || vloss < best_loss;
    if (better) {
      best_auc = stats.valid_auc_defined ? stats.valid_auc : best_auc;
      best_loss = vloss;
      have_best = true;
      res.best_epoch = epoch;
      best_snapshot = Snapshot::take(m);
    }
    res.epochs.push_back(std::move(stats));
  }

  best_snapshot.restore(m);
  res.final_w = w;
  res.final_kappa = kappa;
  return res;
}

}  // namespace gradsurge
