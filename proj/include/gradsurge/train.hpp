#pragma once

#include <map>
#include <string>
#include <vector>

#include "gradsurge/combiners.hpp"
#include "gradsurge/config.hpp"

namespace gradsurge {

struct TraceEntry {
  int step;       // global inner step at which the update landed
  int component;  // w: aux index 0..k-1; kappa: 0 = kappa_t, 1..k = aux
  double value;
};

struct EpochStats {
  int epoch = 0;
  std::map<std::string, double> train_losses;  // keyed by task name
  std::map<std::string, double> valid_losses;
  double valid_auc = 0.0;
  bool valid_auc_defined = true;
};

struct TrainResult {
  std::vector<EpochStats> epochs;
  std::vector<TraceEntry> w_trace;
  std::vector<TraceEntry> kappa_trace;
  TaskWeights final_w;
  RotationScalars final_kappa;
  int best_epoch = -1;
};

// Joint training of the shared encoder and all task heads on the configured
// method. The model is left at the best-validation-epoch parameters.
TrainResult train_model(Model& m, const DatasetSplit& split, const ExperimentConfig& cfg);

// Per-task gradient bundle at the model's current parameters.
GradientBundle compute_bundle(const Model& m, const Batch& target_batch, const Batch& aux_batch,
                              const LossParams& p, std::uint64_t step_seed,
                              std::vector<FlatVec>* head_grads, std::vector<double>* loss_values);

}  // namespace gradsurge
