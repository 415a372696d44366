#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "gradsurge/bilevel.hpp"
#include "gradsurge/graph.hpp"
#include "gradsurge/losses.hpp"
#include "gradsurge/model.hpp"

namespace gradsurge {

enum class Method { Ft, Mtl, GradSim, GradScale, PcGrad, RcGrad, Blo, Blorc };

std::string method_name(Method m);
Method method_from_name(const std::string& name);

// Fully resolved experiment configuration. Loading rejects unknown keys;
// every field has a documented default (dump a reference with
// `gradsurge train --print-config`).
struct ExperimentConfig {
  Method method = Method::Ft;
  std::uint64_t seed = 1;
  std::string out_dir = "runs";
  int threads = 1;

  DatasetParams dataset;
  std::array<double, 4> fractions{0.60, 0.15, 0.10, 0.15};
  // restricts target-task supervision to the first N train graphs
  // (0 = no limit); self-supervised tasks still see the full train split
  int target_train_limit = 0;

  std::vector<TaskId> aux{TaskId::Am, TaskId::Ep, TaskId::Ig, TaskId::Mp};

  EncoderConfig model;

  double alpha = 0.001;
  int batch_size = 32;
  int epochs = 100;
  int pretrain_epochs = 0;
  bool use_adam = false;

  BiLevelConfig bilevel;
  double eta_kappa = 0.01;
  double kappa_max = 10.0;

  LossParams losses;
  bool gradscale_symmetric = false;

  void validate() const;
  nlohmann::json to_json() const;
  static ExperimentConfig from_json(const nlohmann::json& j);
  static ExperimentConfig load_file(const std::string& path);

  // FNV-1a over the canonical serialization; stable across platforms
  std::string hash() const;
};

std::string fnv1a_hex(const std::string& data);

}  // namespace gradsurge
