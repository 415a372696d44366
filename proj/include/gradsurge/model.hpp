#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "gradsurge/autodiff.hpp"
#include "gradsurge/graph.hpp"
#include "gradsurge/rng.hpp"
#include "gradsurge/tensor.hpp"

namespace gradsurge {

// Canonical flattening order (version stamped into checkpoints):
//   shared encoder first: embedding table row-major, then layers in forward
//   order, within a layer w_self, w_neigh (message-passing only), bias;
//   heads follow in TaskId order, within a head weight then bias.
inline constexpr int kFlatteningVersion = 1;
inline constexpr int kEmbedRows = kNodeTypes + 1;  // +1 for the mask id

enum class EncoderVariant { Mlp, MessagePassing };

struct EncoderConfig {
  EncoderVariant variant = EncoderVariant::MessagePassing;
  int layers = 3;
  int hidden = 32;
};

// Fixed task ordering; gradient bundles and traces follow it.
enum class TaskId { Target = 0, Am, Ep, Ig, Mp, Adv };

std::string task_name(TaskId t);
TaskId task_from_name(const std::string& name);

struct EncoderLayer {
  Tensor w_self;   // [d, d]
  Tensor w_neigh;  // [d, d], empty for mlp
  Tensor bias;     // [d]
};

// Shared trainable encoder (the theta_gnn role).
struct SharedEncoder {
  EncoderConfig cfg;
  Tensor embed;  // [kEmbedRows, d]
  std::vector<EncoderLayer> layers;
};

// Task-private affine head. Ig holds only the bilinear discriminator weight.
struct TaskHead {
  Tensor w;  // [in, out]
  Tensor b;  // [out], absent when has_bias == false
  bool has_bias = true;
};

struct Model {
  SharedEncoder encoder;
  std::vector<TaskId> aux_tasks;    // canonical-order subset of {Am,Ep,Ig,Mp,Adv}
  std::map<TaskId, TaskHead> heads; // Target always present; Ep never (parameter-free)

  int hidden() const { return encoder.cfg.hidden; }
  int n_aux() const { return static_cast<int>(aux_tasks.size()); }
};

// Weights ~ uniform(-sqrt(1/fan_in), +sqrt(1/fan_in)), biases zero;
// deterministic in the seed.
Model init_model(const EncoderConfig& cfg, const std::vector<TaskId>& aux_tasks, std::uint64_t seed);

std::size_t shared_param_count(const EncoderConfig& cfg);
FlatVec flatten_shared(const Model& m);
void set_shared(Model& m, const FlatVec& theta);
FlatVec flatten_head(const TaskHead& h);
void set_head(TaskHead& h, const FlatVec& v);

// ---- tape plumbing -------------------------------------------------------

// Leaf ids of every model parameter on one tape.
struct TapeModel {
  Tape* tape = nullptr;
  const Model* model = nullptr;
  int embed = -1;
  struct LayerIds {
    int w_self = -1, w_neigh = -1, bias = -1;
  };
  std::vector<LayerIds> layers;
  std::map<TaskId, std::pair<int, int>> heads;  // (w, b or -1)

  static TapeModel make(Tape& tape, const Model& m, bool needs_grad);
};

// Node embeddings [n, d]. override_types, when given, replaces the graph's
// node type ids for layer-0 lookup (used by masking).
int encode_nodes_on_tape(const TapeModel& tm, const SyntheticGraph& g,
                         const std::vector<int>* override_types = nullptr);
// mean over node embeddings -> [d]
int encode_graph_on_tape(const TapeModel& tm, const SyntheticGraph& g);
// affine map only: features [m, in] -> logits [m, out]
int head_forward_on_tape(const TapeModel& tm, TaskId task, int features);

// gradients read back after tape.backward(), in canonical flattening order
FlatVec shared_grad_from_tape(const Tape& tape, const TapeModel& tm);
FlatVec head_grad_from_tape(const Tape& tape, const TapeModel& tm, TaskId task);

// ---- convenience (fresh throwaway tape) ----------------------------------

Tensor encode_nodes(const Model& m, const SyntheticGraph& g);
Tensor encode_graph(const Model& m, const SyntheticGraph& g);
Tensor head_forward(const Model& m, TaskId task, const Tensor& features);

// ---- checkpoints ----------------------------------------------------------

// One JSON header line with architecture hyperparameters and format version,
// then all parameters as little-endian 64-bit reals in canonical order.
void save_checkpoint(const std::string& path, const Model& m);
Model load_checkpoint(const std::string& path);

}  // namespace gradsurge
