#include "gradsurge/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include <json.hpp>

namespace gradsurge {

std::string task_name(TaskId t) {
  switch (t) {
    case TaskId::Target: return "target";
    case TaskId::Am: return "am";
    case TaskId::Ep: return "ep";
    case TaskId::Ig: return "ig";
    case TaskId::Mp: return "mp";
    case TaskId::Adv: return "adv";
  }
  throw UsageError("unknown task id");
}

TaskId task_from_name(const std::string& name) {
  if (name == "target") return TaskId::Target;
  if (name == "am") return TaskId::Am;
  if (name == "ep") return TaskId::Ep;
  if (name == "ig") return TaskId::Ig;
  if (name == "mp") return TaskId::Mp;
  if (name == "adv") return TaskId::Adv;
  throw ConfigError("unknown task name: '" + name + "'");
}

namespace {

Tensor init_weight(int in, int out, Rng& rng) {
  const double bound = std::sqrt(1.0 / in);
  Tensor t = Tensor::zeros({in, out});
  for (double& v : t.data) v = rng.uniform(-bound, bound);
  return t;
}

int head_out_dim(TaskId t, int hidden) {
  switch (t) {
    case TaskId::Target: return 1;
    case TaskId::Am: return kNodeTypes;
    case TaskId::Ig: return hidden;  // bilinear discriminator weight
    case TaskId::Mp: return 2;
    case TaskId::Adv: return 1;
    case TaskId::Ep: break;
  }
  throw UsageError("task has no head: " + task_name(t));
}

}  // namespace

Model init_model(const EncoderConfig& cfg, const std::vector<TaskId>& aux_tasks, std::uint64_t seed) {
  if (cfg.layers < 1) throw ConfigError("encoder needs at least one layer");
  if (cfg.hidden < 1) throw ConfigError("encoder hidden width must be positive");
  Rng rng(derive_seed(seed, 0x696e6974ULL));

  Model m;
  m.encoder.cfg = cfg;
  const int d = cfg.hidden;
  m.encoder.embed = init_weight(kEmbedRows, d, rng);
  for (int l = 0; l < cfg.layers; ++l) {
    EncoderLayer layer;
    layer.w_self = init_weight(d, d, rng);
    if (cfg.variant == EncoderVariant::MessagePassing) layer.w_neigh = init_weight(d, d, rng);
    layer.bias = Tensor::zeros({d});
    m.encoder.layers.push_back(std::move(layer));
  }

  for (TaskId t : aux_tasks) {
    if (t == TaskId::Target) throw UsageError("target is not an auxiliary task");
    m.aux_tasks.push_back(t);
  }
  // canonical order regardless of the order given
  std::sort(m.aux_tasks.begin(), m.aux_tasks.end());
  m.aux_tasks.erase(std::unique(m.aux_tasks.begin(), m.aux_tasks.end()), m.aux_tasks.end());

  auto make_head = [&](TaskId t) {
    TaskHead h;
    h.w = init_weight(d, head_out_dim(t, d), rng);
    h.has_bias = t != TaskId::Ig;
    if (h.has_bias) h.b = Tensor::zeros({head_out_dim(t, d)});
    return h;
  };
  m.heads[TaskId::Target] = make_head(TaskId::Target);
  for (TaskId t : m.aux_tasks)
    if (t != TaskId::Ep) m.heads[t] = make_head(t);
  return m;
}

std::size_t shared_param_count(const EncoderConfig& cfg) {
  const std::size_t d = cfg.hidden;
  const std::size_t per_layer =
      (cfg.variant == EncoderVariant::MessagePassing ? 2 * d * d : d * d) + d;
  return kEmbedRows * d + cfg.layers * per_layer;
}

FlatVec flatten_shared(const Model& m) {
  FlatVec out;
  out.reserve(shared_param_count(m.encoder.cfg));
  out.insert(out.end(), m.encoder.embed.data.begin(), m.encoder.embed.data.end());
  for (const auto& l : m.encoder.layers) {
    out.insert(out.end(), l.w_self.data.begin(), l.w_self.data.end());
    if (!l.w_neigh.data.empty()) out.insert(out.end(), l.w_neigh.data.begin(), l.w_neigh.data.end());
    out.insert(out.end(), l.bias.data.begin(), l.bias.data.end());
  }
  return out;
}

void set_shared(Model& m, const FlatVec& theta) {
  if (theta.size() != shared_param_count(m.encoder.cfg))
    throw UsageError("flat parameter vector length does not match architecture");
  std::size_t pos = 0;
  auto take = [&](Tensor& t) {
    std::copy(theta.begin() + pos, theta.begin() + pos + t.size(), t.data.begin());
    pos += t.size();
  };
  take(m.encoder.embed);
  for (auto& l : m.encoder.layers) {
    take(l.w_self);
    if (!l.w_neigh.data.empty()) take(l.w_neigh);
    take(l.bias);
  }
}

FlatVec flatten_head(const TaskHead& h) {
  FlatVec out(h.w.data.begin(), h.w.data.end());
  if (h.has_bias) out.insert(out.end(), h.b.data.begin(), h.b.data.end());
  return out;
}

void set_head(TaskHead& h, const FlatVec& v) {
  const std::size_t expect = h.w.size() + (h.has_bias ? h.b.size() : 0);
  if (v.size() != expect) throw UsageError("flat head vector length mismatch");
  std::copy(v.begin(), v.begin() + h.w.size(), h.w.data.begin());
  if (h.has_bias) std::copy(v.begin() + h.w.size(), v.end(), h.b.data.begin());
}

TapeModel TapeModel::make(Tape& tape, const Model& m, bool needs_grad) {
  TapeModel tm;
  tm.tape = &tape;
  tm.model = &m;
  tm.embed = tape.leaf(m.encoder.embed, needs_grad);
  for (const auto& l : m.encoder.layers) {
    LayerIds ids;
    ids.w_self = tape.leaf(l.w_self, needs_grad);
    if (!l.w_neigh.data.empty()) ids.w_neigh = tape.leaf(l.w_neigh, needs_grad);
    ids.bias = tape.leaf(l.bias, needs_grad);
    tm.layers.push_back(ids);
  }
  for (const auto& [task, head] : m.heads) {
    int w = tape.leaf(head.w, needs_grad);
    int b = head.has_bias ? tape.leaf(head.b, needs_grad) : -1;
    tm.heads[task] = {w, b};
  }
  return tm;
}

int encode_nodes_on_tape(const TapeModel& tm, const SyntheticGraph& g,
                         const std::vector<int>* override_types) {
  if (g.n_nodes() == 0) throw UsageError("cannot encode an empty graph");
  const std::vector<int>& types = override_types ? *override_types : g.node_types;
  if (static_cast<int>(types.size()) != g.n_nodes())
    throw UsageError("node type list length does not match graph");
  for (int t : types)
    if (t < 0 || t >= kEmbedRows) throw UsageError("node type id out of vocabulary");

  Tape& tape = *tm.tape;
  const bool mp = tm.model->encoder.cfg.variant == EncoderVariant::MessagePassing;
  int h = tape.gather_rows(tm.embed, types);

  int adj = -1;
  if (mp) {
    const int n = g.n_nodes();
    Tensor a = Tensor::zeros({n, n});
    for (auto [u, v] : g.edges) {
      a.at(u, v) = 1.0;
      a.at(v, u) = 1.0;
    }
    adj = tape.constant(std::move(a));
  }

  for (const auto& ids : tm.layers) {
    int pre = tape.matmul(h, ids.w_self);
    if (mp) {
      int agg = tape.matmul(adj, h);  // sum over neighbors
      pre = tape.add(pre, tape.matmul(agg, ids.w_neigh));
    }
    pre = tape.add(pre, ids.bias);
    h = tape.relu(pre);
  }
  return h;
}

int encode_graph_on_tape(const TapeModel& tm, const SyntheticGraph& g) {
  return tm.tape->mean_rows(encode_nodes_on_tape(tm, g));
}

int head_forward_on_tape(const TapeModel& tm, TaskId task, int features) {
  auto it = tm.heads.find(task);
  if (it == tm.heads.end()) throw UsageError("no head allocated for task " + task_name(task));
  Tape& tape = *tm.tape;
  int out = tape.matmul(features, it->second.first);
  if (it->second.second >= 0) out = tape.add(out, it->second.second);
  return out;
}

FlatVec shared_grad_from_tape(const Tape& tape, const TapeModel& tm) {
  FlatVec out;
  out.reserve(shared_param_count(tm.model->encoder.cfg));
  auto append = [&](int id) {
    const Tensor& g = tape.grad(id);
    out.insert(out.end(), g.data.begin(), g.data.end());
  };
  append(tm.embed);
  for (const auto& ids : tm.layers) {
    append(ids.w_self);
    if (ids.w_neigh >= 0) append(ids.w_neigh);
    append(ids.bias);
  }
  return out;
}

FlatVec head_grad_from_tape(const Tape& tape, const TapeModel& tm, TaskId task) {
  auto it = tm.heads.find(task);
  if (it == tm.heads.end()) throw UsageError("no head allocated for task " + task_name(task));
  const Tensor& gw = tape.grad(it->second.first);
  FlatVec out(gw.data.begin(), gw.data.end());
  if (it->second.second >= 0) {
    const Tensor& gb = tape.grad(it->second.second);
    out.insert(out.end(), gb.data.begin(), gb.data.end());
  }
  return out;
}

Tensor encode_nodes(const Model& m, const SyntheticGraph& g) {
  Tape tape;
  TapeModel tm = TapeModel::make(tape, m, false);
  return tape.val(encode_nodes_on_tape(tm, g));
}

Tensor encode_graph(const Model& m, const SyntheticGraph& g) {
  Tape tape;
  TapeModel tm = TapeModel::make(tape, m, false);
  return tape.val(encode_graph_on_tape(tm, g));
}

Tensor head_forward(const Model& m, TaskId task, const Tensor& features) {
  Tape tape;
  TapeModel tm = TapeModel::make(tape, m, false);
  int f = tape.constant(features);
  return tape.val(head_forward_on_tape(tm, task, f));
}

namespace {

void write_le_doubles(std::ostream& os, const FlatVec& v) {
  static_assert(sizeof(double) == 8);
  for (double d : v) {
    std::uint64_t bits;
    std::memcpy(&bits, &d, 8);
    char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
    os.write(buf, 8);
  }
}

FlatVec read_le_doubles(std::istream& is, std::size_t n) {
  FlatVec v(n);
  for (std::size_t i = 0; i < n; ++i) {
    char buf[8];
    is.read(buf, 8);
    if (!is) throw ConfigError("checkpoint truncated");
    std::uint64_t bits = 0;
    for (int j = 0; j < 8; ++j)
      bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[j])) << (8 * j);
    std::memcpy(&v[i], &bits, 8);
  }
  return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const Model& m) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot open checkpoint for writing: " + path);
  nlohmann::json hdr;
  hdr["format"] = "gradsurge-checkpoint";
  hdr["version"] = 1;
  hdr["flatten_version"] = kFlatteningVersion;
  hdr["variant"] = m.encoder.cfg.variant == EncoderVariant::MessagePassing ? "message_passing" : "mlp";
  hdr["layers"] = m.encoder.cfg.layers;
  hdr["hidden"] = m.encoder.cfg.hidden;
  auto& aux = hdr["aux_tasks"] = nlohmann::json::array();
  for (TaskId t : m.aux_tasks) aux.push_back(task_name(t));
  os << hdr.dump() << "\n";

  write_le_doubles(os, flatten_shared(m));
  for (const auto& [task, head] : m.heads) write_le_doubles(os, flatten_head(head));
}

Model load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open checkpoint for reading: " + path);
  std::string line;
  if (!std::getline(is, line)) throw ConfigError("checkpoint missing header");
  nlohmann::json hdr = nlohmann::json::parse(line);
  if (hdr.value("format", "") != "gradsurge-checkpoint")
    throw ConfigError("not a gradsurge checkpoint: " + path);
  if (hdr.value("flatten_version", -1) != kFlatteningVersion)
    throw ConfigError("checkpoint flattening version mismatch");

  EncoderConfig cfg;
  const std::string variant = hdr.at("variant").get<std::string>();
  if (variant == "message_passing")
    cfg.variant = EncoderVariant::MessagePassing;
  else if (variant == "mlp")
    cfg.variant = EncoderVariant::Mlp;
  else
    throw ConfigError("unknown encoder variant in checkpoint: " + variant);
  cfg.layers = hdr.at("layers").get<int>();
  cfg.hidden = hdr.at("hidden").get<int>();

  std::vector<TaskId> aux;
  for (const auto& name : hdr.at("aux_tasks")) aux.push_back(task_from_name(name.get<std::string>()));

  Model m = init_model(cfg, aux, 0);
  set_shared(m, read_le_doubles(is, shared_param_count(cfg)));
  for (auto& [task, head] : m.heads) {
    const std::size_t n = head.w.size() + (head.has_bias ? head.b.size() : 0);
    set_head(head, read_le_doubles(is, n));
  }
  return m;
}

}  // namespace gradsurge
