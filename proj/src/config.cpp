#include "gradsurge/config.hpp"

#include <fstream>
#include <set>

namespace gradsurge {

std::string method_name(Method m) {
  switch (m) {
    case Method::Ft: return "ft";
    case Method::Mtl: return "mtl";
    case Method::GradSim: return "gradsim";
    case Method::GradScale: return "gradscale";
    case Method::PcGrad: return "pcgrad";
    case Method::RcGrad: return "rcgrad";
    case Method::Blo: return "blo";
    case Method::Blorc: return "blorc";
  }
  throw UsageError("unknown method");
}

Method method_from_name(const std::string& name) {
  for (Method m : {Method::Ft, Method::Mtl, Method::GradSim, Method::GradScale, Method::PcGrad,
                   Method::RcGrad, Method::Blo, Method::Blorc})
    if (method_name(m) == name) return m;
  throw ConfigError("unknown method: '" + name +
                    "' (expected ft|mtl|gradsim|gradscale|pcgrad|rcgrad|blo|blorc)");
}

void ExperimentConfig::validate() const {
  if (threads < 1) throw ConfigError("threads must be >= 1");
  if (alpha <= 0.0) throw ConfigError("alpha must be > 0");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (pretrain_epochs < 0) throw ConfigError("pretrain_epochs must be >= 0");
  if (target_train_limit < 0) throw ConfigError("target_train_limit must be >= 0");
  if (eta_kappa <= 0.0) throw ConfigError("eta_kappa must be > 0");
  if (kappa_max <= 0.0) throw ConfigError("kappa_max must be > 0");
  if (!(losses.am_mask_ratio > 0.0 && losses.am_mask_ratio <= 1.0))
    throw ConfigError("am_mask_ratio must be in (0, 1]");
  if (losses.ep_neg_per_pos < 1) throw ConfigError("ep_neg_per_pos must be >= 1");
  if (dataset.n_graphs < 4) throw ConfigError("n_graphs must be >= 4");
  if (dataset.n_nodes_min < 4 || dataset.n_nodes_max > 40 || dataset.n_nodes_min > dataset.n_nodes_max)
    throw ConfigError("node count range must lie within [4, 40]");
  if (!(dataset.edge_prob > 0.0 && dataset.edge_prob < 1.0))
    throw ConfigError("edge_prob must be in (0, 1)");
  double fsum = 0.0;
  for (double f : fractions) {
    if (f < 0.0) throw ConfigError("split fractions must be nonnegative");
    fsum += f;
  }
  if (std::abs(fsum - 1.0) > 1e-9) throw ConfigError("split fractions must sum to 1");
  for (TaskId t : aux)
    if (t == TaskId::Target) throw ConfigError("'target' cannot be listed as an auxiliary task");
  try {
    bilevel.validate();
  } catch (const ConfigError&) {
    throw;
  }
  if (model.layers < 1 || model.layers > 16) throw ConfigError("model layers must be in [1, 16]");
  if (model.hidden < 1 || model.hidden > 1024) throw ConfigError("model hidden must be in [1, 1024]");
}

nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json j;
  j["method"] = method_name(method);
  j["seed"] = seed;
  j["out_dir"] = out_dir;
  j["threads"] = threads;
  j["dataset"] = {{"seed", dataset.seed},
                  {"n_graphs", dataset.n_graphs},
                  {"n_nodes_min", dataset.n_nodes_min},
                  {"n_nodes_max", dataset.n_nodes_max},
                  {"edge_prob", dataset.edge_prob},
                  {"fractions", fractions},
                  {"target_train_limit", target_train_limit}};
  auto aux_names = nlohmann::json::array();
  for (TaskId t : aux) aux_names.push_back(task_name(t));
  j["aux"] = aux_names;
  j["model"] = {{"variant", model.variant == EncoderVariant::MessagePassing ? "message_passing" : "mlp"},
                {"layers", model.layers},
                {"hidden", model.hidden}};
  j["optim"] = {{"alpha", alpha},
                {"batch_size", batch_size},
                {"epochs", epochs},
                {"pretrain_epochs", pretrain_epochs},
                {"use_adam", use_adam}};
  j["bilevel"] = {{"neumann_steps", bilevel.neumann_steps},
                  {"neumann_beta", bilevel.neumann_beta},
                  {"update_every", bilevel.update_every},
                  {"eta_w", bilevel.eta_w},
                  {"w_max", bilevel.w_max},
                  {"allow_negative_w", bilevel.allow_negative_w}};
  j["kappa"] = {{"eta_kappa", eta_kappa}, {"kappa_max", kappa_max}};
  j["losses"] = {{"am_mask_ratio", losses.am_mask_ratio},
                 {"ep_neg_per_pos", losses.ep_neg_per_pos},
                 {"gradscale_symmetric", gradscale_symmetric}};
  return j;
}

namespace {

void reject_unknown(const nlohmann::json& j, const std::set<std::string>& known,
                    const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!known.count(it.key()))
      throw ConfigError("unknown config key '" + it.key() + "' in " + where);
}

template <typename T>
void maybe(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  reject_unknown(j, {"method", "seed", "out_dir", "threads", "dataset", "aux", "model", "optim",
                     "bilevel", "kappa", "losses"},
                 "top level");
  if (j.contains("method")) c.method = method_from_name(j.at("method").get<std::string>());
  maybe(j, "seed", c.seed);
  maybe(j, "out_dir", c.out_dir);
  maybe(j, "threads", c.threads);

  if (j.contains("dataset")) {
    const auto& d = j.at("dataset");
    reject_unknown(d, {"seed", "n_graphs", "n_nodes_min", "n_nodes_max", "edge_prob", "fractions",
                       "target_train_limit"},
                   "dataset");
    maybe(d, "seed", c.dataset.seed);
    maybe(d, "n_graphs", c.dataset.n_graphs);
    maybe(d, "n_nodes_min", c.dataset.n_nodes_min);
    maybe(d, "n_nodes_max", c.dataset.n_nodes_max);
    maybe(d, "edge_prob", c.dataset.edge_prob);
    maybe(d, "fractions", c.fractions);
    maybe(d, "target_train_limit", c.target_train_limit);
  }
  if (j.contains("aux")) {
    c.aux.clear();
    for (const auto& name : j.at("aux")) c.aux.push_back(task_from_name(name.get<std::string>()));
  }
  if (j.contains("model")) {
    const auto& m = j.at("model");
    reject_unknown(m, {"variant", "layers", "hidden"}, "model");
    if (m.contains("variant")) {
      const std::string v = m.at("variant").get<std::string>();
      if (v == "message_passing")
        c.model.variant = EncoderVariant::MessagePassing;
      else if (v == "mlp")
        c.model.variant = EncoderVariant::Mlp;
      else
        throw ConfigError("unknown model variant: '" + v + "'");
    }
    maybe(m, "layers", c.model.layers);
    maybe(m, "hidden", c.model.hidden);
  }
  if (j.contains("optim")) {
    const auto& o = j.at("optim");
    reject_unknown(o, {"alpha", "batch_size", "epochs", "pretrain_epochs", "use_adam"}, "optim");
    maybe(o, "alpha", c.alpha);
    maybe(o, "batch_size", c.batch_size);
    maybe(o, "epochs", c.epochs);
    maybe(o, "pretrain_epochs", c.pretrain_epochs);
    maybe(o, "use_adam", c.use_adam);
  }
  if (j.contains("bilevel")) {
    const auto& b = j.at("bilevel");
    reject_unknown(b, {"neumann_steps", "neumann_beta", "update_every", "eta_w", "w_max",
                       "allow_negative_w"},
                   "bilevel");
    maybe(b, "neumann_steps", c.bilevel.neumann_steps);
    maybe(b, "neumann_beta", c.bilevel.neumann_beta);
    maybe(b, "update_every", c.bilevel.update_every);
    maybe(b, "eta_w", c.bilevel.eta_w);
    maybe(b, "w_max", c.bilevel.w_max);
    maybe(b, "allow_negative_w", c.bilevel.allow_negative_w);
  }
  if (j.contains("kappa")) {
    const auto& k = j.at("kappa");
    reject_unknown(k, {"eta_kappa", "kappa_max"}, "kappa");
    maybe(k, "eta_kappa", c.eta_kappa);
    maybe(k, "kappa_max", c.kappa_max);
  }
  if (j.contains("losses")) {
    const auto& l = j.at("losses");
    reject_unknown(l, {"am_mask_ratio", "ep_neg_per_pos", "gradscale_symmetric"}, "losses");
    maybe(l, "am_mask_ratio", c.losses.am_mask_ratio);
    maybe(l, "ep_neg_per_pos", c.losses.ep_neg_per_pos);
    maybe(l, "gradscale_symmetric", c.gradscale_symmetric);
  }
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::load_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file: " + path);
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config parse error in " + path + ": " + e.what());
  }
  return from_json(j);
}

std::string fnv1a_hex(const std::string& data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

std::string ExperimentConfig::hash() const { return fnv1a_hex(to_json().dump()); }

}  // namespace gradsurge
