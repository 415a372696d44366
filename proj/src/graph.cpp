#include "gradsurge/graph.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include <json.hpp>

#include "gradsurge/rng.hpp"

namespace gradsurge {

bool SyntheticGraph::has_edge(int u, int v) const {
  if (u > v) std::swap(u, v);
  return std::binary_search(edges.begin(), edges.end(), std::make_pair(u, v));
}

std::vector<std::vector<int>> SyntheticGraph::adjacency() const {
  std::vector<std::vector<int>> adj(node_types.size());
  for (auto [u, v] : edges) {
    adj[u].push_back(v);
    adj[v].push_back(u);
  }
  return adj;
}

bool has_triangle(const SyntheticGraph& g) {
  const auto adj = g.adjacency();
  for (auto [u, v] : g.edges) {
    // common neighbor of an edge closes a triangle
    for (int w : adj[u])
      if (w != v && g.has_edge(w, v)) return true;
  }
  return false;
}

bool has_chordless_four_cycle(const SyntheticGraph& g) {
  // a-c-b-d-a with a,b and c,d the non-adjacent opposite pairs
  const int n = g.n_nodes();
  const auto adj = g.adjacency();
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      if (g.has_edge(a, b)) continue;
      std::vector<int> common;
      for (int w : adj[a])
        if (g.has_edge(w, b)) common.push_back(w);
      for (std::size_t i = 0; i < common.size(); ++i)
        for (std::size_t j = i + 1; j < common.size(); ++j)
          if (!g.has_edge(common[i], common[j])) return true;
    }
  }
  return false;
}

bool majority_type_zero(const SyntheticGraph& g) {
  int count0 = 0;
  for (int t : g.node_types) count0 += t == 0;
  return 2 * count0 > g.n_nodes();
}

std::vector<SyntheticGraph> gen_dataset(const DatasetParams& p) {
  if (p.n_nodes_min < 4 || p.n_nodes_max > 40 || p.n_nodes_min > p.n_nodes_max)
    throw UsageError("n_nodes_range must lie within [4, 40]");
  if (!(p.edge_prob > 0.0 && p.edge_prob < 1.0)) throw UsageError("edge_prob must be in (0, 1)");
  if (p.n_graphs <= 0) throw UsageError("n_graphs must be positive");

  Rng rng(derive_seed(p.seed, 0x6765'6e64'6174'61ULL));
  std::vector<SyntheticGraph> out;
  out.reserve(p.n_graphs);
  for (int gi = 0; gi < p.n_graphs; ++gi) {
    SyntheticGraph g;
    const int n = rng.uniform_int(p.n_nodes_min, p.n_nodes_max);
    g.node_types.resize(n);
    for (int& t : g.node_types) t = rng.uniform_int(0, kNodeTypes - 1);

    std::set<std::pair<int, int>> edges;
    for (int u = 0; u < n; ++u)
      for (int v = u + 1; v < n; ++v)
        if (rng.bernoulli(p.edge_prob)) edges.insert({u, v});
    if (rng.bernoulli(0.5)) {
      auto tri = rng.sample_without_replacement(n, 3);
      std::sort(tri.begin(), tri.end());
      edges.insert({tri[0], tri[1]});
      edges.insert({tri[0], tri[2]});
      edges.insert({tri[1], tri[2]});
    }
    g.edges.assign(edges.begin(), edges.end());

    g.motifs[0] = has_triangle(g) ? 1 : 0;
    g.motifs[1] = has_chordless_four_cycle(g) ? 1 : 0;
    g.target_label = (g.motifs[0] != 0) != majority_type_zero(g) ? 1 : 0;
    out.push_back(std::move(g));
  }
  return out;
}

DatasetSplit split_dataset(const std::vector<SyntheticGraph>& graphs, std::uint64_t seed,
                           const std::array<double, 4>& fractions) {
  double total = 0.0;
  for (double f : fractions) {
    if (f < 0.0) throw UsageError("split fractions must be nonnegative");
    total += f;
  }
  if (std::abs(total - 1.0) > 1e-9) throw UsageError("split fractions must sum to 1");

  const int n = static_cast<int>(graphs.size());
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  Rng rng(derive_seed(seed, 0x73706c6974ULL));
  rng.shuffle(order);

  // largest-remainder rounding; remainder ties go to the earlier split
  std::array<int, 4> sizes{};
  std::array<double, 4> rem{};
  int used = 0;
  for (int i = 0; i < 4; ++i) {
    const double exact = fractions[i] * n;
    sizes[i] = static_cast<int>(exact);
    rem[i] = exact - sizes[i];
    used += sizes[i];
  }
  std::array<int, 4> by_rem{0, 1, 2, 3};
  std::stable_sort(by_rem.begin(), by_rem.end(), [&](int a, int b) { return rem[a] > rem[b]; });
  for (int i = 0; used < n; ++i, ++used) sizes[by_rem[i % 4]] += 1;

  DatasetSplit split;
  std::array<std::vector<SyntheticGraph>*, 4> parts{&split.train, &split.aux_heldout, &split.valid, &split.test};
  int pos = 0;
  for (int i = 0; i < 4; ++i) {
    parts[i]->reserve(sizes[i]);
    for (int j = 0; j < sizes[i]; ++j) parts[i]->push_back(graphs[order[pos++]]);
  }
  return split;
}

void write_jsonl(std::ostream& os, const std::vector<SyntheticGraph>& graphs) {
  for (const auto& g : graphs) {
    nlohmann::json j;
    j["nodes"] = g.node_types;
    auto& je = j["edges"] = nlohmann::json::array();
    for (auto [u, v] : g.edges) je.push_back({u, v});
    j["y"] = g.target_label;
    j["motifs"] = {g.motifs[0], g.motifs[1]};
    os << j.dump() << "\n";
  }
}

std::vector<SyntheticGraph> read_jsonl(std::istream& is) {
  std::vector<SyntheticGraph> out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line);
    SyntheticGraph g;
    g.node_types = j.at("nodes").get<std::vector<int>>();
    for (const auto& e : j.at("edges")) {
      int u = e.at(0).get<int>(), v = e.at(1).get<int>();
      if (u > v) std::swap(u, v);
      if (u == v || u < 0 || v >= g.n_nodes()) throw ConfigError("dataset edge endpoints out of range");
      g.edges.emplace_back(u, v);
    }
    std::sort(g.edges.begin(), g.edges.end());
    g.edges.erase(std::unique(g.edges.begin(), g.edges.end()), g.edges.end());
    g.target_label = j.at("y").get<int>();
    if (j.contains("motifs")) {
      g.motifs[0] = j["motifs"].at(0).get<int>();
      g.motifs[1] = j["motifs"].at(1).get<int>();
    } else {
      g.motifs[0] = has_triangle(g) ? 1 : 0;
      g.motifs[1] = has_chordless_four_cycle(g) ? 1 : 0;
    }
    for (int t : g.node_types)
      if (t < 0 || t >= kNodeTypes) throw ConfigError("dataset node type out of range");
    out.push_back(std::move(g));
  }
  return out;
}

void write_jsonl_file(const std::string& path, const std::vector<SyntheticGraph>& graphs) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot open for writing: " + path);
  write_jsonl(os, graphs);
}

std::vector<SyntheticGraph> read_jsonl_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open for reading: " + path);
  return read_jsonl(is);
}

}  // namespace gradsurge
