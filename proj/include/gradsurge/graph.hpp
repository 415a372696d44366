#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "gradsurge/common.hpp"

namespace gradsurge {

// Number of real node types; index kMaskType is reserved for masked nodes.
inline constexpr int kNodeTypes = 4;
inline constexpr int kMaskType = 4;

// Node-typed undirected graph with a binary target label and exact motif
// labels computed at generation time.
struct SyntheticGraph {
  std::vector<int> node_types;                // values in [0, kNodeTypes)
  std::vector<std::pair<int, int>> edges;     // u < v, sorted, unique, no self-loops
  int target_label = 0;                       // {0,1}
  std::array<int, 2> motifs{0, 0};            // {has triangle, has chordless 4-cycle}

  int n_nodes() const { return static_cast<int>(node_types.size()); }
  int n_edges() const { return static_cast<int>(edges.size()); }
  bool has_edge(int u, int v) const;
  std::vector<std::vector<int>> adjacency() const;
};

// Exact motif detection by enumeration (n <= 40 keeps this cheap).
bool has_triangle(const SyntheticGraph& g);
bool has_chordless_four_cycle(const SyntheticGraph& g);

// Strict majority: more than half of the nodes have type 0.
bool majority_type_zero(const SyntheticGraph& g);

struct DatasetParams {
  std::uint64_t seed = 7;
  int n_graphs = 300;
  int n_nodes_min = 4;
  int n_nodes_max = 10;
  double edge_prob = 0.15;
};

// Random graphs with a planted-triangle coin flip; the target label is
//   label = (contains >= 1 triangle) XOR (strict majority of nodes has type 0)
// so both structure and node-type statistics carry signal.
std::vector<SyntheticGraph> gen_dataset(const DatasetParams& p);

struct DatasetSplit {
  std::vector<SyntheticGraph> train;
  std::vector<SyntheticGraph> aux_heldout;  // outer-objective split
  std::vector<SyntheticGraph> valid;
  std::vector<SyntheticGraph> test;
};

// Seeded shuffle then contiguous slices sized by largest-remainder rounding.
// fractions = {train, aux_heldout, valid, test}, must sum to 1.
DatasetSplit split_dataset(const std::vector<SyntheticGraph>& graphs, std::uint64_t seed,
                           const std::array<double, 4>& fractions = {0.60, 0.15, 0.10, 0.15});

// JSON-lines serialization: one graph per line,
// {"nodes":[...],"edges":[[u,v],...],"y":0|1,"motifs":[0|1,0|1]}
void write_jsonl(std::ostream& os, const std::vector<SyntheticGraph>& graphs);
std::vector<SyntheticGraph> read_jsonl(std::istream& is);
void write_jsonl_file(const std::string& path, const std::vector<SyntheticGraph>& graphs);
std::vector<SyntheticGraph> read_jsonl_file(const std::string& path);

}  // namespace gradsurge
