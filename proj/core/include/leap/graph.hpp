#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace leap::graph {

using NodeId = std::int32_t;

struct Edge {
  NodeId u, v;
  double w = 1.0;
};

struct LoadOptions {
  bool directed = false;
  bool weighted = false;
  char delimiter = ' ';  // ' ' means any whitespace
  // When true, labels must be non-negative integers and are used directly as
  // internal ids (no re-indexing); lets split files round-trip exactly.
  bool numeric_ids = false;
  NodeId min_node_count = 0;  // only with numeric_ids
};

inline std::uint64_t pair_key(NodeId u, NodeId v) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(u)) << 32) |
         static_cast<std::uint32_t>(v);
}

/// Immutable graph with dense node ids in [0, N). Undirected graphs store
/// each edge once (u < v) but index neighbors symmetrically.
class Graph {
 public:
  Graph(NodeId node_count, bool directed, bool weighted,
        std::vector<Edge> edges,
        std::vector<std::string> original_ids = {});

  NodeId node_count() const { return node_count_; }
  bool directed() const { return directed_; }
  bool weighted() const { return weighted_; }
  const std::vector<Edge>& edges() const { return edges_; }
  std::size_t edge_count() const { return edges_.size(); }

  const std::vector<std::pair<NodeId, double>>& out_neighbors(NodeId u) const {
    return out_[u];
  }
  const std::vector<std::pair<NodeId, double>>& in_neighbors(NodeId u) const {
    return directed_ ? in_[u] : out_[u];
  }
  /// Neighbors in the underlying undirected graph (out ∪ in, deduplicated).
  const std::vector<std::pair<NodeId, double>>& undirected_neighbors(NodeId u) const {
    return directed_ ? both_[u] : out_[u];
  }

  std::size_t degree(NodeId u) const { return undirected_neighbors(u).size(); }

  /// True when the directed edge (u,v) exists; for undirected graphs the
  /// orientation is ignored.
  bool has_edge(NodeId u, NodeId v) const;
  /// Weight of edge (u,v); nullopt when absent.
  std::optional<double> edge_weight(NodeId u, NodeId v) const;

  /// Original label for an internal node id (identity when loaded densely).
  const std::string& original_id(NodeId u) const { return original_ids_[u]; }

  void save_edge_list(std::ostream& os) const;
  void save_id_mapping(std::ostream& os) const;

 private:
  NodeId node_count_;
  bool directed_;
  bool weighted_;
  std::vector<Edge> edges_;
  std::vector<std::vector<std::pair<NodeId, double>>> out_;
  std::vector<std::vector<std::pair<NodeId, double>>> in_;
  std::vector<std::vector<std::pair<NodeId, double>>> both_;
  std::unordered_map<std::uint64_t, double> edge_index_;
  std::vector<std::string> original_ids_;
};

struct LabeledPairSet {
  std::vector<std::pair<NodeId, NodeId>> pairs;
  std::vector<double> labels;  // {0,1} for link prediction, [-1,1] for WSN

  std::size_t size() const { return pairs.size(); }
};

struct SplitResult {
  Graph train_graph;
  LabeledPairSet train_set;
  LabeledPairSet test_set;
  std::uint64_t seed = 0;
};

enum class Task { link_prediction, wsn_regression };

/// Parses "src dst [weight]" lines; '#' lines are comments. Node ids are
/// re-indexed densely in first-appearance order; duplicate edges collapse
/// to the last occurrence.
Graph load_edge_list(std::istream& in, const LoadOptions& opt);
Graph load_edge_list_file(const std::string& path, const LoadOptions& opt);

/// Divides every weight by the max absolute weight, mapping onto [-1,1].
Graph normalize_weights(const Graph& g);

/// Removes round(test_fraction*|E|) random edges into the test set. For link
/// prediction both sets get an equal number of sampled negatives; for WSN the
/// sets hold only true edges labeled by their weights.
SplitResult split_edges(const Graph& g, double test_fraction,
                        std::uint64_t seed, Task task);

/// Uniformly samples distinct node pairs with no edge in g and not in
/// exclude. Rejection sampling with an exhaustive fallback on dense graphs.
std::vector<std::pair<NodeId, NodeId>> sample_negative_pairs(
    const Graph& g, std::size_t count, std::uint64_t seed,
    const std::unordered_set<std::uint64_t>& exclude = {});

}  // namespace leap::graph
