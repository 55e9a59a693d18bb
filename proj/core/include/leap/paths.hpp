#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <vector>

#include "leap/graph.hpp"

namespace leap::paths {

using graph::Graph;
using graph::NodeId;

/// Simple path u_0..u_l; length is the edge count l.
struct Path {
  std::vector<NodeId> nodes;
  std::size_t length() const { return nodes.empty() ? 0 : nodes.size() - 1; }
};

struct PathSet {
  std::size_t length = 0;
  std::vector<Path> paths;
  bool truncated = false;
};

struct AssemblerConfig {
  std::vector<std::size_t> lengths = {3, 4};
  std::size_t cap = 50;
  std::uint64_t seed = 0;
  bool exclude_direct_edge = false;
  bool respect_direction = false;
};

/// All simple u->v paths of exactly l edges, or a uniform seeded sample of
/// `cap` of them (reservoir) when more exist. Deterministic for a fixed seed.
PathSet enumerate_paths(const Graph& g, NodeId u, NodeId v, std::size_t l,
                        const AssemblerConfig& cfg);

/// One PathSet per configured length, in configuration order. The per-length
/// RNG stream is derived from (seed, u, v, l) so calls are order independent.
std::map<std::size_t, PathSet> assemble(const Graph& g, NodeId u, NodeId v,
                                        const AssemblerConfig& cfg);

/// Canonical path order: descending total edge weight on weighted graphs
/// (ties lexicographic), plain lexicographic otherwise.
PathSet order_paths(const PathSet& ps, const Graph& g);

/// Debug dump: one path per line, node ids space separated.
void dump_paths(std::ostream& os, const std::map<std::size_t, PathSet>& sets);

/// Mixes a base seed with the call coordinates (splitmix64 over the words).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b,
                          std::uint64_t c);

}  // namespace leap::paths
