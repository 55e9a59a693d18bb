#include "leap/paths.hpp"

#include <algorithm>
#include <deque>
#include <ostream>
#include <random>

namespace leap::paths {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Hop distances from target up to max_depth in the traversal graph; used to
// prune DFS branches that cannot reach the target in the remaining steps.
std::vector<int> bfs_distances(const Graph& g, NodeId target, int max_depth,
                               bool respect_direction) {
  std::vector<int> dist(g.node_count(), -1);
  std::deque<NodeId> q;
  dist[target] = 0;
  q.push_back(target);
  while (!q.empty()) {
    NodeId x = q.front();
    q.pop_front();
    if (dist[x] == max_depth) continue;
    // Walking backwards from the target, so incoming edges when directed.
    const auto& nb = respect_direction ? g.in_neighbors(x)
                                       : g.undirected_neighbors(x);
    for (auto& [y, w] : nb) {
      if (dist[y] < 0) {
        dist[y] = dist[x] + 1;
        q.push_back(y);
      }
    }
  }
  return dist;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b,
                          std::uint64_t c) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ a);
  h = splitmix64(h ^ b);
  h = splitmix64(h ^ c);
  return h;
}

PathSet enumerate_paths(const Graph& g, NodeId u, NodeId v, std::size_t l,
                        const AssemblerConfig& cfg) {
  if (u == v) throw std::invalid_argument("enumerate_paths: u == v");
  if (u < 0 || v < 0 || u >= g.node_count() || v >= g.node_count())
    throw std::invalid_argument("enumerate_paths: node id out of range");

  PathSet out;
  out.length = l;
  if (l < 1) return out;

  std::mt19937_64 rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(u),
                                  static_cast<std::uint64_t>(v), l));
  auto dist_to_v = bfs_distances(g, v, static_cast<int>(l), cfg.respect_direction);

  std::vector<bool> on_path(g.node_count(), false);
  std::vector<NodeId> current;
  current.reserve(l + 1);
  current.push_back(u);
  on_path[u] = true;
  std::size_t seen = 0;  // total number of valid paths encountered

  auto offer = [&](const std::vector<NodeId>& nodes) {
    if (out.paths.size() < cfg.cap) {
      out.paths.push_back(Path{nodes});
    } else {
      // reservoir replacement keeps the sample uniform
      std::uniform_int_distribution<std::size_t> d(0, seen);
      std::size_t j = d(rng);
      if (j < cfg.cap) out.paths[j] = Path{nodes};
    }
    ++seen;
  };

  auto dfs = [&](auto&& self, NodeId x, std::size_t depth) -> void {
    if (depth == l) {
      if (x == v) offer(current);
      return;
    }
    std::size_t remaining = l - depth;
    const auto& nb = cfg.respect_direction ? g.out_neighbors(x)
                                           : g.undirected_neighbors(x);
    for (auto& [y, w] : nb) {
      if (on_path[y]) continue;
      // The direct edge (u,v) is skipped as a traversal edge anywhere on
      // the path when excluded, not just as the l=1 path.
      if (cfg.exclude_direct_edge &&
          ((x == u && y == v) ||
           (!cfg.respect_direction && x == v && y == u)))
        continue;
      if (dist_to_v[y] < 0 ||
          static_cast<std::size_t>(dist_to_v[y]) > remaining - 1)
        continue;
      if (y == v && remaining > 1) continue;  // simple path: v only at the end
      current.push_back(y);
      on_path[y] = true;
      self(self, y, depth + 1);
      on_path[y] = false;
      current.pop_back();
    }
  };
  dfs(dfs, u, 0);

  out.truncated = seen > cfg.cap;
  return out;
}

std::map<std::size_t, PathSet> assemble(const Graph& g, NodeId u, NodeId v,
                                        const AssemblerConfig& cfg) {
  std::map<std::size_t, PathSet> out;
  for (std::size_t l : cfg.lengths) {
    if (l < 2) throw std::invalid_argument("assemble: lengths must be >= 2");
    out[l] = enumerate_paths(g, u, v, l, cfg);
  }
  return out;
}

PathSet order_paths(const PathSet& ps, const Graph& g) {
  PathSet out = ps;
  auto weight_sum = [&](const Path& p) {
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < p.nodes.size(); ++i)
      s += g.edge_weight(p.nodes[i], p.nodes[i + 1]).value_or(0.0);
    return s;
  };
  if (g.weighted()) {
    std::stable_sort(out.paths.begin(), out.paths.end(),
                     [&](const Path& a, const Path& b) {
                       double wa = weight_sum(a), wb = weight_sum(b);
                       if (wa != wb) return wa > wb;
                       return a.nodes < b.nodes;
                     });
  } else {
    std::stable_sort(out.paths.begin(), out.paths.end(),
                     [](const Path& a, const Path& b) { return a.nodes < b.nodes; });
  }
  return out;
}

void dump_paths(std::ostream& os, const std::map<std::size_t, PathSet>& sets) {
  for (auto& [l, ps] : sets) {
    os << "# length " << l << (ps.truncated ? " (truncated)" : "") << '\n';
    for (const Path& p : ps.paths) {
      for (std::size_t i = 0; i < p.nodes.size(); ++i) {
        if (i) os << ' ';
        os << p.nodes[i];
      }
      os << '\n';
    }
  }
}

}  // namespace leap::paths
