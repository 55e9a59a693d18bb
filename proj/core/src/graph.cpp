#include "leap/graph.hpp"

#include <algorithm>
#include <cmath>
#include <charconv>
#include <fstream>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace leap::graph {

namespace {

std::vector<std::string> tokenize(const std::string& line, char delim) {
  std::vector<std::string> out;
  if (delim == ' ') {
    std::istringstream ss(line);
    std::string tok;
    while (ss >> tok) out.push_back(tok);
  } else {
    std::string tok;
    std::istringstream ss(line);
    while (std::getline(ss, tok, delim)) {
      // trim surrounding whitespace
      auto b = tok.find_first_not_of(" \t\r");
      auto e = tok.find_last_not_of(" \t\r");
      if (b == std::string::npos) continue;
      out.push_back(tok.substr(b, e - b + 1));
    }
  }
  return out;
}

std::string format_weight(double w) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", w);
  return buf;
}

}  // namespace

Graph::Graph(NodeId node_count, bool directed, bool weighted,
             std::vector<Edge> edges, std::vector<std::string> original_ids)
    : node_count_(node_count),
      directed_(directed),
      weighted_(weighted),
      edges_(std::move(edges)),
      original_ids_(std::move(original_ids)) {
  if (original_ids_.empty()) {
    original_ids_.reserve(node_count_);
    for (NodeId i = 0; i < node_count_; ++i)
      original_ids_.push_back(std::to_string(i));
  }
  out_.resize(node_count_);
  if (directed_) {
    in_.resize(node_count_);
    both_.resize(node_count_);
  }
  for (Edge& e : edges_) {
    if (e.u < 0 || e.u >= node_count_ || e.v < 0 || e.v >= node_count_)
      throw std::invalid_argument("graph: edge endpoint out of range");
    if (e.u == e.v) throw std::invalid_argument("graph: self-loop rejected");
    if (!directed_ && e.u > e.v) std::swap(e.u, e.v);
  }
  for (const Edge& e : edges_) {
    std::uint64_t key = directed_ ? pair_key(e.u, e.v)
                                  : pair_key(std::min(e.u, e.v), std::max(e.u, e.v));
    if (edge_index_.count(key))
      throw std::invalid_argument("graph: duplicate edge");
    edge_index_.emplace(key, e.w);
    out_[e.u].emplace_back(e.v, e.w);
    if (directed_) {
      in_[e.v].emplace_back(e.u, e.w);
    } else {
      out_[e.v].emplace_back(e.u, e.w);
    }
  }
  if (directed_) {
    for (NodeId u = 0; u < node_count_; ++u) {
      auto& b = both_[u];
      b = out_[u];
      for (auto& [v, w] : in_[u]) {
        bool dup = false;
        for (auto& [v2, w2] : out_[u])
          if (v2 == v) { dup = true; break; }
        if (!dup) b.emplace_back(v, w);
      }
      std::sort(b.begin(), b.end());
    }
  }
  for (auto& nb : out_) std::sort(nb.begin(), nb.end());
  for (auto& nb : in_) std::sort(nb.begin(), nb.end());
}

bool Graph::has_edge(NodeId u, NodeId v) const {
  std::uint64_t key = directed_ ? pair_key(u, v)
                                : pair_key(std::min(u, v), std::max(u, v));
  return edge_index_.count(key) > 0;
}

std::optional<double> Graph::edge_weight(NodeId u, NodeId v) const {
  std::uint64_t key = directed_ ? pair_key(u, v)
                                : pair_key(std::min(u, v), std::max(u, v));
  auto it = edge_index_.find(key);
  if (it == edge_index_.end()) return std::nullopt;
  return it->second;
}

void Graph::save_edge_list(std::ostream& os) const {
  for (const Edge& e : edges_) {
    os << original_ids_[e.u] << ' ' << original_ids_[e.v];
    if (weighted_) os << ' ' << format_weight(e.w);
    os << '\n';
  }
}

void Graph::save_id_mapping(std::ostream& os) const {
  for (NodeId i = 0; i < node_count_; ++i)
    os << original_ids_[i] << ' ' << i << '\n';
}

Graph load_edge_list(std::istream& in, const LoadOptions& opt) {
  std::unordered_map<std::string, NodeId> id_map;
  std::vector<std::string> original_ids;
  NodeId max_numeric = -1;
  auto intern = [&](const std::string& s) -> NodeId {
    if (opt.numeric_ids) {
      std::size_t pos = 0;
      long long id = std::stoll(s, &pos);
      if (pos != s.size() || id < 0)
        throw std::runtime_error("numeric id expected, got '" + s + "'");
      max_numeric = std::max(max_numeric, static_cast<NodeId>(id));
      return static_cast<NodeId>(id);
    }
    auto it = id_map.find(s);
    if (it != id_map.end()) return it->second;
    NodeId id = static_cast<NodeId>(original_ids.size());
    id_map.emplace(s, id);
    original_ids.push_back(s);
    return id;
  };

  // key -> position in edges; duplicates collapse to the last weight
  std::unordered_map<std::uint64_t, std::size_t> seen;
  std::vector<Edge> edges;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    auto toks = tokenize(line, opt.delimiter);
    if (toks.size() < 2 || toks.size() > 3 || (toks.size() == 3 && !opt.weighted))
      throw std::runtime_error("malformed edge at line " + std::to_string(line_no));
    double w = 1.0;
    if (opt.weighted) {
      if (toks.size() != 3)
        throw std::runtime_error("missing weight at line " + std::to_string(line_no));
      try {
        std::size_t pos = 0;
        w = std::stod(toks[2], &pos);
        if (pos != toks[2].size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw std::runtime_error("bad weight at line " + std::to_string(line_no));
      }
    }
    NodeId u = intern(toks[0]);
    NodeId v = intern(toks[1]);
    if (u == v)
      throw std::runtime_error("self-loop at line " + std::to_string(line_no));
    NodeId a = u, b = v;
    if (!opt.directed && a > b) std::swap(a, b);
    std::uint64_t key = pair_key(a, b);
    auto it = seen.find(key);
    if (it != seen.end()) {
      edges[it->second].w = w;  // last occurrence wins
    } else {
      seen.emplace(key, edges.size());
      edges.push_back({a, b, w});
    }
  }
  NodeId n = opt.numeric_ids
                 ? std::max(max_numeric + 1, opt.min_node_count)
                 : static_cast<NodeId>(original_ids.size());
  return Graph(n, opt.directed, opt.weighted, std::move(edges),
               std::move(original_ids));
}

Graph load_edge_list_file(const std::string& path, const LoadOptions& opt) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open edge list: " + path);
  return load_edge_list(in, opt);
}

Graph normalize_weights(const Graph& g) {
  if (!g.weighted())
    throw std::invalid_argument("normalize_weights: graph is unweighted");
  double max_abs = 0.0;
  for (const Edge& e : g.edges()) max_abs = std::max(max_abs, std::abs(e.w));
  if (max_abs == 0.0)
    throw std::invalid_argument("normalize_weights: all weights are zero");
  std::vector<Edge> edges = g.edges();
  for (Edge& e : edges) e.w /= max_abs;
  std::vector<std::string> ids;
  for (NodeId i = 0; i < g.node_count(); ++i) ids.push_back(g.original_id(i));
  return Graph(g.node_count(), g.directed(), g.weighted(), std::move(edges),
               std::move(ids));
}

std::vector<std::pair<NodeId, NodeId>> sample_negative_pairs(
    const Graph& g, std::size_t count, std::uint64_t seed,
    const std::unordered_set<std::uint64_t>& exclude) {
  if (count == 0) return {};
  NodeId n = g.node_count();
  bool directed = g.directed();
  auto canonical = [directed](NodeId a, NodeId b) {
    if (!directed && a > b) std::swap(a, b);
    return pair_key(a, b);
  };

  std::size_t total_pairs = directed
      ? static_cast<std::size_t>(n) * (n - 1)
      : static_cast<std::size_t>(n) * (n - 1) / 2;
  std::size_t excluded = 0;
  for (std::uint64_t k : exclude) {
    NodeId a = static_cast<NodeId>(k >> 32), b = static_cast<NodeId>(k & 0xffffffffu);
    if (!g.has_edge(a, b)) ++excluded;
  }
  if (total_pairs < g.edge_count() + excluded ||
      total_pairs - g.edge_count() - excluded < count)
    throw std::runtime_error("sample_negative_pairs: insufficient non-edges");

  std::mt19937_64 rng(seed);
  std::unordered_set<std::uint64_t> chosen;
  std::vector<std::pair<NodeId, NodeId>> out;
  std::uniform_int_distribution<NodeId> dist(0, n - 1);
  std::size_t attempts = 0, max_attempts = 1000 * count;
  while (out.size() < count && attempts < max_attempts) {
    ++attempts;
    NodeId a = dist(rng), b = dist(rng);
    if (a == b) continue;
    if (!directed && a > b) std::swap(a, b);
    std::uint64_t key = pair_key(a, b);
    if (chosen.count(key) || exclude.count(key) || g.has_edge(a, b)) continue;
    chosen.insert(key);
    out.emplace_back(a, b);
  }
  if (out.size() < count) {
    // Dense graph: enumerate every remaining non-edge and sample from those.
    std::vector<std::pair<NodeId, NodeId>> rest;
    for (NodeId a = 0; a < n; ++a) {
      for (NodeId b = directed ? 0 : a + 1; b < n; ++b) {
        if (a == b) continue;
        std::uint64_t key = canonical(a, b);
        if (chosen.count(key) || exclude.count(key) || g.has_edge(a, b)) continue;
        rest.emplace_back(a, b);
      }
    }
    std::shuffle(rest.begin(), rest.end(), rng);
    for (auto& p : rest) {
      if (out.size() == count) break;
      out.push_back(p);
    }
    if (out.size() < count)
      throw std::runtime_error("sample_negative_pairs: insufficient non-edges");
  }
  return out;
}

SplitResult split_edges(const Graph& g, double test_fraction,
                        std::uint64_t seed, Task task) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw std::invalid_argument("split_edges: fraction must be in (0,1)");
  std::size_t m = g.edge_count();
  std::size_t test_count =
      static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(m)));
  if (test_count >= m)
    throw std::runtime_error("split_edges: no training edges would remain");

  std::vector<std::size_t> order(m);
  for (std::size_t i = 0; i < m; ++i) order[i] = i;
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<Edge> train_edges, test_edges;
  train_edges.reserve(m - test_count);
  test_edges.reserve(test_count);
  for (std::size_t i = 0; i < m; ++i) {
    const Edge& e = g.edges()[order[i]];
    if (i < test_count)
      test_edges.push_back(e);
    else
      train_edges.push_back(e);
  }

  std::vector<std::string> ids;
  for (NodeId i = 0; i < g.node_count(); ++i) ids.push_back(g.original_id(i));
  Graph train_graph(g.node_count(), g.directed(), g.weighted(),
                    train_edges, std::move(ids));

  LabeledPairSet train_set, test_set;
  if (task == Task::wsn_regression) {
    for (const Edge& e : train_edges) {
      train_set.pairs.emplace_back(e.u, e.v);
      train_set.labels.push_back(e.w);
    }
    for (const Edge& e : test_edges) {
      test_set.pairs.emplace_back(e.u, e.v);
      test_set.labels.push_back(e.w);
    }
  } else {
    for (const Edge& e : train_edges) {
      train_set.pairs.emplace_back(e.u, e.v);
      train_set.labels.push_back(1.0);
    }
    for (const Edge& e : test_edges) {
      test_set.pairs.emplace_back(e.u, e.v);
      test_set.labels.push_back(1.0);
    }
    // One draw covers both splits so train and test negatives are disjoint.
    std::size_t n_train = train_edges.size(), n_test = test_edges.size();
    auto negatives =
        sample_negative_pairs(g, n_train + n_test, rng(), {});
    for (std::size_t i = 0; i < negatives.size(); ++i) {
      LabeledPairSet& dst = (i < n_train) ? train_set : test_set;
      dst.pairs.push_back(negatives[i]);
      dst.labels.push_back(0.0);
    }
  }
  return SplitResult{std::move(train_graph), std::move(train_set),
                     std::move(test_set), seed};
}

}  // namespace leap::graph
