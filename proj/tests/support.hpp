#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "leap/graph.hpp"
#include "leap/paths.hpp"
#include "leap/tensor.hpp"

namespace leap::test {

using tensor::Tape;
using tensor::Tensor;
using tensor::Var;

inline Tensor random_tensor(std::vector<std::size_t> shape, std::mt19937_64& rng,
                            double scale = 0.5) {
  std::uniform_real_distribution<double> dist(-scale, scale);
  Tensor t(std::move(shape));
  for (double& v : t.data) v = dist(rng);
  return t;
}

/// Scalar forward function over a fixed list of parameter tensors. Called
/// repeatedly with perturbed copies for the finite-difference oracle.
using ForwardFn = std::function<double(const std::vector<Tensor>&)>;

/// Analytic-gradient provider: returns one gradient tensor per parameter.
using GradFn = std::function<std::vector<Tensor>(const std::vector<Tensor>&)>;

/// Central finite differences (h = 1e-5) against analytic gradients;
/// returns the max relative error over every parameter entry.
inline double fd_max_rel_err(std::vector<Tensor> params, const ForwardFn& f,
                             const GradFn& grad, double h = 1e-5) {
  auto analytic = grad(params);
  double worst = 0.0;
  for (std::size_t p = 0; p < params.size(); ++p) {
    for (std::size_t i = 0; i < params[p].size(); ++i) {
      double saved = params[p].data[i];
      params[p].data[i] = saved + h;
      double up = f(params);
      params[p].data[i] = saved - h;
      double down = f(params);
      params[p].data[i] = saved;
      double fd = (up - down) / (2.0 * h);
      double ad = analytic[p].data[i];
      double denom = std::max({std::abs(fd), std::abs(ad), 1e-6});
      worst = std::max(worst, std::abs(fd - ad) / denom);
    }
  }
  return worst;
}

/// Convenience: wraps a tape-building function (params arrive as leaf vars,
/// result must be the scalar loss var) into the two callbacks above.
using TapeFn = std::function<Var(Tape&, const std::vector<Var>&)>;

inline double fd_check(const std::vector<Tensor>& params, const TapeFn& build,
                       double h = 1e-5) {
  ForwardFn f = [&](const std::vector<Tensor>& ps) {
    Tape tape;
    std::vector<Var> leaves;
    for (const Tensor& t : ps) leaves.push_back(tape.leaf(t, true));
    return tape.value(build(tape, leaves)).data[0];
  };
  GradFn g = [&](const std::vector<Tensor>& ps) {
    Tape tape;
    std::vector<Var> leaves;
    for (const Tensor& t : ps) leaves.push_back(tape.leaf(t, true));
    Var loss = build(tape, leaves);
    tape.backward(loss);
    std::vector<Tensor> out;
    for (Var v : leaves) out.push_back(tape.grad(v));
    return out;
  };
  return fd_max_rel_err(params, f, g, h);
}

// ---- toy graphs ----

inline graph::Graph make_graph(graph::NodeId n,
                               std::vector<graph::Edge> edges,
                               bool directed = false, bool weighted = false) {
  return graph::Graph(n, directed, weighted, std::move(edges));
}

inline graph::Graph triangle() {
  return make_graph(3, {{0, 1}, {1, 2}, {0, 2}});
}

inline graph::Graph complete(graph::NodeId n) {
  std::vector<graph::Edge> es;
  for (graph::NodeId i = 0; i < n; ++i)
    for (graph::NodeId j = i + 1; j < n; ++j) es.push_back({i, j});
  return make_graph(n, std::move(es));
}

/// Two dense clusters with sparse inter-cluster links; intra-cluster pairs
/// have many short paths, cross pairs few.
inline graph::Graph two_clusters(graph::NodeId per_cluster = 15,
                                 std::uint64_t seed = 7) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  std::vector<graph::Edge> es;
  graph::NodeId n = 2 * per_cluster;
  for (graph::NodeId i = 0; i < n; ++i) {
    for (graph::NodeId j = i + 1; j < n; ++j) {
      bool same = (i < per_cluster) == (j < per_cluster);
      double p = same ? 0.6 : 0.05;
      if (dist(rng) < p) es.push_back({i, j});
    }
  }
  return make_graph(n, std::move(es));
}

inline graph::Graph random_graph(graph::NodeId n, double p,
                                 std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  std::vector<graph::Edge> es;
  for (graph::NodeId i = 0; i < n; ++i)
    for (graph::NodeId j = i + 1; j < n; ++j)
      if (dist(rng) < p) es.push_back({i, j});
  return make_graph(n, std::move(es));
}

/// Brute-force oracle: all simple u->v paths of exactly l edges, found by
/// trying every sequence of intermediate nodes. Exponential; small n only.
inline std::vector<std::vector<graph::NodeId>> brute_force_paths(
    const graph::Graph& g, graph::NodeId u, graph::NodeId v, std::size_t l,
    bool exclude_direct = false) {
  std::vector<std::vector<graph::NodeId>> found;
  std::vector<graph::NodeId> seq{u};
  auto adjacent = [&](graph::NodeId a, graph::NodeId b) {
    if (exclude_direct && ((a == u && b == v) || (a == v && b == u)))
      return false;
    return g.has_edge(a, b) || g.has_edge(b, a);
  };
  std::function<void()> extend = [&]() {
    if (seq.size() == l + 1) {
      if (seq.back() == v) found.push_back(seq);
      return;
    }
    for (graph::NodeId x = 0; x < g.node_count(); ++x) {
      if (std::find(seq.begin(), seq.end(), x) != seq.end()) continue;
      if (!adjacent(seq.back(), x)) continue;
      if (x == v && seq.size() != l) continue;
      seq.push_back(x);
      extend();
      seq.pop_back();
    }
  };
  extend();
  std::sort(found.begin(), found.end());
  return found;
}

}  // namespace leap::test
