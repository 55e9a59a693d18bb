#pragma once

#include <iosfwd>
#include <vector>

#include "leap/graph.hpp"

namespace leap::baselines {

using graph::Graph;
using graph::NodeId;

struct ScoredPairs {
  std::vector<std::pair<NodeId, NodeId>> pairs;
  std::vector<double> scores;
  std::vector<double> labels;

  void export_csv(std::ostream& os) const;
};

/// Sum over common neighbors w of 1/ln(deg w). Common neighbors always have
/// degree >= 2, so ln never degenerates.
double adamic_adar(const Graph& g, NodeId u, NodeId v);

/// Truncated Katz index: sum_{l=1..l_max} beta^l * (#walks of length l from
/// u to v), via repeated sparse adjacency application.
double katz(const Graph& g, NodeId u, NodeId v, double beta = 0.005,
            std::size_t l_max = 5);

struct PageRankOptions {
  double damping = 0.85;
  double tol = 1e-10;
  std::size_t max_iter = 1000;
};

/// Power iteration; dangling mass is redistributed uniformly. Scores sum to 1.
std::vector<double> pagerank(const Graph& g, const PageRankOptions& opt = {});

/// WSN score-difference convention: s_u - s_v (sign choice documented in the
/// README), rescaled by the max absolute difference over the evaluated pairs.
std::vector<double> pagerank_weight_predictions(
    const Graph& g, const std::vector<std::pair<NodeId, NodeId>>& pairs,
    const PageRankOptions& opt = {});

/// Reciprocal edge weight w(v,u), or 0 when the reverse edge is absent.
double reciprocal(const Graph& g, NodeId u, NodeId v);

/// Rank-based (Mann-Whitney) AUC with ties counted 0.5.
double auc(const std::vector<double>& scores, const std::vector<double>& labels);

double rmse(const std::vector<double>& pred, const std::vector<double>& truth);
double pcc(const std::vector<double>& pred, const std::vector<double>& truth);

}  // namespace leap::baselines
