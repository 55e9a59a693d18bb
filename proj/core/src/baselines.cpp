#include "leap/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace leap::baselines {

void ScoredPairs::export_csv(std::ostream& os) const {
  os << "u,v,score,label\n";
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    os << pairs[i].first << ',' << pairs[i].second << ',' << scores[i] << ','
       << (i < labels.size() ? labels[i] : 0.0) << '\n';
  }
}

double adamic_adar(const Graph& g, NodeId u, NodeId v) {
  const auto& nu = g.undirected_neighbors(u);
  const auto& nv = g.undirected_neighbors(v);
  double score = 0.0;
  // neighbor lists are sorted; intersect with two pointers
  std::size_t i = 0, j = 0;
  while (i < nu.size() && j < nv.size()) {
    if (nu[i].first < nv[j].first) {
      ++i;
    } else if (nu[i].first > nv[j].first) {
      ++j;
    } else {
      double deg = static_cast<double>(g.degree(nu[i].first));
      score += 1.0 / std::log(deg);
      ++i;
      ++j;
    }
  }
  return score;
}

double katz(const Graph& g, NodeId u, NodeId v, double beta, std::size_t l_max) {
  if (l_max < 1) throw std::invalid_argument("katz: l_max must be >= 1");
  // walk counts from u of the current length
  std::vector<double> cur(g.node_count(), 0.0), next(g.node_count(), 0.0);
  cur[u] = 1.0;
  double score = 0.0;
  double beta_pow = 1.0;
  for (std::size_t l = 1; l <= l_max; ++l) {
    std::fill(next.begin(), next.end(), 0.0);
    for (NodeId x = 0; x < g.node_count(); ++x) {
      if (cur[x] == 0.0) continue;
      for (auto& [y, w] : g.undirected_neighbors(x)) next[y] += cur[x];
    }
    std::swap(cur, next);
    beta_pow *= beta;
    score += beta_pow * cur[v];
  }
  return score;
}

std::vector<double> pagerank(const Graph& g, const PageRankOptions& opt) {
  std::size_t n = g.node_count();
  if (n == 0) return {};
  std::vector<double> rank(n, 1.0 / static_cast<double>(n)), next(n, 0.0);
  for (std::size_t iter = 0; iter < opt.max_iter; ++iter) {
    std::fill(next.begin(), next.end(), 0.0);
    double dangling = 0.0;
    for (NodeId x = 0; x < g.node_count(); ++x) {
      const auto& nb = g.out_neighbors(x);
      if (nb.empty()) {
        dangling += rank[x];
        continue;
      }
      double share = rank[x] / static_cast<double>(nb.size());
      for (auto& [y, w] : nb) next[y] += share;
    }
    double base = (1.0 - opt.damping) / static_cast<double>(n) +
                  opt.damping * dangling / static_cast<double>(n);
    double delta = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      next[i] = base + opt.damping * next[i];
      delta += std::abs(next[i] - rank[i]);
    }
    rank.swap(next);
    if (delta < opt.tol) return rank;
  }
  throw std::runtime_error("pagerank: no convergence within max_iter");
}

std::vector<double> pagerank_weight_predictions(
    const Graph& g, const std::vector<std::pair<NodeId, NodeId>>& pairs,
    const PageRankOptions& opt) {
  auto scores = pagerank(g, opt);
  std::vector<double> out;
  out.reserve(pairs.size());
  double max_abs = 0.0;
  for (auto& [u, v] : pairs) {
    double d = scores[u] - scores[v];
    out.push_back(d);
    max_abs = std::max(max_abs, std::abs(d));
  }
  if (max_abs > 0.0)
    for (double& d : out) d /= max_abs;
  return out;
}

double reciprocal(const Graph& g, NodeId u, NodeId v) {
  return g.edge_weight(v, u).value_or(0.0);
}

double auc(const std::vector<double>& scores, const std::vector<double>& labels) {
  if (scores.size() != labels.size())
    throw std::invalid_argument("auc: length mismatch");
  std::size_t n = scores.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // midranks over tied score groups
  std::vector<double> rank(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && scores[idx[j + 1]] == scores[idx[i]]) ++j;
    double mid = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) rank[idx[k]] = mid;
    i = j + 1;
  }
  double pos = 0.0, rank_sum = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    if (labels[k] == 1.0) {
      pos += 1.0;
      rank_sum += rank[k];
    } else if (labels[k] != 0.0) {
      throw std::invalid_argument("auc: labels must be 0 or 1");
    }
  }
  double neg = static_cast<double>(n) - pos;
  if (pos == 0.0 || neg == 0.0)
    throw std::invalid_argument("auc: both classes required");
  return (rank_sum - pos * (pos + 1.0) / 2.0) / (pos * neg);
}

double rmse(const std::vector<double>& pred, const std::vector<double>& truth) {
  if (pred.size() != truth.size() || pred.empty())
    throw std::invalid_argument("rmse: length mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    double d = pred[i] - truth[i];
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(pred.size()));
}

double pcc(const std::vector<double>& pred, const std::vector<double>& truth) {
  if (pred.size() != truth.size() || pred.size() < 2)
    throw std::invalid_argument("pcc: need two equal-length vectors");
  double n = static_cast<double>(pred.size());
  double mp = std::accumulate(pred.begin(), pred.end(), 0.0) / n;
  double mt = std::accumulate(truth.begin(), truth.end(), 0.0) / n;
  double sp = 0.0, st = 0.0, cov = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    double dp = pred[i] - mp, dt = truth[i] - mt;
    sp += dp * dp;
    st += dt * dt;
    cov += dp * dt;
  }
  if (sp == 0.0 || st == 0.0)
    throw std::invalid_argument("pcc: zero variance input");
  return cov / std::sqrt(sp * st);
}

}  // namespace leap::baselines
