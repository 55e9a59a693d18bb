#include "leap/experiment.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "leap/baselines.hpp"
#include "leap/paths.hpp"

namespace leap::experiment {

Graph load_dataset(const ExperimentConfig& cfg) {
  graph::LoadOptions opt;
  opt.directed = cfg.directed;
  opt.weighted = cfg.weighted;
  opt.delimiter = cfg.delimiter;
  Graph g = graph::load_edge_list_file(cfg.dataset, opt);
  if (cfg.task == graph::Task::wsn_regression) {
    if (!g.weighted())
      throw std::runtime_error("wsn task requires a weighted dataset");
    return graph::normalize_weights(g);
  }
  return g;
}

std::vector<double> predict_pairs(const model::Model& m, const Graph& g_train,
                                  const LabeledPairSet& pairs,
                                  std::uint64_t seed) {
  std::vector<model::PathSetMap> sets;
  sets.reserve(pairs.size());
  for (auto& [u, v] : pairs.pairs)
    sets.push_back(m.assemble_pair(g_train, u, v, seed));
  std::vector<const model::PathSetMap*> ptrs;
  for (auto& s : sets) ptrs.push_back(&s);
  return m.predict_batch(g_train, pairs.pairs, ptrs);
}

SeedResult run_single(const ExperimentConfig& cfg, const Graph& g,
                      std::uint64_t seed, model::Model* trained,
                      model::TrainHistory* history) {
  SeedResult r;
  r.seed = seed;
  auto split = graph::split_edges(g, cfg.test_fraction, seed, cfg.task);
  model::Model m = model::Model::create(cfg, g, seed);
  auto hist = m.train(split.train_graph, split.train_set, nullptr, seed);
  r.epochs_run = hist.epochs.size();
  r.best_val_loss = hist.best_val_loss;

  auto preds = predict_pairs(m, split.train_graph, split.test_set, seed);
  if (cfg.task == graph::Task::link_prediction) {
    r.auc = baselines::auc(preds, split.test_set.labels);
  } else {
    r.rmse = baselines::rmse(preds, split.test_set.labels);
    r.pcc = baselines::pcc(preds, split.test_set.labels);
  }
  if (trained) *trained = std::move(m);
  if (history) *history = std::move(hist);
  return r;
}

RunResult run(const ExperimentConfig& cfg) {
  Graph g = load_dataset(cfg);
  RunResult out;
  for (std::uint64_t seed : cfg.seeds)
    out.seeds.push_back(run_single(cfg, g, seed));
  double sum = 0.0;
  for (auto& s : out.seeds)
    sum += (cfg.task == graph::Task::link_prediction) ? s.auc : s.rmse;
  out.mean = sum / static_cast<double>(out.seeds.size());
  double var = 0.0;
  for (auto& s : out.seeds) {
    double x = (cfg.task == graph::Task::link_prediction) ? s.auc : s.rmse;
    var += (x - out.mean) * (x - out.mean);
  }
  out.stddev = out.seeds.size() > 1
                   ? std::sqrt(var / static_cast<double>(out.seeds.size() - 1))
                   : 0.0;
  return out;
}

std::vector<std::string> lp_baseline_methods() {
  return {"adamic_adar", "katz", "pagerank"};
}

std::vector<std::string> wsn_baseline_methods() {
  return {"reciprocal", "pagerank"};
}

double baseline_lp_auc(const Graph& g, const std::string& method,
                       double test_fraction, std::uint64_t seed) {
  auto split =
      graph::split_edges(g, test_fraction, seed, graph::Task::link_prediction);
  const Graph& tg = split.train_graph;
  std::vector<double> scores;
  scores.reserve(split.test_set.size());
  if (method == "adamic_adar") {
    for (auto& [u, v] : split.test_set.pairs)
      scores.push_back(baselines::adamic_adar(tg, u, v));
  } else if (method == "katz") {
    for (auto& [u, v] : split.test_set.pairs)
      scores.push_back(baselines::katz(tg, u, v));
  } else if (method == "pagerank") {
    auto pr = baselines::pagerank(tg);
    for (auto& [u, v] : split.test_set.pairs)
      scores.push_back(pr[u] * pr[v]);
  } else {
    throw std::invalid_argument("unknown lp baseline: " + method);
  }
  return baselines::auc(scores, split.test_set.labels);
}

std::pair<double, double> baseline_wsn(const Graph& g,
                                       const std::string& method, double delta,
                                       std::uint64_t seed) {
  auto split = graph::split_edges(g, delta, seed, graph::Task::wsn_regression);
  const Graph& tg = split.train_graph;
  std::vector<double> preds;
  preds.reserve(split.test_set.size());
  if (method == "reciprocal") {
    for (auto& [u, v] : split.test_set.pairs)
      preds.push_back(baselines::reciprocal(tg, u, v));
  } else if (method == "pagerank") {
    preds = baselines::pagerank_weight_predictions(tg, split.test_set.pairs);
  } else {
    throw std::invalid_argument("unknown wsn baseline: " + method);
  }
  return {baselines::rmse(preds, split.test_set.labels),
          baselines::pcc(preds, split.test_set.labels)};
}

void write_split_files(const std::string& dir, const Graph& full,
                       const SplitResult& split) {
  std::filesystem::create_directories(dir);
  {
    // internal ids, so the pair files and this edge list share one id space
    std::ofstream os(dir + "/train_graph.txt");
    os << "# nodes " << full.node_count() << '\n';
    for (const auto& e : split.train_graph.edges()) {
      os << e.u << ' ' << e.v;
      if (split.train_graph.weighted()) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.17g", e.w);
        os << ' ' << buf;
      }
      os << '\n';
    }
  }
  {
    std::ofstream os(dir + "/id_mapping.txt");
    full.save_id_mapping(os);
  }
  write_pairs_file(dir + "/train_pairs.txt", split.train_set);
  write_pairs_file(dir + "/test_pairs.txt", split.test_set);
}

void write_pairs_file(const std::string& path, const LabeledPairSet& set) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  for (std::size_t i = 0; i < set.size(); ++i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", set.labels[i]);
    os << set.pairs[i].first << ' ' << set.pairs[i].second << ' ' << buf << '\n';
  }
}

LabeledPairSet read_pairs_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open pairs file: " + path);
  LabeledPairSet out;
  graph::NodeId u, v;
  double label;
  while (is >> u >> v >> label) {
    out.pairs.emplace_back(u, v);
    out.labels.push_back(label);
  }
  if (out.pairs.empty())
    throw std::runtime_error("empty pairs file: " + path);
  return out;
}

}  // namespace leap::experiment
