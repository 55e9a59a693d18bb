#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "leap/config.hpp"
#include "leap/graph.hpp"
#include "leap/model.hpp"

namespace leap::experiment {

using config::ExperimentConfig;
using graph::Graph;
using graph::LabeledPairSet;
using graph::SplitResult;

struct SeedResult {
  std::uint64_t seed = 0;
  double auc = 0.0;   // link prediction
  double rmse = 0.0;  // wsn
  double pcc = 0.0;   // wsn
  std::size_t epochs_run = 0;
  double best_val_loss = 0.0;
};

struct RunResult {
  std::vector<SeedResult> seeds;
  double mean = 0.0;    // primary metric: auc (lp) or rmse (wsn)
  double stddev = 0.0;
};

/// Loads cfg.dataset; WSN weights are max-abs normalized onto [-1,1].
Graph load_dataset(const ExperimentConfig& cfg);

/// Split, train, and evaluate one seed. Optionally returns the trained model.
SeedResult run_single(const ExperimentConfig& cfg, const Graph& g,
                      std::uint64_t seed, model::Model* trained = nullptr,
                      model::TrainHistory* history = nullptr);

/// Runs every configured seed and aggregates the primary metric.
RunResult run(const ExperimentConfig& cfg);

/// Heuristic link-prediction baseline over a fresh split of g.
/// method: adamic_adar | katz | pagerank.
double baseline_lp_auc(const Graph& g, const std::string& method,
                       double test_fraction, std::uint64_t seed);

/// WSN baseline over a fresh split. method: reciprocal | pagerank.
/// Returns {rmse, pcc}.
std::pair<double, double> baseline_wsn(const Graph& g, const std::string& method,
                                       double delta, std::uint64_t seed);

std::vector<std::string> lp_baseline_methods();
std::vector<std::string> wsn_baseline_methods();

/// Scores LEAP predictions for an explicit pair set against a train graph.
std::vector<double> predict_pairs(const model::Model& m, const Graph& g_train,
                                  const LabeledPairSet& pairs,
                                  std::uint64_t seed);

// Split-file round trip used by the CLI: train-graph edge list,
// "u v label" pair files, and the id mapping.
void write_split_files(const std::string& dir, const Graph& full,
                       const SplitResult& split);
LabeledPairSet read_pairs_file(const std::string& path);
void write_pairs_file(const std::string& path, const LabeledPairSet& set);

}  // namespace leap::experiment
