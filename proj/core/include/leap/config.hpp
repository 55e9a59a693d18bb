#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "leap/aggregators.hpp"
#include "leap/graph.hpp"

namespace leap::config {

/// Full, seedable description of a training/evaluation run. Parsed from a
/// flat key = value text file; unknown keys are an error.
struct ExperimentConfig {
  graph::Task task = graph::Task::link_prediction;

  // dataset
  std::string dataset;       // edge list path
  bool directed = false;
  bool weighted = false;
  char delimiter = ' ';
  double test_fraction = 0.1;  // also delta for WSN

  // path assembly
  std::vector<std::size_t> lengths = {3, 4};
  std::size_t cap = 50;
  bool respect_direction = false;

  // model
  std::string aggregator = "edgeconv";
  std::size_t embedding_dim = 32;
  agg::Sizes sizes;
  std::size_t edge_learner_layers = 2;
  std::size_t hidden_width = 64;
  std::string hidden_activation = "relu";
  bool use_edge_weights = false;  // edgeconv edge features
  std::string pretrained_embeddings;  // optional file
  bool finetune_embeddings = false;   // only with pretrained table
  std::string node_features;          // optional file

  // training
  double lr = 0.001;
  std::size_t max_epochs = 30;
  std::size_t patience = 5;
  std::size_t batch_size = 32;
  double val_fraction = 0.1;

  std::vector<std::uint64_t> seeds = {1, 2, 3};

  std::string to_text() const;
};

ExperimentConfig parse_config(std::istream& in);
ExperimentConfig parse_config_file(const std::string& path);
ExperimentConfig parse_config_text(const std::string& text);

/// FNV-1a 64 over the file bytes; reported in run headers.
std::uint64_t content_hash(const std::string& bytes);

}  // namespace leap::config
