#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "leap/aggregators.hpp"
#include "leap/config.hpp"
#include "leap/graph.hpp"
#include "leap/paths.hpp"
#include "leap/tensor.hpp"

namespace leap::model {

using agg::AggregatorParams;
using config::ExperimentConfig;
using graph::Graph;
using graph::LabeledPairSet;
using graph::NodeId;
using tensor::Tape;
using tensor::Tensor;
using tensor::Var;

/// Node embedding lookup table; rows are the per-node vectors.
struct EmbeddingTable {
  Tensor values;  // N x K
  bool trainable = true;
};

struct EdgeLearnerParams {
  std::vector<Tensor> w, b;  // hidden layers
  Tensor w_out, b_out;
  tensor::Activation hidden_act = tensor::Activation::relu;
  tensor::Activation out_act = tensor::Activation::sigmoid;
};

struct EpochStats {
  double train_loss = 0.0;
  double val_loss = 0.0;
};

struct TrainHistory {
  std::vector<EpochStats> epochs;
  std::size_t best_epoch = 0;
  double best_val_loss = 0.0;
};

/// Per-length assembled and canonically ordered path sets for one pair.
using PathSetMap = std::map<std::size_t, paths::PathSet>;

/// End-to-end LEAP model: embeddings -> per-length aggregators -> edge
/// learner. Forward evaluation with frozen parameters is thread safe.
class Model {
 public:
  static Model create(const ExperimentConfig& cfg, const Graph& g,
                      std::uint64_t seed);

  const ExperimentConfig& cfg() const { return cfg_; }
  const EmbeddingTable& embeddings() const { return embeddings_; }
  const std::map<std::size_t, AggregatorParams>& aggregators() const {
    return aggs_;
  }

  /// Assembles the path sets for one pair against a given graph, using the
  /// model's assembler settings (direct edge always excluded).
  PathSetMap assemble_pair(const Graph& g, NodeId u, NodeId v,
                           std::uint64_t seed) const;

  /// Algorithm: embed the endpoints and every path node, run one aggregator
  /// per configured length, concatenate into H_PV. Empty path sets
  /// contribute a zero block of the aggregator's width.
  Var path_vectorize(Tape& tape, const Graph& g, NodeId u, NodeId v,
                     const PathSetMap& pathsets) const;

  /// Feed-forward head producing the scalar prediction.
  Var edge_learn(Tape& tape, Var h_pv) const;

  double forward(const Graph& g, NodeId u, NodeId v, std::uint64_t seed) const;
  std::vector<double> predict_batch(
      const Graph& g, const std::vector<std::pair<NodeId, NodeId>>& pairs,
      std::uint64_t seed) const;
  std::vector<double> predict_batch(
      const Graph& g, const std::vector<std::pair<NodeId, NodeId>>& pairs,
      const std::vector<const PathSetMap*>& pathsets) const;

  /// Mini-batch Adam training with early stopping on validation loss; the
  /// best-epoch parameters are restored before returning. When no explicit
  /// validation set is given, val_fraction of the training pairs is held out.
  TrainHistory train(const Graph& g_train, const LabeledPairSet& train_set,
                     const LabeledPairSet* val_set, std::uint64_t seed);

  void save(const std::string& path) const;
  static Model load(const std::string& path);

  std::size_t h_pv_width() const;
  std::size_t node_vec_width() const;  // K plus node-feature width

  /// All dense trainable tensors (aggregators + edge learner), named.
  std::vector<std::pair<std::string, Tensor*>> named_params();

 private:
  Model() = default;

  struct TapeBindings;
  Var vectorize_on_tape(Tape& tape, TapeBindings& b, const Graph& g, NodeId u,
                        NodeId v, const PathSetMap& pathsets) const;

  ExperimentConfig cfg_;
  EmbeddingTable embeddings_;
  std::optional<Tensor> node_features_;  // N x F, constant
  std::map<std::size_t, AggregatorParams> aggs_;
  EdgeLearnerParams edge_learner_;
  std::uint64_t assembly_seed_ = 0;
};

/// Parses "N K" then one "id v1 .. vK" line per node (internal dense ids).
Tensor load_embedding_file(const std::string& path, NodeId node_count);

}  // namespace leap::model
