#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "leap/tensor.hpp"

namespace leap::agg {

using tensor::Activation;
using tensor::Tape;
using tensor::Tensor;
using tensor::Var;

enum class Kind { avgpool, densemax, seqofseq, edgeconv };

Kind kind_from_string(const std::string& s);
std::string to_string(Kind k);

struct Sizes {
  std::size_t dense_width = 64;
  std::size_t inner_lstm = 32;
  std::size_t outer_lstm = 32;
  std::size_t conv_filters = 32;
};

struct LstmParams {
  Tensor w_ih, w_hh, bias;
};

/// Trainable weights of one aggregator instance, bound to one path length.
/// Lengths never share weights.
struct AggregatorParams {
  Kind kind = Kind::avgpool;
  std::size_t path_length = 0;   // l (edge count)
  std::size_t input_width = 0;   // K_eff per node
  std::size_t edge_feat_width = 0;  // consumed by edgeconv only
  Activation dense_act = Activation::relu;
  Activation conv_act = Activation::relu;

  Tensor dense_w, dense_b;  // densemax
  LstmParams inner, outer;  // seqofseq (inner+outer) / edgeconv (outer only)
  Tensor conv_k, conv_b;    // edgeconv

  std::size_t output_width() const;

  static AggregatorParams create(Kind kind, std::size_t path_length,
                                 std::size_t input_width,
                                 std::size_t edge_feat_width,
                                 const Sizes& sizes, std::mt19937_64& rng);

  /// Enumerates (name, tensor) pairs for training and checkpointing.
  void collect_params(const std::string& prefix,
                      std::vector<std::pair<std::string, Tensor*>>& out);
};

/// Vectorized path set on a tape: one [(l+1) x K_eff] matrix per path,
/// padded entries marked false in the mask. Edge features, when present,
/// hold l rows of edge_feat_width values per path (constants, not trained).
struct VectorizedPathSet {
  std::vector<Var> path_matrices;
  std::vector<bool> mask;
  std::vector<std::vector<double>> edge_features;
};

/// Leaf handles for one aggregator's parameters on a given tape.
struct AggregatorVars {
  Var dense_w, dense_b;
  tensor::LstmWeights inner, outer;
  Var conv_k, conv_b;
};

AggregatorVars push_leaves(Tape& tape, const AggregatorParams& p);

/// Maps a vectorized path set to the single vector h^l. Requires at least
/// one unmasked path; empty path sets are handled by the caller.
Var aggregate(Tape& tape, const AggregatorParams& p, const AggregatorVars& vars,
              const VectorizedPathSet& ps);

}  // namespace leap::agg
