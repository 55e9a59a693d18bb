#include "leap/aggregators.hpp"

#include <cmath>
#include <stdexcept>

namespace leap::agg {

Kind kind_from_string(const std::string& s) {
  if (s == "avgpool") return Kind::avgpool;
  if (s == "densemax") return Kind::densemax;
  if (s == "seqofseq") return Kind::seqofseq;
  if (s == "edgeconv") return Kind::edgeconv;
  throw std::invalid_argument("unknown aggregator: " + s);
}

std::string to_string(Kind k) {
  switch (k) {
    case Kind::avgpool: return "avgpool";
    case Kind::densemax: return "densemax";
    case Kind::seqofseq: return "seqofseq";
    case Kind::edgeconv: return "edgeconv";
  }
  return "?";
}

namespace {

Tensor glorot(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> dist(-limit, limit);
  Tensor t({rows, cols});
  for (double& v : t.data) v = dist(rng);
  return t;
}

LstmParams make_lstm(std::size_t input, std::size_t hidden, std::mt19937_64& rng) {
  LstmParams p;
  p.w_ih = glorot(4 * hidden, input, rng);
  p.w_hh = glorot(4 * hidden, hidden, rng);
  p.bias = Tensor::zeros({4 * hidden});
  // forget gate bias starts at 1
  for (std::size_t i = hidden; i < 2 * hidden; ++i) p.bias.data[i] = 1.0;
  return p;
}

}  // namespace

std::size_t AggregatorParams::output_width() const {
  switch (kind) {
    case Kind::avgpool: return (path_length + 1) * input_width;
    case Kind::densemax: return dense_w.rows();
    case Kind::seqofseq: return outer.w_hh.cols();
    case Kind::edgeconv: return outer.w_hh.cols();
  }
  return 0;
}

AggregatorParams AggregatorParams::create(Kind kind, std::size_t path_length,
                                          std::size_t input_width,
                                          std::size_t edge_feat_width,
                                          const Sizes& sizes,
                                          std::mt19937_64& rng) {
  AggregatorParams p;
  p.kind = kind;
  p.path_length = path_length;
  p.input_width = input_width;
  p.edge_feat_width = (kind == Kind::edgeconv) ? edge_feat_width : 0;
  std::size_t flat = (path_length + 1) * input_width;
  switch (kind) {
    case Kind::avgpool:
      break;
    case Kind::densemax:
      p.dense_w = glorot(sizes.dense_width, flat, rng);
      p.dense_b = Tensor::zeros({sizes.dense_width});
      break;
    case Kind::seqofseq:
      p.inner = make_lstm(input_width, sizes.inner_lstm, rng);
      p.outer = make_lstm(sizes.inner_lstm, sizes.outer_lstm, rng);
      break;
    case Kind::edgeconv:
      p.conv_k = glorot(sizes.conv_filters, 2 * input_width + p.edge_feat_width, rng);
      p.conv_b = Tensor::zeros({sizes.conv_filters});
      p.outer = make_lstm(sizes.conv_filters, sizes.outer_lstm, rng);
      break;
  }
  return p;
}

void AggregatorParams::collect_params(
    const std::string& prefix,
    std::vector<std::pair<std::string, Tensor*>>& out) {
  switch (kind) {
    case Kind::avgpool:
      break;
    case Kind::densemax:
      out.emplace_back(prefix + ".dense_w", &dense_w);
      out.emplace_back(prefix + ".dense_b", &dense_b);
      break;
    case Kind::seqofseq:
      out.emplace_back(prefix + ".inner.w_ih", &inner.w_ih);
      out.emplace_back(prefix + ".inner.w_hh", &inner.w_hh);
      out.emplace_back(prefix + ".inner.bias", &inner.bias);
      out.emplace_back(prefix + ".outer.w_ih", &outer.w_ih);
      out.emplace_back(prefix + ".outer.w_hh", &outer.w_hh);
      out.emplace_back(prefix + ".outer.bias", &outer.bias);
      break;
    case Kind::edgeconv:
      out.emplace_back(prefix + ".conv_k", &conv_k);
      out.emplace_back(prefix + ".conv_b", &conv_b);
      out.emplace_back(prefix + ".outer.w_ih", &outer.w_ih);
      out.emplace_back(prefix + ".outer.w_hh", &outer.w_hh);
      out.emplace_back(prefix + ".outer.bias", &outer.bias);
      break;
  }
}

AggregatorVars push_leaves(Tape& tape, const AggregatorParams& p) {
  AggregatorVars v;
  switch (p.kind) {
    case Kind::avgpool:
      break;
    case Kind::densemax:
      v.dense_w = tape.leaf(p.dense_w, true);
      v.dense_b = tape.leaf(p.dense_b, true);
      break;
    case Kind::seqofseq:
      v.inner = {tape.leaf(p.inner.w_ih, true), tape.leaf(p.inner.w_hh, true),
                 tape.leaf(p.inner.bias, true)};
      v.outer = {tape.leaf(p.outer.w_ih, true), tape.leaf(p.outer.w_hh, true),
                 tape.leaf(p.outer.bias, true)};
      break;
    case Kind::edgeconv:
      v.conv_k = tape.leaf(p.conv_k, true);
      v.conv_b = tape.leaf(p.conv_b, true);
      v.outer = {tape.leaf(p.outer.w_ih, true), tape.leaf(p.outer.w_hh, true),
                 tape.leaf(p.outer.bias, true)};
      break;
  }
  return v;
}

Var aggregate(Tape& tape, const AggregatorParams& p, const AggregatorVars& vars,
              const VectorizedPathSet& ps) {
  std::vector<std::size_t> live;
  for (std::size_t i = 0; i < ps.path_matrices.size(); ++i)
    if (ps.mask.empty() || ps.mask[i]) live.push_back(i);
  if (live.empty())
    throw std::invalid_argument("aggregate: no unmasked path");

  switch (p.kind) {
    case Kind::avgpool: {
      std::vector<Var> flat;
      flat.reserve(live.size());
      for (std::size_t i : live) flat.push_back(tape.flatten(ps.path_matrices[i]));
      return tape.pool_rows(tape.stack_rows(flat), tensor::PoolMode::avg);
    }
    case Kind::densemax: {
      std::vector<Var> rows;
      rows.reserve(live.size());
      for (std::size_t i : live)
        rows.push_back(tape.affine(tape.flatten(ps.path_matrices[i]),
                                   vars.dense_w, vars.dense_b, p.dense_act));
      return tape.pool_rows(tape.stack_rows(rows), tensor::PoolMode::max);
    }
    case Kind::seqofseq: {
      std::vector<Var> inner_vecs;
      inner_vecs.reserve(live.size());
      for (std::size_t i : live) {
        Var states = tape.lstm_sequence(ps.path_matrices[i], vars.inner);
        inner_vecs.push_back(tape.pool_rows(states, tensor::PoolMode::max));
      }
      Var outer_states =
          tape.lstm_sequence(tape.stack_rows(inner_vecs), vars.outer);
      return tape.pool_rows(outer_states, tensor::PoolMode::max);
    }
    case Kind::edgeconv: {
      std::vector<Var> inner_vecs;
      inner_vecs.reserve(live.size());
      for (std::size_t i : live) {
        Var conv_rows;
        if (p.edge_feat_width == 0) {
          conv_rows = tape.conv1d_k2(ps.path_matrices[i], vars.conv_k,
                                     vars.conv_b, p.conv_act);
        } else {
          // windows built by hand so the edge feature vector of
          // (u_t, u_{t+1}) rides along with the two node vectors
          const auto& ef = ps.edge_features.at(i);
          std::vector<Var> rows;
          for (std::size_t t = 0; t < p.path_length; ++t) {
            Var feat = tape.leaf(Tensor::vec(std::vector<double>(
                ef.begin() + t * p.edge_feat_width,
                ef.begin() + (t + 1) * p.edge_feat_width)));
            Var window = tape.concat({tape.row(ps.path_matrices[i], t),
                                      tape.row(ps.path_matrices[i], t + 1),
                                      feat});
            rows.push_back(tape.affine(window, vars.conv_k, vars.conv_b, p.conv_act));
          }
          conv_rows = tape.stack_rows(rows);
        }
        inner_vecs.push_back(tape.pool_rows(conv_rows, tensor::PoolMode::max));
      }
      Var outer_states =
          tape.lstm_sequence(tape.stack_rows(inner_vecs), vars.outer);
      return tape.pool_rows(outer_states, tensor::PoolMode::max);
    }
  }
  throw std::logic_error("aggregate: unreachable");
}

}  // namespace leap::agg
