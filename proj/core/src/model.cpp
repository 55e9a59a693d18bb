#include "leap/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <unordered_map>

#include "leap/checkpoint.hpp"

namespace leap::model {

namespace {

Tensor glorot(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> dist(-limit, limit);
  Tensor t({rows, cols});
  for (double& v : t.data) v = dist(rng);
  return t;
}

tensor::LossKind loss_kind(graph::Task task) {
  return task == graph::Task::link_prediction ? tensor::LossKind::bce
                                              : tensor::LossKind::mse;
}

}  // namespace

struct Model::TapeBindings {
  std::unordered_map<NodeId, Var> emb_rows;
  std::map<std::size_t, agg::AggregatorVars> agg_vars;
  std::vector<std::pair<Var, Var>> hidden;
  Var w_out, b_out;
  std::vector<Var> param_leaves;  // parallel to named_params() order
};

std::vector<std::pair<std::string, Tensor*>> Model::named_params() {
  std::vector<std::pair<std::string, Tensor*>> out;
  for (auto& [l, a] : aggs_) a.collect_params("agg.l" + std::to_string(l), out);
  for (std::size_t i = 0; i < edge_learner_.w.size(); ++i) {
    out.emplace_back("el.h" + std::to_string(i) + ".w", &edge_learner_.w[i]);
    out.emplace_back("el.h" + std::to_string(i) + ".b", &edge_learner_.b[i]);
  }
  out.emplace_back("el.out.w", &edge_learner_.w_out);
  out.emplace_back("el.out.b", &edge_learner_.b_out);
  return out;
}

std::size_t Model::node_vec_width() const {
  std::size_t f = node_features_ ? node_features_->cols() : 0;
  return embeddings_.values.cols() + f;
}

std::size_t Model::h_pv_width() const {
  std::size_t w = 2 * node_vec_width();
  for (auto& [l, a] : aggs_) w += a.output_width();
  return w;
}

Model Model::create(const ExperimentConfig& cfg, const Graph& g,
                    std::uint64_t seed) {
  Model m;
  m.cfg_ = cfg;
  m.assembly_seed_ = seed;
  std::mt19937_64 rng(paths::derive_seed(seed, 0x6d6f64656cULL, 0, 0));

  if (!cfg.pretrained_embeddings.empty()) {
    m.embeddings_.values =
        load_embedding_file(cfg.pretrained_embeddings, g.node_count());
    m.embeddings_.trainable = cfg.finetune_embeddings;
  } else {
    std::uniform_real_distribution<double> dist(-0.05, 0.05);
    m.embeddings_.values = Tensor(
        {static_cast<std::size_t>(g.node_count()), cfg.embedding_dim});
    for (double& v : m.embeddings_.values.data) v = dist(rng);
    m.embeddings_.trainable = true;
  }
  if (!cfg.node_features.empty())
    m.node_features_ = load_embedding_file(cfg.node_features, g.node_count());

  agg::Kind kind = agg::kind_from_string(cfg.aggregator);
  std::size_t k_eff = m.node_vec_width();
  std::size_t edge_feat = (cfg.use_edge_weights && g.weighted()) ? 1 : 0;
  for (std::size_t l : cfg.lengths)
    m.aggs_.emplace(l, AggregatorParams::create(kind, l, k_eff, edge_feat,
                                                cfg.sizes, rng));

  std::size_t in_width = m.h_pv_width();
  m.edge_learner_.hidden_act =
      tensor::activation_from_string(cfg.hidden_activation);
  m.edge_learner_.out_act = cfg.task == graph::Task::link_prediction
                                ? tensor::Activation::sigmoid
                                : tensor::Activation::tanh;
  std::size_t w = in_width;
  for (std::size_t i = 0; i < cfg.edge_learner_layers; ++i) {
    m.edge_learner_.w.push_back(glorot(cfg.hidden_width, w, rng));
    m.edge_learner_.b.push_back(Tensor::zeros({cfg.hidden_width}));
    w = cfg.hidden_width;
  }
  m.edge_learner_.w_out = glorot(1, w, rng);
  m.edge_learner_.b_out = Tensor::zeros({1});
  return m;
}

PathSetMap Model::assemble_pair(const Graph& g, NodeId u, NodeId v,
                                std::uint64_t seed) const {
  paths::AssemblerConfig acfg;
  acfg.lengths = cfg_.lengths;
  acfg.cap = cfg_.cap;
  acfg.seed = seed;
  acfg.exclude_direct_edge = true;
  acfg.respect_direction = cfg_.respect_direction;
  auto sets = paths::assemble(g, u, v, acfg);
  for (auto& [l, ps] : sets) ps = paths::order_paths(ps, g);
  return sets;
}

namespace {

// Pushes leaves for one aggregator and records them in named-param order
// (the same order collect_params uses).
void push_agg_leaves(Tape& tape, const AggregatorParams& p, agg::AggregatorVars& v,
                     std::vector<Var>& order, bool trainable = true) {
  switch (p.kind) {
    case agg::Kind::avgpool:
      break;
    case agg::Kind::densemax:
      v.dense_w = tape.leaf(p.dense_w, trainable);
      v.dense_b = tape.leaf(p.dense_b, trainable);
      order.insert(order.end(), {v.dense_w, v.dense_b});
      break;
    case agg::Kind::seqofseq:
      v.inner = {tape.leaf(p.inner.w_ih, trainable),
                 tape.leaf(p.inner.w_hh, trainable),
                 tape.leaf(p.inner.bias, trainable)};
      v.outer = {tape.leaf(p.outer.w_ih, trainable),
                 tape.leaf(p.outer.w_hh, trainable),
                 tape.leaf(p.outer.bias, trainable)};
      order.insert(order.end(), {v.inner.w_ih, v.inner.w_hh, v.inner.bias,
                                 v.outer.w_ih, v.outer.w_hh, v.outer.bias});
      break;
    case agg::Kind::edgeconv:
      v.conv_k = tape.leaf(p.conv_k, trainable);
      v.conv_b = tape.leaf(p.conv_b, trainable);
      v.outer = {tape.leaf(p.outer.w_ih, trainable),
                 tape.leaf(p.outer.w_hh, trainable),
                 tape.leaf(p.outer.bias, trainable)};
      order.insert(order.end(), {v.conv_k, v.conv_b, v.outer.w_ih,
                                 v.outer.w_hh, v.outer.bias});
      break;
  }
}

}  // namespace

Var Model::vectorize_on_tape(Tape& tape, TapeBindings& b, const Graph& g,
                             NodeId u, NodeId v,
                             const PathSetMap& pathsets) const {
  auto node_vec = [&](NodeId x) -> Var {
    auto it = b.emb_rows.find(x);
    Var ev;
    if (it != b.emb_rows.end()) {
      ev = it->second;
    } else {
      std::size_t k = embeddings_.values.cols();
      Tensor row({k});
      std::copy_n(embeddings_.values.data.begin() + x * k, k, row.data.begin());
      ev = tape.leaf(std::move(row), embeddings_.trainable);
      b.emb_rows.emplace(x, ev);
    }
    if (!node_features_) return ev;
    std::size_t f = node_features_->cols();
    Tensor feat({f});
    std::copy_n(node_features_->data.begin() + x * f, f, feat.data.begin());
    return tape.concat({ev, tape.leaf(std::move(feat))});
  };

  std::vector<Var> parts;
  parts.push_back(node_vec(u));
  parts.push_back(node_vec(v));
  for (auto& [l, params] : aggs_) {
    auto it = pathsets.find(l);
    if (it == pathsets.end())
      throw std::invalid_argument("path_vectorize: missing path set for length " +
                                  std::to_string(l));
    const paths::PathSet& ps = it->second;
    if (ps.paths.empty()) {
      parts.push_back(tape.leaf(Tensor::zeros({params.output_width()})));
      continue;
    }
    agg::VectorizedPathSet vps;
    for (const paths::Path& p : ps.paths) {
      std::vector<Var> rows;
      rows.reserve(p.nodes.size());
      for (NodeId x : p.nodes) rows.push_back(node_vec(x));
      vps.path_matrices.push_back(tape.stack_rows(rows));
      vps.mask.push_back(true);
      if (params.edge_feat_width > 0) {
        std::vector<double> ef;
        for (std::size_t i = 0; i + 1 < p.nodes.size(); ++i)
          ef.push_back(g.edge_weight(p.nodes[i], p.nodes[i + 1]).value_or(0.0));
        vps.edge_features.push_back(std::move(ef));
      }
    }
    parts.push_back(agg::aggregate(tape, params, b.agg_vars.at(l), vps));
  }
  return tape.concat(std::span<const Var>(parts.data(), parts.size()));
}

Var Model::edge_learn(Tape& tape, Var h_pv) const {
  // Bindings-free variant used only through forward(); push fresh leaves.
  Var h = h_pv;
  for (std::size_t i = 0; i < edge_learner_.w.size(); ++i) {
    Var w = tape.leaf(edge_learner_.w[i]);
    Var bb = tape.leaf(edge_learner_.b[i]);
    h = tape.affine(h, w, bb, edge_learner_.hidden_act);
  }
  Var w = tape.leaf(edge_learner_.w_out);
  Var bb = tape.leaf(edge_learner_.b_out);
  return tape.affine(h, w, bb, edge_learner_.out_act);
}

Var Model::path_vectorize(Tape& tape, const Graph& g, NodeId u, NodeId v,
                          const PathSetMap& pathsets) const {
  TapeBindings b;
  for (auto& [l, p] : aggs_)
    push_agg_leaves(tape, p, b.agg_vars[l], b.param_leaves, false);
  return vectorize_on_tape(tape, b, g, u, v, pathsets);
}

double Model::forward(const Graph& g, NodeId u, NodeId v,
                      std::uint64_t seed) const {
  Tape tape;
  auto sets = assemble_pair(g, u, v, seed);
  Var h_pv = path_vectorize(tape, g, u, v, sets);
  Var rho = edge_learn(tape, h_pv);
  return tape.value(rho).data[0];
}

std::vector<double> Model::predict_batch(
    const Graph& g, const std::vector<std::pair<NodeId, NodeId>>& pairs,
    std::uint64_t seed) const {
  std::vector<double> out;
  out.reserve(pairs.size());
  for (auto& [u, v] : pairs) out.push_back(forward(g, u, v, seed));
  return out;
}

std::vector<double> Model::predict_batch(
    const Graph& g, const std::vector<std::pair<NodeId, NodeId>>& pairs,
    const std::vector<const PathSetMap*>& pathsets) const {
  if (pairs.size() != pathsets.size())
    throw std::invalid_argument("predict_batch: list size mismatch");
  std::vector<double> out;
  out.reserve(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    Tape tape;
    Var h_pv =
        path_vectorize(tape, g, pairs[i].first, pairs[i].second, *pathsets[i]);
    Var rho = edge_learn(tape, h_pv);
    out.push_back(tape.value(rho).data[0]);
  }
  return out;
}

TrainHistory Model::train(const Graph& g_train, const LabeledPairSet& train_set,
                          const LabeledPairSet* val_set, std::uint64_t seed) {
  if (train_set.pairs.size() != train_set.labels.size())
    throw std::invalid_argument("train: pair/label length mismatch");
  std::mt19937_64 rng(paths::derive_seed(seed, 0x747261696eULL, 0, 0));
  tensor::LossKind kind = loss_kind(cfg_.task);

  // Optional internal validation holdout.
  std::vector<std::size_t> idx(train_set.pairs.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::vector<std::pair<NodeId, NodeId>> tr_pairs, va_pairs;
  std::vector<double> tr_labels, va_labels;
  if (val_set) {
    tr_pairs = train_set.pairs;
    tr_labels = train_set.labels;
    va_pairs = val_set->pairs;
    va_labels = val_set->labels;
  } else {
    std::shuffle(idx.begin(), idx.end(), rng);
    std::size_t n_val = static_cast<std::size_t>(
        std::llround(cfg_.val_fraction * static_cast<double>(idx.size())));
    for (std::size_t i = 0; i < idx.size(); ++i) {
      if (i < n_val) {
        va_pairs.push_back(train_set.pairs[idx[i]]);
        va_labels.push_back(train_set.labels[idx[i]]);
      } else {
        tr_pairs.push_back(train_set.pairs[idx[i]]);
        tr_labels.push_back(train_set.labels[idx[i]]);
      }
    }
  }

  // Paths are assembled once per pair per split, not per epoch.
  std::unordered_map<std::uint64_t, PathSetMap> cache;
  auto cached = [&](NodeId u, NodeId v) -> const PathSetMap& {
    std::uint64_t key = graph::pair_key(u, v);
    auto it = cache.find(key);
    if (it == cache.end())
      it = cache.emplace(key, assemble_pair(g_train, u, v, seed)).first;
    return it->second;
  };
  for (auto& [u, v] : tr_pairs) cached(u, v);
  for (auto& [u, v] : va_pairs) cached(u, v);

  auto params = named_params();
  tensor::AdamState state;
  state.lr = cfg_.lr;
  {
    std::vector<const Tensor*> ptrs;
    for (auto& [n, t] : params) ptrs.push_back(t);
    state.init(ptrs);
  }
  Tensor emb_m = Tensor::zeros(embeddings_.values.shape);
  Tensor emb_v = Tensor::zeros(embeddings_.values.shape);

  auto eval_loss = [&](const std::vector<std::pair<NodeId, NodeId>>& ps,
                       const std::vector<double>& ls) -> double {
    if (ps.empty()) return 0.0;
    double total = 0.0;
    for (std::size_t i = 0; i < ps.size(); ++i) {
      Tape tape;
      Var h_pv =
          path_vectorize(tape, g_train, ps[i].first, ps[i].second,
                         cached(ps[i].first, ps[i].second));
      Var rho = edge_learn(tape, h_pv);
      Var l = tape.loss(rho, Tensor::vec({ls[i]}), kind);
      total += tape.value(l).data[0];
    }
    return total / static_cast<double>(ps.size());
  };

  auto snapshot = [&]() {
    std::vector<Tensor> snap;
    for (auto& [n, t] : params) snap.push_back(*t);
    snap.push_back(embeddings_.values);
    return snap;
  };
  auto restore = [&](const std::vector<Tensor>& snap) {
    for (std::size_t i = 0; i < params.size(); ++i) *params[i].second = snap[i];
    embeddings_.values = snap.back();
  };

  TrainHistory history;
  bool monitor_val = !va_pairs.empty();
  double best = std::numeric_limits<double>::infinity();
  std::vector<Tensor> best_snap = snapshot();
  std::size_t since_best = 0;

  std::vector<std::size_t> order(tr_pairs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (std::size_t epoch = 0; epoch < cfg_.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double train_loss_sum = 0.0;
    std::size_t seen = 0;
    for (std::size_t start = 0; start < order.size();
         start += cfg_.batch_size) {
      std::size_t end = std::min(order.size(), start + cfg_.batch_size);
      Tape tape;
      TapeBindings b;
      for (auto& [l, p] : aggs_)
        push_agg_leaves(tape, p, b.agg_vars[l], b.param_leaves);
      for (std::size_t i = 0; i < edge_learner_.w.size(); ++i) {
        Var w = tape.leaf(edge_learner_.w[i], true);
        Var bb = tape.leaf(edge_learner_.b[i], true);
        b.hidden.emplace_back(w, bb);
        b.param_leaves.insert(b.param_leaves.end(), {w, bb});
      }
      b.w_out = tape.leaf(edge_learner_.w_out, true);
      b.b_out = tape.leaf(edge_learner_.b_out, true);
      b.param_leaves.insert(b.param_leaves.end(), {b.w_out, b.b_out});

      std::vector<Var> preds;
      std::vector<double> targets;
      for (std::size_t i = start; i < end; ++i) {
        auto [u, v] = tr_pairs[order[i]];
        Var h_pv = vectorize_on_tape(tape, b, g_train, u, v, cached(u, v));
        Var h = h_pv;
        for (auto& [w, bb] : b.hidden)
          h = tape.affine(h, w, bb, edge_learner_.hidden_act);
        preds.push_back(
            tape.affine(h, b.w_out, b.b_out, edge_learner_.out_act));
        targets.push_back(tr_labels[order[i]]);
      }
      Var pred_vec = tape.concat(std::span<const Var>(preds.data(), preds.size()));
      Var batch_loss = tape.loss(pred_vec, Tensor::vec(targets), kind);
      tape.backward(batch_loss);

      train_loss_sum += tape.value(batch_loss).data[0] *
                        static_cast<double>(end - start);
      seen += end - start;

      // dense parameter update
      std::vector<Tensor*> p_ptrs;
      std::vector<const Tensor*> g_ptrs;
      std::vector<Tensor> grads;
      grads.reserve(params.size());
      for (std::size_t i = 0; i < params.size(); ++i)
        grads.push_back(tape.grad(b.param_leaves[i]));
      for (std::size_t i = 0; i < params.size(); ++i) {
        p_ptrs.push_back(params[i].second);
        g_ptrs.push_back(&grads[i]);
      }
      tensor::adam_step(p_ptrs, g_ptrs, state);

      // sparse embedding update for the rows this batch touched
      if (embeddings_.trainable && !b.emb_rows.empty()) {
        std::vector<std::size_t> rows;
        std::vector<Tensor> row_grads;
        for (auto& [node, var] : b.emb_rows) {
          rows.push_back(static_cast<std::size_t>(node));
          row_grads.push_back(tape.grad(var));
        }
        tensor::adam_step_rows(embeddings_.values, rows, row_grads, emb_m,
                               emb_v, state.step, state.lr, state.beta1,
                               state.beta2, state.eps);
      }
    }

    EpochStats stats;
    stats.train_loss = seen ? train_loss_sum / static_cast<double>(seen) : 0.0;
    stats.val_loss = monitor_val ? eval_loss(va_pairs, va_labels)
                                 : stats.train_loss;
    history.epochs.push_back(stats);

    if (stats.val_loss < best) {
      best = stats.val_loss;
      best_snap = snapshot();
      history.best_epoch = epoch;
      since_best = 0;
    } else {
      ++since_best;
      if (since_best > cfg_.patience) break;
    }
  }
  restore(best_snap);
  history.best_val_loss = best;
  return history;
}

void Model::save(const std::string& path) const {
  checkpoint::Checkpoint ckpt;
  ckpt.header = cfg_.to_text();
  ckpt.arrays.emplace("embeddings", embeddings_.values);
  if (node_features_) ckpt.arrays.emplace("node_features", *node_features_);
  Model& self = const_cast<Model&>(*this);
  for (auto& [name, t] : self.named_params()) ckpt.arrays.emplace(name, *t);
  checkpoint::save(path, ckpt);
}

Model Model::load(const std::string& path) {
  auto ckpt = checkpoint::load(path);
  ExperimentConfig cfg = config::parse_config_text(ckpt.header);

  Model m;
  m.cfg_ = cfg;
  auto emb_it = ckpt.arrays.find("embeddings");
  if (emb_it == ckpt.arrays.end())
    throw std::runtime_error("checkpoint: missing embeddings array");
  m.embeddings_.values = emb_it->second;
  m.embeddings_.trainable =
      cfg.pretrained_embeddings.empty() || cfg.finetune_embeddings;
  auto nf_it = ckpt.arrays.find("node_features");
  if (nf_it != ckpt.arrays.end()) m.node_features_ = nf_it->second;

  agg::Kind kind = agg::kind_from_string(cfg.aggregator);
  std::size_t k_eff = m.node_vec_width();
  std::mt19937_64 dummy_rng(0);
  for (std::size_t l : cfg.lengths) {
    // Shapes come from create(); stored values overwrite them below.
    std::size_t edge_feat = cfg.use_edge_weights ? 1 : 0;
    m.aggs_.emplace(l, AggregatorParams::create(kind, l, k_eff, edge_feat,
                                                cfg.sizes, dummy_rng));
  }
  std::size_t w = m.h_pv_width();
  for (std::size_t i = 0; i < cfg.edge_learner_layers; ++i) {
    m.edge_learner_.w.push_back(Tensor::zeros({cfg.hidden_width, w}));
    m.edge_learner_.b.push_back(Tensor::zeros({cfg.hidden_width}));
    w = cfg.hidden_width;
  }
  m.edge_learner_.w_out = Tensor::zeros({1, w});
  m.edge_learner_.b_out = Tensor::zeros({1});
  m.edge_learner_.hidden_act =
      tensor::activation_from_string(cfg.hidden_activation);
  m.edge_learner_.out_act = cfg.task == graph::Task::link_prediction
                                ? tensor::Activation::sigmoid
                                : tensor::Activation::tanh;

  for (auto& [name, t] : m.named_params()) {
    auto it = ckpt.arrays.find(name);
    if (it == ckpt.arrays.end())
      throw std::runtime_error("checkpoint: missing array " + name);
    if (it->second.shape != t->shape)
      throw std::runtime_error("checkpoint: shape mismatch for " + name);
    *t = it->second;
  }
  return m;
}

Tensor load_embedding_file(const std::string& path, NodeId node_count) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open embedding file: " + path);
  std::size_t n = 0, k = 0;
  if (!(in >> n >> k))
    throw std::runtime_error("embedding file: bad header in " + path);
  if (n != static_cast<std::size_t>(node_count))
    throw std::runtime_error("embedding file: row count does not match graph");
  Tensor t({n, k});
  std::vector<bool> seen(n, false);
  for (std::size_t r = 0; r < n; ++r) {
    long long id = -1;
    if (!(in >> id) || id < 0 || id >= static_cast<long long>(n))
      throw std::runtime_error("embedding file: bad node id");
    if (seen[id]) throw std::runtime_error("embedding file: duplicate node id");
    seen[id] = true;
    for (std::size_t c = 0; c < k; ++c) {
      if (!(in >> t.at(static_cast<std::size_t>(id), c)))
        throw std::runtime_error("embedding file: inconsistent vector width");
    }
  }
  for (std::size_t r = 0; r < n; ++r)
    if (!seen[r])
      throw std::runtime_error("embedding file: missing node id " +
                               std::to_string(r));
  return t;
}

}  // namespace leap::model
