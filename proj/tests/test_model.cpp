#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "leap/baselines.hpp"
#include "leap/model.hpp"
#include "support.hpp"

using namespace leap::model;
using leap::agg::AggregatorParams;
using leap::agg::AggregatorVars;
using leap::graph::SplitResult;
using leap::graph::Task;
using leap::test::fd_max_rel_err;
using leap::test::make_graph;
using leap::test::random_graph;
using leap::test::two_clusters;
using leap::tensor::Activation;
using leap::tensor::LossKind;

namespace {

ExperimentConfig small_cfg() {
  ExperimentConfig cfg;
  cfg.aggregator = "avgpool";
  cfg.embedding_dim = 8;
  cfg.lengths = {2, 3};
  cfg.cap = 10;
  cfg.edge_learner_layers = 1;
  cfg.hidden_width = 16;
  cfg.max_epochs = 6;
  cfg.patience = 3;
  cfg.batch_size = 16;
  return cfg;
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("combined vector width follows the per-length arithmetic") {
  // K=4, no features, lengths {3,4}, avgpool: 2*4 + 4*4 + 5*4 = 44
  ExperimentConfig cfg;
  cfg.aggregator = "avgpool";
  cfg.embedding_dim = 4;
  cfg.lengths = {3, 4};
  Graph g = two_clusters(8);
  Model m = Model::create(cfg, g, 1);
  CHECK(m.h_pv_width() == 44);
  CHECK(m.node_vec_width() == 4);

  cfg.aggregator = "densemax";
  cfg.sizes.dense_width = 10;
  Model m2 = Model::create(cfg, g, 1);
  CHECK(m2.h_pv_width() == 2 * 4 + 10 + 10);
}

TEST_CASE("zero parameters pin the output at the activation midpoint") {
  Graph g = two_clusters(8);
  ExperimentConfig cfg = small_cfg();
  Model m = Model::create(cfg, g, 3);
  for (auto& [name, t] : m.named_params())
    std::fill(t->data.begin(), t->data.end(), 0.0);
  CHECK(m.forward(g, 0, 9, 5) == doctest::Approx(0.5));  // sigmoid(0)

  cfg.task = Task::wsn_regression;
  Model mw = Model::create(cfg, g, 3);
  for (auto& [name, t] : mw.named_params())
    std::fill(t->data.begin(), t->data.end(), 0.0);
  CHECK(mw.forward(g, 0, 9, 5) == doctest::Approx(0.0));  // tanh(0)
}

TEST_CASE("forward is deterministic and bounded") {
  Graph g = two_clusters(10);
  Model m = Model::create(small_cfg(), g, 7);
  double a = m.forward(g, 2, 17, 9);
  double b = m.forward(g, 2, 17, 9);
  CHECK(a == b);
  CHECK(a >= 0.0);
  CHECK(a <= 1.0);
}

TEST_CASE("empty path sets contribute a zero block, not an error") {
  Graph g = make_graph(5, {{0, 1}, {2, 3}, {3, 4}});
  Model m = Model::create(small_cfg(), g, 1);
  double p = m.forward(g, 0, 4, 2);  // disconnected pair
  CHECK(p >= 0.0);
  CHECK(p <= 1.0);
}

TEST_CASE("predict_batch semantics") {
  Graph g = two_clusters(8);
  Model m = Model::create(small_cfg(), g, 2);
  CHECK(m.predict_batch(g, {}, 1).empty());
  auto scores = m.predict_batch(g, {{0, 5}, {1, 9}, {0, 5}}, 4);
  REQUIRE(scores.size() == 3);
  CHECK(scores[0] == scores[2]);  // repeated pair
  CHECK(scores[0] == m.forward(g, 0, 5, 4));
  CHECK(scores[1] == m.forward(g, 1, 9, 4));

  // explicit path-set variant matches implicit assembly
  auto ps0 = m.assemble_pair(g, 0, 5, 4);
  auto ps1 = m.assemble_pair(g, 1, 9, 4);
  auto scores2 = m.predict_batch(g, {{0, 5}, {1, 9}}, {&ps0, &ps1});
  CHECK(scores2[0] == scores[0]);
  CHECK(scores2[1] == scores[1]);
}

TEST_CASE("untrained model scores a balanced test near chance") {
  Graph g = two_clusters(15);
  SplitResult s = split_edges(g, 0.3, 11, Task::link_prediction);
  ExperimentConfig cfg = small_cfg();
  cfg.max_epochs = 0;
  Model m = Model::create(cfg, s.train_graph, 5);
  TrainHistory h = m.train(s.train_graph, s.train_set, nullptr, 5);
  CHECK(h.epochs.empty());
  auto scores = m.predict_batch(s.train_graph, s.test_set.pairs, 5);
  double auc = leap::baselines::auc(scores, s.test_set.labels);
  CHECK(auc > 0.25);
  CHECK(auc < 0.75);
}

TEST_CASE("training improves two-cluster link prediction over untrained") {
  Graph g = two_clusters(15);
  SplitResult s = split_edges(g, 0.2, 13, Task::link_prediction);
  ExperimentConfig cfg = small_cfg();
  cfg.max_epochs = 8;
  cfg.lr = 0.01;

  Model untrained = Model::create(cfg, s.train_graph, 9);
  auto base_scores = untrained.predict_batch(s.train_graph, s.test_set.pairs, 9);
  double base_auc = leap::baselines::auc(base_scores, s.test_set.labels);

  Model m = Model::create(cfg, s.train_graph, 9);
  TrainHistory h = m.train(s.train_graph, s.train_set, nullptr, 9);
  CHECK(!h.epochs.empty());
  auto scores = m.predict_batch(s.train_graph, s.test_set.pairs, 9);
  double auc = leap::baselines::auc(scores, s.test_set.labels);
  CHECK(auc > base_auc);
  CHECK(auc > 0.65);
}

TEST_CASE("early stopping restores the best epoch") {
  Graph g = two_clusters(12);
  SplitResult s = split_edges(g, 0.2, 17, Task::link_prediction);
  ExperimentConfig cfg = small_cfg();
  cfg.max_epochs = 10;
  cfg.patience = 2;
  Model m = Model::create(cfg, s.train_graph, 3);
  TrainHistory h = m.train(s.train_graph, s.train_set, nullptr, 3);

  CHECK(h.epochs.size() <= cfg.max_epochs);
  REQUIRE(h.best_epoch < h.epochs.size());
  double min_val = h.epochs[0].val_loss;
  for (const EpochStats& e : h.epochs) min_val = std::min(min_val, e.val_loss);
  CHECK(h.best_val_loss == doctest::Approx(min_val));
  CHECK(h.epochs[h.best_epoch].val_loss == doctest::Approx(min_val));
  // at most patience+1 epochs after the best before stopping
  CHECK(h.epochs.size() - h.best_epoch <= cfg.patience + 2);
}

TEST_CASE("save then load reproduces forward bit-exactly") {
  Graph g = two_clusters(10);
  ExperimentConfig cfg = small_cfg();
  cfg.aggregator = "edgeconv";
  Model m = Model::create(cfg, g, 21);
  std::string path = temp_path("leap_model_roundtrip.ckpt");
  m.save(path);
  Model back = Model::load(path);
  for (NodeId u : {0, 3, 7})
    for (NodeId v : {11, 15, 19})
      CHECK(back.forward(g, u, v, 2) == m.forward(g, u, v, 2));
  std::remove(path.c_str());
}

TEST_CASE("pretrained embeddings stay frozen unless finetuning is enabled") {
  Graph g = two_clusters(8);
  std::string path = temp_path("leap_pretrained_emb.txt");
  {
    std::ofstream out(path);
    out << g.node_count() << " 4\n";
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> dist(-0.1, 0.1);
    for (NodeId i = 0; i < g.node_count(); ++i) {
      out << i;
      for (int k = 0; k < 4; ++k) out << ' ' << dist(rng);
      out << '\n';
    }
  }
  SplitResult s = split_edges(g, 0.2, 19, Task::link_prediction);
  ExperimentConfig cfg = small_cfg();
  cfg.embedding_dim = 4;
  cfg.pretrained_embeddings = path;
  cfg.finetune_embeddings = false;
  cfg.max_epochs = 2;

  Model m = Model::create(cfg, s.train_graph, 1);
  Tensor before = m.embeddings().values;
  m.train(s.train_graph, s.train_set, nullptr, 1);
  CHECK(m.embeddings().values.data == before.data);

  cfg.finetune_embeddings = true;
  Model m2 = Model::create(cfg, s.train_graph, 1);
  Tensor before2 = m2.embeddings().values;
  m2.train(s.train_graph, s.train_set, nullptr, 1);
  CHECK(m2.embeddings().values.data != before2.data);
  std::remove(path.c_str());
}

TEST_CASE("full pipeline gradients match finite differences on a toy graph") {
  // Six nodes, one aggregator length, embeddings + aggregator + two affine
  // layers + sigmoid + bce, all checked against central differences.
  Graph g = make_graph(6, {{0, 2}, {2, 1}, {0, 3}, {3, 1}, {3, 4}, {4, 1},
                           {0, 5}, {5, 2}});
  leap::paths::AssemblerConfig acfg;
  acfg.lengths = {2, 3};
  acfg.cap = 10;
  acfg.seed = 3;
  acfg.exclude_direct_edge = true;
  auto sets = leap::paths::assemble(g, 0, 1, acfg);
  REQUIRE(!sets.at(2).paths.empty());
  REQUIRE(!sets.at(3).paths.empty());

  std::mt19937_64 rng(31);
  std::size_t K = 3, hid = 5;
  leap::agg::Sizes sz;
  sz.conv_filters = 3;
  sz.outer_lstm = 3;
  AggregatorParams proto2 =
      AggregatorParams::create(leap::agg::Kind::edgeconv, 2, K, 0, sz, rng);
  AggregatorParams proto3 =
      AggregatorParams::create(leap::agg::Kind::edgeconv, 3, K, 0, sz, rng);
  std::size_t h_pv_w = 2 * K + proto2.output_width() + proto3.output_width();

  // parameter order: embeddings, agg l=2 (5 tensors), agg l=3, W1,b1,Wo,bo
  std::vector<Tensor> params;
  params.push_back(leap::test::random_tensor({6, K}, rng, 0.3));
  auto push_agg = [&](AggregatorParams& p) {
    std::vector<std::pair<std::string, Tensor*>> named;
    p.collect_params("a", named);
    for (auto& [n, t] : named) params.push_back(*t);
  };
  push_agg(proto2);
  push_agg(proto3);
  params.push_back(leap::test::random_tensor({hid, h_pv_w}, rng, 0.3));
  params.push_back(leap::test::random_tensor({hid}, rng, 0.3));
  params.push_back(leap::test::random_tensor({1, hid}, rng, 0.3));
  params.push_back(leap::test::random_tensor({1}, rng, 0.3));

  auto run = [&](const std::vector<Tensor>& ps, Tape& tape,
                 std::vector<Tensor>* grads) {
    std::vector<Var> leaves;
    for (const Tensor& t : ps) leaves.push_back(tape.leaf(t, true));
    std::size_t at = 0;
    Var emb = leaves[at++];
    auto bind_agg = [&](AggregatorParams p) {
      std::vector<std::pair<std::string, Tensor*>> named;
      p.collect_params("a", named);
      AggregatorVars v;
      v.conv_k = leaves[at++];
      v.conv_b = leaves[at++];
      v.outer = {leaves[at], leaves[at + 1], leaves[at + 2]};
      at += 3;
      return v;
    };
    AggregatorVars v2 = bind_agg(proto2);
    AggregatorVars v3 = bind_agg(proto3);

    auto vec_paths = [&](const leap::paths::PathSet& pset) {
      leap::agg::VectorizedPathSet vps;
      for (const leap::paths::Path& p : pset.paths) {
        std::vector<Var> rows;
        for (NodeId x : p.nodes) rows.push_back(tape.row(emb, x));
        vps.path_matrices.push_back(tape.stack_rows(rows));
      }
      return vps;
    };
    Var h2 = leap::agg::aggregate(tape, proto2, v2, vec_paths(sets.at(2)));
    Var h3 = leap::agg::aggregate(tape, proto3, v3, vec_paths(sets.at(3)));
    Var h_pv = tape.concat({tape.row(emb, 0), tape.row(emb, 1), h2, h3});
    Var h = tape.affine(h_pv, leaves[at], leaves[at + 1], Activation::relu);
    Var rho =
        tape.affine(h, leaves[at + 2], leaves[at + 3], Activation::sigmoid);
    Var l = tape.loss(rho, Tensor::vec({1.0}), LossKind::bce);
    if (grads) {
      tape.backward(l);
      for (Var lv : leaves) grads->push_back(tape.grad(lv));
    }
    return tape.value(l).data[0];
  };

  double err = fd_max_rel_err(
      params,
      [&](const std::vector<Tensor>& ps) {
        Tape tape;
        return run(ps, tape, nullptr);
      },
      [&](const std::vector<Tensor>& ps) {
        Tape tape;
        std::vector<Tensor> grads;
        run(ps, tape, &grads);
        return grads;
      });
  CHECK(err < 1e-4);
}

TEST_CASE("embedding file loader validates its input") {
  std::string path = temp_path("leap_emb_check.txt");
  auto write = [&](const std::string& text) {
    std::ofstream out(path);
    out << text;
  };
  write("2 3\n0 1 2 3\n1 4 5 6\n");
  Tensor t = load_embedding_file(path, 2);
  CHECK(t.shape == std::vector<std::size_t>{2, 3});
  CHECK(t.at(1, 2) == doctest::Approx(6.0));

  write("3 3\n0 1 2 3\n1 4 5 6\n2 7 8 9\n");
  CHECK_THROWS(load_embedding_file(path, 2));  // row count mismatch
  write("2 3\n0 1 2 3\n0 4 5 6\n");
  CHECK_THROWS(load_embedding_file(path, 2));  // duplicate id
  write("2 3\n0 1 2 3\n5 4 5 6\n");
  CHECK_THROWS(load_embedding_file(path, 2));  // id out of range
  write("2 3\n0 1 2\n1 4 5 6\n");
  CHECK_THROWS(load_embedding_file(path, 2));  // short row
  std::remove(path.c_str());
}
