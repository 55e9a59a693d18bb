#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "leap/aggregators.hpp"
#include "support.hpp"

using namespace leap::agg;
using leap::test::fd_max_rel_err;
using leap::test::random_tensor;
using leap::tensor::PoolMode;

namespace {

VectorizedPathSet make_ps(Tape& tape, const std::vector<Tensor>& mats,
                          std::vector<bool> mask = {}) {
  VectorizedPathSet ps;
  for (const Tensor& m : mats) ps.path_matrices.push_back(tape.leaf(m));
  ps.mask = std::move(mask);
  return ps;
}

// Reference LSTM recurrence, written independently of the tape ops.
std::vector<std::vector<double>> ref_lstm(const Tensor& w_ih, const Tensor& w_hh,
                                          const Tensor& bias, const Tensor& x) {
  std::size_t h = w_hh.cols(), d = x.cols(), T = x.rows();
  auto sig = [](double z) { return 1.0 / (1.0 + std::exp(-z)); };
  std::vector<double> hp(h, 0.0), cp(h, 0.0);
  std::vector<std::vector<double>> states;
  for (std::size_t t = 0; t < T; ++t) {
    std::vector<double> gates(4 * h);
    for (std::size_t r = 0; r < 4 * h; ++r) {
      double z = bias.data[r];
      for (std::size_t k = 0; k < d; ++k) z += w_ih.at(r, k) * x.at(t, k);
      for (std::size_t k = 0; k < h; ++k) z += w_hh.at(r, k) * hp[k];
      gates[r] = z;
    }
    std::vector<double> hn(h), cn(h);
    for (std::size_t j = 0; j < h; ++j) {
      double i = sig(gates[j]), f = sig(gates[h + j]);
      double g = std::tanh(gates[2 * h + j]), o = sig(gates[3 * h + j]);
      cn[j] = f * cp[j] + i * g;
      hn[j] = o * std::tanh(cn[j]);
    }
    states.push_back(hn);
    hp = hn;
    cp = cn;
  }
  return states;
}

std::vector<double> colwise_max(const std::vector<std::vector<double>>& rows) {
  std::vector<double> out = rows.at(0);
  for (const auto& r : rows)
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = std::max(out[j], r[j]);
  return out;
}

}  // namespace

TEST_CASE("output widths per kind") {
  std::mt19937_64 rng(1);
  Sizes sz;
  sz.dense_width = 7;
  sz.inner_lstm = 5;
  sz.outer_lstm = 6;
  sz.conv_filters = 4;
  auto ap = AggregatorParams::create(Kind::avgpool, 3, 8, 0, sz, rng);
  CHECK(ap.output_width() == 4 * 8);
  auto dm = AggregatorParams::create(Kind::densemax, 3, 8, 0, sz, rng);
  CHECK(dm.output_width() == 7);
  auto ss = AggregatorParams::create(Kind::seqofseq, 3, 8, 0, sz, rng);
  CHECK(ss.output_width() == 6);
  auto ec = AggregatorParams::create(Kind::edgeconv, 3, 8, 2, sz, rng);
  CHECK(ec.output_width() == 6);
  CHECK(ec.conv_k.cols() == 2 * 8 + 2);  // edge features widen the window
}

TEST_CASE("collect_params matches push_leaves layout") {
  std::mt19937_64 rng(2);
  for (Kind k : {Kind::avgpool, Kind::densemax, Kind::seqofseq, Kind::edgeconv}) {
    auto p = AggregatorParams::create(k, 3, 4, 0, {}, rng);
    std::vector<std::pair<std::string, Tensor*>> named;
    p.collect_params("agg", named);
    if (k == Kind::avgpool) CHECK(named.empty());
    for (auto& [name, t] : named) {
      CHECK(t->size() > 0);
      CHECK(name.rfind("agg.", 0) == 0);
    }
  }
}

TEST_CASE("avgpool flattens then averages") {
  Tape tape;
  std::mt19937_64 rng(3);
  auto p = AggregatorParams::create(Kind::avgpool, 2, 1, 0, {}, rng);
  // K=1 paths (1,2,3) and (1,4,3) -> [1,3,3]
  auto ps = make_ps(tape, {Tensor::mat(3, 1, {1, 2, 3}),
                           Tensor::mat(3, 1, {1, 4, 3})});
  Var h = aggregate(tape, p, {}, ps);
  CHECK(tape.value(h).data == std::vector<double>{1, 3, 3});

  // single path: its own flattened vector; duplicate: unchanged
  Tape t2;
  auto one = make_ps(t2, {Tensor::mat(3, 1, {1, 2, 3})});
  CHECK(t2.value(aggregate(t2, p, {}, one)).data ==
        std::vector<double>{1, 2, 3});
  Tape t3;
  auto dup = make_ps(t3, {Tensor::mat(3, 1, {1, 2, 3}),
                          Tensor::mat(3, 1, {1, 2, 3})});
  CHECK(t3.value(aggregate(t3, p, {}, dup)).data ==
        std::vector<double>{1, 2, 3});
}

TEST_CASE("densemax with identity and constant parameters") {
  std::mt19937_64 rng(4);
  Sizes sz;
  sz.dense_width = 6;  // = flat width for l=2, K=2
  auto p = AggregatorParams::create(Kind::densemax, 2, 2, 0, sz, rng);
  p.dense_act = Activation::identity;
  p.dense_w = Tensor::zeros({6, 6});
  for (std::size_t i = 0; i < 6; ++i) p.dense_w.at(i, i) = 1.0;
  p.dense_b = Tensor::zeros({6});

  Tape tape;
  auto ps = make_ps(tape, {Tensor::mat(3, 2, {1, 9, 2, 0, 3, 4}),
                           Tensor::mat(3, 2, {5, 1, 0, 7, 2, 2})});
  AggregatorVars vars = push_leaves(tape, p);
  Var h = aggregate(tape, p, vars, ps);
  CHECK(tape.value(h).data == std::vector<double>{5, 9, 2, 7, 3, 4});

  // zero W, constant b: paths are irrelevant
  p.dense_w = Tensor::zeros({6, 6});
  p.dense_b = Tensor::vec({1, -2, 0.5, 0, 3, -1});
  p.dense_act = Activation::tanh;
  Tape t2;
  auto ps2 = make_ps(t2, {Tensor::mat(3, 2, {1, 2, 3, 4, 5, 6})});
  AggregatorVars v2 = push_leaves(t2, p);
  Tensor out = t2.value(aggregate(t2, p, v2, ps2));
  for (std::size_t i = 0; i < 6; ++i)
    CHECK(out.data[i] == doctest::Approx(std::tanh(p.dense_b.data[i])));
}

TEST_CASE("avgpool and densemax are permutation invariant") {
  std::mt19937_64 rng(5);
  std::vector<Tensor> mats;
  for (int i = 0; i < 5; ++i) mats.push_back(random_tensor({4, 3}, rng));
  std::vector<Tensor> shuffled = mats;
  std::shuffle(shuffled.begin(), shuffled.end(), rng);

  for (Kind k : {Kind::avgpool, Kind::densemax}) {
    auto p = AggregatorParams::create(k, 3, 3, 0, {}, rng);
    Tape ta, tb;
    auto va = push_leaves(ta, p);
    auto vb = push_leaves(tb, p);
    Tensor a = ta.value(aggregate(ta, p, va, make_ps(ta, mats)));
    Tensor b = tb.value(aggregate(tb, p, vb, make_ps(tb, shuffled)));
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i)
      CHECK(a.data[i] == doctest::Approx(b.data[i]).epsilon(1e-12));
  }
}

TEST_CASE("masked paths are skipped") {
  std::mt19937_64 rng(6);
  std::vector<Tensor> three{random_tensor({3, 2}, rng), random_tensor({3, 2}, rng),
                            random_tensor({3, 2}, rng)};
  std::vector<Tensor> two{three[0], three[2]};
  for (Kind k :
       {Kind::avgpool, Kind::densemax, Kind::seqofseq, Kind::edgeconv}) {
    auto p = AggregatorParams::create(k, 2, 2, 0, {}, rng);
    Tape ta, tb;
    auto va = push_leaves(ta, p);
    auto vb = push_leaves(tb, p);
    Tensor a =
        ta.value(aggregate(ta, p, va, make_ps(ta, three, {true, false, true})));
    Tensor b = tb.value(aggregate(tb, p, vb, make_ps(tb, two)));
    for (std::size_t i = 0; i < a.size(); ++i)
      CHECK(a.data[i] == doctest::Approx(b.data[i]).epsilon(1e-12));
  }
  Tape t;
  auto p = AggregatorParams::create(Kind::avgpool, 2, 2, 0, {}, rng);
  auto ps = make_ps(t, two, {false, false});
  CHECK_THROWS(aggregate(t, p, {}, ps));
}

TEST_CASE("seqofseq zero weights give zero output") {
  std::mt19937_64 rng(7);
  auto p = AggregatorParams::create(Kind::seqofseq, 2, 2, 0, {}, rng);
  for (Tensor* t : {&p.inner.w_ih, &p.inner.w_hh, &p.inner.bias, &p.outer.w_ih,
                    &p.outer.w_hh, &p.outer.bias})
    std::fill(t->data.begin(), t->data.end(), 0.0);
  Tape tape;
  auto ps = make_ps(tape, {random_tensor({3, 2}, rng)});
  auto vars = push_leaves(tape, p);
  for (double v : tape.value(aggregate(tape, p, vars, ps)).data)
    CHECK(v == doctest::Approx(0.0));
}

TEST_CASE("seqofseq matches scripted recurrence oracle") {
  std::mt19937_64 rng(8);
  Sizes sz;
  sz.inner_lstm = 3;
  sz.outer_lstm = 4;
  auto p = AggregatorParams::create(Kind::seqofseq, 3, 2, 0, sz, rng);
  std::vector<Tensor> mats{random_tensor({4, 2}, rng),
                           random_tensor({4, 2}, rng)};

  Tape tape;
  auto vars = push_leaves(tape, p);
  Tensor got = tape.value(aggregate(tape, p, vars, make_ps(tape, mats)));

  std::vector<std::vector<double>> inner_vecs;
  for (const Tensor& m : mats)
    inner_vecs.push_back(
        colwise_max(ref_lstm(p.inner.w_ih, p.inner.w_hh, p.inner.bias, m)));
  Tensor outer_in({inner_vecs.size(), sz.inner_lstm});
  for (std::size_t i = 0; i < inner_vecs.size(); ++i)
    for (std::size_t j = 0; j < sz.inner_lstm; ++j)
      outer_in.at(i, j) = inner_vecs[i][j];
  auto expect =
      colwise_max(ref_lstm(p.outer.w_ih, p.outer.w_hh, p.outer.bias, outer_in));

  REQUIRE(got.size() == expect.size());
  for (std::size_t i = 0; i < expect.size(); ++i)
    CHECK(got.data[i] == doctest::Approx(expect[i]).epsilon(1e-12));
}

TEST_CASE("edgeconv matches scripted conv + recurrence oracle") {
  std::mt19937_64 rng(9);
  Sizes sz;
  sz.conv_filters = 3;
  sz.outer_lstm = 4;
  auto p = AggregatorParams::create(Kind::edgeconv, 2, 2, 0, sz, rng);
  p.conv_act = Activation::tanh;
  std::vector<Tensor> mats{random_tensor({3, 2}, rng),
                           random_tensor({3, 2}, rng)};

  Tape tape;
  auto vars = push_leaves(tape, p);
  Tensor got = tape.value(aggregate(tape, p, vars, make_ps(tape, mats)));

  std::vector<std::vector<double>> inner_vecs;
  for (const Tensor& m : mats) {
    std::vector<std::vector<double>> conv_rows;
    for (std::size_t t = 0; t + 1 < m.rows(); ++t) {
      std::vector<double> r(sz.conv_filters);
      for (std::size_t f = 0; f < sz.conv_filters; ++f) {
        double z = p.conv_b.data[f];
        for (std::size_t k = 0; k < 2; ++k) {
          z += p.conv_k.at(f, k) * m.at(t, k);
          z += p.conv_k.at(f, 2 + k) * m.at(t + 1, k);
        }
        r[f] = std::tanh(z);
      }
      conv_rows.push_back(r);
    }
    inner_vecs.push_back(colwise_max(conv_rows));
  }
  Tensor outer_in({inner_vecs.size(), sz.conv_filters});
  for (std::size_t i = 0; i < inner_vecs.size(); ++i)
    for (std::size_t j = 0; j < sz.conv_filters; ++j)
      outer_in.at(i, j) = inner_vecs[i][j];
  auto expect =
      colwise_max(ref_lstm(p.outer.w_ih, p.outer.w_hh, p.outer.bias, outer_in));

  REQUIRE(got.size() == expect.size());
  for (std::size_t i = 0; i < expect.size(); ++i)
    CHECK(got.data[i] == doctest::Approx(expect[i]).epsilon(1e-12));
}

TEST_CASE("edgeconv inner vector follows sliding-window oracle") {
  // K=1, kernel [1,1] over the window, identity act, path (1,2,3):
  // conv rows are [3] and [5]; max-pool gives 5.
  std::mt19937_64 rng(10);
  Sizes sz;
  sz.conv_filters = 1;
  sz.outer_lstm = 2;
  auto p = AggregatorParams::create(Kind::edgeconv, 2, 1, 0, sz, rng);
  p.conv_act = Activation::identity;
  p.conv_k = Tensor::mat(1, 2, {1, 1});
  p.conv_b = Tensor::zeros({1});
  // zero LSTM except an identity-ish input gate is hard to pin; instead use
  // the reference recurrence on the known inner vector [5].
  Tape tape;
  auto vars = push_leaves(tape, p);
  Tensor got = tape.value(
      aggregate(tape, p, vars, make_ps(tape, {Tensor::mat(3, 1, {1, 2, 3})})));
  auto expect = colwise_max(ref_lstm(p.outer.w_ih, p.outer.w_hh, p.outer.bias,
                                     Tensor::mat(1, 1, {5})));
  for (std::size_t i = 0; i < expect.size(); ++i)
    CHECK(got.data[i] == doctest::Approx(expect[i]).epsilon(1e-12));
}

TEST_CASE("edgeconv consumes edge features in the window") {
  std::mt19937_64 rng(11);
  Sizes sz;
  sz.conv_filters = 1;
  sz.outer_lstm = 2;
  auto p = AggregatorParams::create(Kind::edgeconv, 2, 1, 1, sz, rng);
  p.conv_act = Activation::identity;
  p.conv_k = Tensor::mat(1, 3, {0, 0, 1});  // reads only the edge feature
  p.conv_b = Tensor::zeros({1});

  Tape tape;
  auto ps = make_ps(tape, {Tensor::mat(3, 1, {1, 2, 3})});
  ps.edge_features = {{0.4, -0.9}};  // one feature per path edge
  auto vars = push_leaves(tape, p);
  Tensor got = tape.value(aggregate(tape, p, vars, ps));
  auto expect = colwise_max(ref_lstm(p.outer.w_ih, p.outer.w_hh, p.outer.bias,
                                     Tensor::mat(1, 1, {0.4})));  // max(0.4,-0.9)
  for (std::size_t i = 0; i < expect.size(); ++i)
    CHECK(got.data[i] == doctest::Approx(expect[i]).epsilon(1e-12));
}

TEST_CASE("finite differences through every aggregator") {
  std::mt19937_64 rng(12);
  Sizes sz;
  sz.dense_width = 4;
  sz.inner_lstm = 3;
  sz.outer_lstm = 3;
  sz.conv_filters = 3;
  for (Kind k :
       {Kind::avgpool, Kind::densemax, Kind::seqofseq, Kind::edgeconv}) {
    auto proto = AggregatorParams::create(k, 2, 2, 0, sz, rng);
    std::vector<std::pair<std::string, Tensor*>> named;
    proto.collect_params("a", named);

    // parameter list: aggregator weights then two path matrices
    std::vector<Tensor> params;
    for (auto& [n, t] : named) params.push_back(*t);
    params.push_back(random_tensor({3, 2}, rng));
    params.push_back(random_tensor({3, 2}, rng));

    auto run = [&](const std::vector<Tensor>& ps, Tape& tape, bool want_grad,
                   std::vector<Tensor>* grads) {
      AggregatorParams p = proto;
      std::vector<std::pair<std::string, Tensor*>> slots;
      p.collect_params("a", slots);
      for (std::size_t i = 0; i < slots.size(); ++i) *slots[i].second = ps[i];
      std::vector<Var> leaves;
      AggregatorVars vars = push_leaves(tape, p);
      // rebuild the leaf list in the same order as `params`
      if (k == Kind::densemax) leaves = {vars.dense_w, vars.dense_b};
      if (k == Kind::seqofseq)
        leaves = {vars.inner.w_ih, vars.inner.w_hh, vars.inner.bias,
                  vars.outer.w_ih, vars.outer.w_hh, vars.outer.bias};
      if (k == Kind::edgeconv)
        leaves = {vars.conv_k, vars.conv_b, vars.outer.w_ih, vars.outer.w_hh,
                  vars.outer.bias};
      VectorizedPathSet vps;
      for (std::size_t i = slots.size(); i < ps.size(); ++i) {
        Var m = tape.leaf(ps[i], true);
        leaves.push_back(m);
        vps.path_matrices.push_back(m);
      }
      Var h = aggregate(tape, p, vars, vps);
      Var l = tape.loss(h, Tensor::zeros({p.output_width()}),
                        leap::tensor::LossKind::mse);
      if (want_grad) {
        tape.backward(l);
        for (Var v : leaves) grads->push_back(tape.grad(v));
      }
      return tape.value(l).data[0];
    };

    double err = fd_max_rel_err(
        params,
        [&](const std::vector<Tensor>& ps) {
          Tape tape;
          return run(ps, tape, false, nullptr);
        },
        [&](const std::vector<Tensor>& ps) {
          Tape tape;
          std::vector<Tensor> grads;
          run(ps, tape, true, &grads);
          return grads;
        });
    CHECK(err < 1e-4);
  }
}
