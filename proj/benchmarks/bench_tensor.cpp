#include <benchmark/benchmark.h>

#include <random>

#include "leap/tensor.hpp"

namespace {

using namespace leap::tensor;

Tensor randn(std::vector<std::size_t> shape, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-0.5, 0.5);
  Tensor t(std::move(shape));
  for (double& v : t.data) v = dist(rng);
  return t;
}

void BM_lstm_forward_backward(benchmark::State& state) {
  std::mt19937_64 rng(1);
  std::size_t T = static_cast<std::size_t>(state.range(0));
  std::size_t d = 32, h = 32;
  Tensor w_ih = randn({4 * h, d}, rng), w_hh = randn({4 * h, h}, rng),
         bias = randn({4 * h}, rng), x = randn({T, d}, rng);
  for (auto _ : state) {
    Tape tape;
    LstmWeights w{tape.leaf(w_ih, true), tape.leaf(w_hh, true),
                  tape.leaf(bias, true)};
    Var out = tape.pool_rows(tape.lstm_sequence(tape.leaf(x), w), PoolMode::max);
    Var l = tape.loss(out, Tensor::zeros({h}), LossKind::mse);
    tape.backward(l);
    benchmark::DoNotOptimize(tape.grad(w.w_ih));
  }
}
BENCHMARK(BM_lstm_forward_backward)->Arg(4)->Arg(8)->Arg(16);

void BM_conv_forward_backward(benchmark::State& state) {
  std::mt19937_64 rng(2);
  std::size_t T = 5, d = 32, f = 32;
  Tensor k = randn({f, 2 * d}, rng), b = randn({f}, rng), x = randn({T, d}, rng);
  for (auto _ : state) {
    Tape tape;
    Var kv = tape.leaf(k, true), bv = tape.leaf(b, true);
    Var out = tape.pool_rows(
        tape.conv1d_k2(tape.leaf(x), kv, bv, Activation::relu), PoolMode::max);
    Var l = tape.loss(out, Tensor::zeros({f}), LossKind::mse);
    tape.backward(l);
    benchmark::DoNotOptimize(tape.grad(kv));
  }
}
BENCHMARK(BM_conv_forward_backward);

void BM_affine_chain(benchmark::State& state) {
  std::mt19937_64 rng(3);
  Tensor w1 = randn({64, 128}, rng), b1 = randn({64}, rng);
  Tensor w2 = randn({1, 64}, rng), b2 = randn({1}, rng);
  Tensor x = randn({128}, rng);
  for (auto _ : state) {
    Tape tape;
    Var h = tape.affine(tape.leaf(x), tape.leaf(w1, true), tape.leaf(b1, true),
                        Activation::relu);
    Var rho = tape.affine(h, tape.leaf(w2, true), tape.leaf(b2, true),
                          Activation::sigmoid);
    Var l = tape.loss(rho, Tensor::vec({1.0}), LossKind::bce);
    tape.backward(l);
    benchmark::DoNotOptimize(tape.value(l));
  }
}
BENCHMARK(BM_affine_chain);

}  // namespace
