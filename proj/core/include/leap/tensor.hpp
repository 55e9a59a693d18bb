#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace leap::tensor {

/// Dense row-major array of doubles, rank 0 (scalar), 1 or 2.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> s);
  Tensor(std::vector<std::size_t> s, std::vector<double> d);

  static Tensor scalar(double v);
  static Tensor vec(std::vector<double> d);
  static Tensor mat(std::size_t rows, std::size_t cols, std::vector<double> d);
  static Tensor zeros(std::vector<std::size_t> s);

  std::size_t size() const { return data.size(); }
  std::size_t rank() const { return shape.size(); }
  std::size_t rows() const { return shape.at(0); }
  std::size_t cols() const { return shape.at(1); }

  double& at(std::size_t i) { return data[i]; }
  double at(std::size_t i) const { return data[i]; }
  double& at(std::size_t r, std::size_t c) { return data[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols() + c]; }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }
};

std::size_t shape_size(const std::vector<std::size_t>& s);

enum class Activation { identity, relu, sigmoid, tanh };
enum class PoolMode { max, avg };
enum class LossKind { bce, mse };

Activation activation_from_string(const std::string& s);

/// Handle to a node on a Tape.
struct Var {
  std::size_t id = static_cast<std::size_t>(-1);
  bool valid() const { return id != static_cast<std::size_t>(-1); }
};

/// LSTM cell weights: input/forget/cell/output gates stacked in that order.
/// w_ih is [4h x d], w_hh is [4h x h], bias is [4h].
struct LstmWeights {
  Var w_ih, w_hh, bias;
};

/// Dynamic reverse-mode tape. Nodes are appended in forward order, so
/// reverse index order is a valid topological order for backward.
class Tape {
 public:
  Var leaf(Tensor value, bool requires_grad = false);

  // Elementwise and linear-algebra primitives. Every op validates shapes
  // and checks the forward result for NaN/Inf.
  Var add(Var a, Var b);
  Var mul(Var a, Var b);
  Var scale(Var a, double k);
  Var matvec(Var w, Var x);            // [m x n] * [n] -> [m]
  Var activate(Var x, Activation act); // elementwise
  Var slice(Var x, std::size_t begin, std::size_t len); // rank-1 slice
  Var concat(std::span<const Var> xs);
  Var concat(std::initializer_list<Var> xs);
  Var stack_rows(std::span<const Var> rows); // k vectors of width c -> [k x c]
  Var pool_rows(Var m, PoolMode mode, const std::vector<bool>* mask = nullptr);
  Var row(Var m, std::size_t r); // extract row of a matrix as a vector
  Var flatten(Var m);            // [r x c] -> [r*c], row-major

  // Composite ops used by the model.
  Var affine(Var x, Var w, Var b, Activation act);
  Var lstm_sequence(Var x_seq, const LstmWeights& w); // [T x d] -> [T x h]
  Var conv1d_k2(Var x_seq, Var kernel, Var bias, Activation act); // [T x d] -> [(T-1) x f]
  Var loss(Var pred, const Tensor& target, LossKind kind); // -> scalar

  /// Seeds d(loss)=1 and propagates to every leaf with requires_grad.
  /// Calling twice without a fresh forward is an error.
  void backward(Var loss_node);

  const Tensor& value(Var v) const;
  const Tensor& grad(Var v) const;

  std::size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    // Propagates this node's grad into its inputs' grads.
    std::function<void(Tape&, std::size_t)> backprop;
  };

  Var push(Tensor value, std::function<void(Tape&, std::size_t)> backprop);
  Node& node(Var v);
  const Node& node(Var v) const;
  void check_finite(const Tensor& t, const char* op) const;

  std::vector<Node> nodes_;
  bool backward_done_ = false;

  friend struct TapeAccess;
};

/// Adam optimizer state for a fixed list of parameter tensors.
struct AdamState {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long long step = 0;
  std::vector<Tensor> m;
  std::vector<Tensor> v;

  void init(const std::vector<const Tensor*>& params);
};

/// One Adam update over parallel lists of parameters and gradients.
void adam_step(std::vector<Tensor*>& params,
               const std::vector<const Tensor*>& grads, AdamState& state);

/// Sparse variant for an embedding matrix: only the listed rows are updated,
/// with the shared (already advanced) step count used for bias correction.
void adam_step_rows(Tensor& param, const std::vector<std::size_t>& row_ids,
                    const std::vector<Tensor>& row_grads, Tensor& m, Tensor& v,
                    long long step, double lr, double beta1, double beta2,
                    double eps);

}  // namespace leap::tensor
