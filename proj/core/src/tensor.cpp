#include "leap/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace leap::tensor {

std::size_t shape_size(const std::vector<std::size_t>& s) {
  return std::accumulate(s.begin(), s.end(), std::size_t{1},
                         std::multiplies<>());
}

Tensor::Tensor(std::vector<std::size_t> s)
    : shape(std::move(s)), data(shape_size(shape), 0.0) {}

Tensor::Tensor(std::vector<std::size_t> s, std::vector<double> d)
    : shape(std::move(s)), data(std::move(d)) {
  if (data.size() != shape_size(shape))
    throw std::invalid_argument("tensor: data length does not match shape");
}

Tensor Tensor::scalar(double v) { return Tensor({}, {v}); }

Tensor Tensor::vec(std::vector<double> d) {
  std::size_t n = d.size();
  return Tensor({n}, std::move(d));
}

Tensor Tensor::mat(std::size_t rows, std::size_t cols, std::vector<double> d) {
  return Tensor({rows, cols}, std::move(d));
}

Tensor Tensor::zeros(std::vector<std::size_t> s) { return Tensor(std::move(s)); }

Activation activation_from_string(const std::string& s) {
  if (s == "identity") return Activation::identity;
  if (s == "relu") return Activation::relu;
  if (s == "sigmoid") return Activation::sigmoid;
  if (s == "tanh") return Activation::tanh;
  throw std::invalid_argument("unknown activation: " + s);
}

namespace {

double apply_act(double x, Activation a) {
  switch (a) {
    case Activation::identity: return x;
    case Activation::relu: return x > 0.0 ? x : 0.0;
    case Activation::sigmoid: return 1.0 / (1.0 + std::exp(-x));
    case Activation::tanh: return std::tanh(x);
  }
  return x;
}

// Derivative in terms of input x and output y.
double act_deriv(double x, double y, Activation a) {
  switch (a) {
    case Activation::identity: return 1.0;
    case Activation::relu: return x > 0.0 ? 1.0 : 0.0;
    case Activation::sigmoid: return y * (1.0 - y);
    case Activation::tanh: return 1.0 - y * y;
  }
  return 1.0;
}

constexpr double kLogClamp = 1e-12;

}  // namespace

void Tape::check_finite(const Tensor& t, const char* op) const {
  for (double v : t.data)
    if (!std::isfinite(v))
      throw std::runtime_error(std::string("non-finite value produced by ") + op);
}

Tape::Node& Tape::node(Var v) {
  if (!v.valid() || v.id >= nodes_.size())
    throw std::out_of_range("invalid tape var");
  return nodes_[v.id];
}

const Tape::Node& Tape::node(Var v) const {
  if (!v.valid() || v.id >= nodes_.size())
    throw std::out_of_range("invalid tape var");
  return nodes_[v.id];
}

Var Tape::push(Tensor value, std::function<void(Tape&, std::size_t)> backprop) {
  Node n;
  n.value = std::move(value);
  n.backprop = std::move(backprop);
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

Var Tape::leaf(Tensor value, bool requires_grad) {
  check_finite(value, "leaf");
  Var v = push(std::move(value), nullptr);
  nodes_[v.id].requires_grad = requires_grad;
  return v;
}

Var Tape::add(Var a, Var b) {
  const Tensor& ta = value(a);
  const Tensor& tb = value(b);
  if (!ta.same_shape(tb)) throw std::invalid_argument("add: shape mismatch");
  Tensor out = ta;
  for (std::size_t i = 0; i < out.size(); ++i) out.data[i] += tb.data[i];
  check_finite(out, "add");
  return push(std::move(out), [a, b](Tape& t, std::size_t self) {
    const Tensor& g = t.nodes_[self].grad;
    Tensor& ga = t.nodes_[a.id].grad;
    Tensor& gb = t.nodes_[b.id].grad;
    for (std::size_t i = 0; i < g.size(); ++i) {
      ga.data[i] += g.data[i];
      gb.data[i] += g.data[i];
    }
  });
}

Var Tape::mul(Var a, Var b) {
  const Tensor& ta = value(a);
  const Tensor& tb = value(b);
  if (!ta.same_shape(tb)) throw std::invalid_argument("mul: shape mismatch");
  Tensor out = ta;
  for (std::size_t i = 0; i < out.size(); ++i) out.data[i] *= tb.data[i];
  check_finite(out, "mul");
  return push(std::move(out), [a, b](Tape& t, std::size_t self) {
    const Tensor& g = t.nodes_[self].grad;
    const Tensor& va = t.nodes_[a.id].value;
    const Tensor& vb = t.nodes_[b.id].value;
    Tensor& ga = t.nodes_[a.id].grad;
    Tensor& gb = t.nodes_[b.id].grad;
    for (std::size_t i = 0; i < g.size(); ++i) {
      ga.data[i] += g.data[i] * vb.data[i];
      gb.data[i] += g.data[i] * va.data[i];
    }
  });
}

Var Tape::scale(Var a, double k) {
  Tensor out = value(a);
  for (double& v : out.data) v *= k;
  check_finite(out, "scale");
  return push(std::move(out), [a, k](Tape& t, std::size_t self) {
    const Tensor& g = t.nodes_[self].grad;
    Tensor& ga = t.nodes_[a.id].grad;
    for (std::size_t i = 0; i < g.size(); ++i) ga.data[i] += k * g.data[i];
  });
}

Var Tape::matvec(Var w, Var x) {
  const Tensor& tw = value(w);
  const Tensor& tx = value(x);
  if (tw.rank() != 2 || tx.rank() != 1 || tw.cols() != tx.size())
    throw std::invalid_argument("matvec: shape mismatch");
  std::size_t m = tw.rows(), n = tw.cols();
  Tensor out({m});
  for (std::size_t r = 0; r < m; ++r) {
    double acc = 0.0;
    const double* wr = tw.data.data() + r * n;
    for (std::size_t c = 0; c < n; ++c) acc += wr[c] * tx.data[c];
    out.data[r] = acc;
  }
  check_finite(out, "matvec");
  return push(std::move(out), [w, x, m, n](Tape& t, std::size_t self) {
    const Tensor& g = t.nodes_[self].grad;
    const Tensor& vw = t.nodes_[w.id].value;
    const Tensor& vx = t.nodes_[x.id].value;
    Tensor& gw = t.nodes_[w.id].grad;
    Tensor& gx = t.nodes_[x.id].grad;
    for (std::size_t r = 0; r < m; ++r) {
      double gr = g.data[r];
      if (gr == 0.0) continue;
      const double* wr = vw.data.data() + r * n;
      double* gwr = gw.data.data() + r * n;
      for (std::size_t c = 0; c < n; ++c) {
        gwr[c] += gr * vx.data[c];
        gx.data[c] += gr * wr[c];
      }
    }
  });
}

Var Tape::activate(Var x, Activation act) {
  Tensor out = value(x);
  for (double& v : out.data) v = apply_act(v, act);
  check_finite(out, "activate");
  return push(std::move(out), [x, act](Tape& t, std::size_t self) {
    const Tensor& g = t.nodes_[self].grad;
    const Tensor& y = t.nodes_[self].value;
    const Tensor& vx = t.nodes_[x.id].value;
    Tensor& gx = t.nodes_[x.id].grad;
    for (std::size_t i = 0; i < g.size(); ++i)
      gx.data[i] += g.data[i] * act_deriv(vx.data[i], y.data[i], act);
  });
}

Var Tape::slice(Var x, std::size_t begin, std::size_t len) {
  const Tensor& tx = value(x);
  if (tx.rank() != 1 || begin + len > tx.size())
    throw std::invalid_argument("slice: out of range");
  Tensor out({len});
  std::copy_n(tx.data.begin() + begin, len, out.data.begin());
  return push(std::move(out), [x, begin, len](Tape& t, std::size_t self) {
    const Tensor& g = t.nodes_[self].grad;
    Tensor& gx = t.nodes_[x.id].grad;
    for (std::size_t i = 0; i < len; ++i) gx.data[begin + i] += g.data[i];
  });
}

Var Tape::concat(std::span<const Var> xs) {
  if (xs.empty()) throw std::invalid_argument("concat: empty input list");
  std::size_t total = 0;
  for (Var v : xs) {
    if (value(v).rank() != 1)
      throw std::invalid_argument("concat: rank-1 inputs required");
    total += value(v).size();
  }
  Tensor out({total});
  std::size_t off = 0;
  for (Var v : xs) {
    const Tensor& tv = value(v);
    std::copy(tv.data.begin(), tv.data.end(), out.data.begin() + off);
    off += tv.size();
  }
  std::vector<Var> inputs(xs.begin(), xs.end());
  return push(std::move(out), [inputs](Tape& t, std::size_t self) {
    const Tensor& g = t.nodes_[self].grad;
    std::size_t off = 0;
    for (Var v : inputs) {
      Tensor& gv = t.nodes_[v.id].grad;
      for (std::size_t i = 0; i < gv.size(); ++i) gv.data[i] += g.data[off + i];
      off += gv.size();
    }
  });
}

Var Tape::concat(std::initializer_list<Var> xs) {
  return concat(std::span<const Var>(xs.begin(), xs.size()));
}

Var Tape::stack_rows(std::span<const Var> rows) {
  if (rows.empty()) throw std::invalid_argument("stack_rows: empty input list");
  std::size_t c = value(rows[0]).size();
  for (Var v : rows)
    if (value(v).rank() != 1 || value(v).size() != c)
      throw std::invalid_argument("stack_rows: rows must be equal-width vectors");
  Tensor out({rows.size(), c});
  for (std::size_t r = 0; r < rows.size(); ++r)
    std::copy(value(rows[r]).data.begin(), value(rows[r]).data.end(),
              out.data.begin() + r * c);
  std::vector<Var> inputs(rows.begin(), rows.end());
  return push(std::move(out), [inputs, c](Tape& t, std::size_t self) {
    const Tensor& g = t.nodes_[self].grad;
    for (std::size_t r = 0; r < inputs.size(); ++r) {
      Tensor& gv = t.nodes_[inputs[r].id].grad;
      for (std::size_t i = 0; i < c; ++i) gv.data[i] += g.data[r * c + i];
    }
  });
}

Var Tape::pool_rows(Var m, PoolMode mode, const std::vector<bool>* mask) {
  const Tensor& tm = value(m);
  if (tm.rank() != 2) throw std::invalid_argument("pool_rows: matrix required");
  std::size_t r = tm.rows(), c = tm.cols();
  if (mask && mask->size() != r)
    throw std::invalid_argument("pool_rows: mask length mismatch");
  std::vector<std::size_t> live;
  for (std::size_t i = 0; i < r; ++i)
    if (!mask || (*mask)[i]) live.push_back(i);
  if (live.empty()) throw std::invalid_argument("pool_rows: all rows masked");

  Tensor out({c});
  if (mode == PoolMode::avg) {
    for (std::size_t i : live)
      for (std::size_t j = 0; j < c; ++j) out.data[j] += tm.at(i, j);
    for (double& v : out.data) v /= static_cast<double>(live.size());
    check_finite(out, "pool_rows");
    return push(std::move(out), [m, live, c](Tape& t, std::size_t self) {
      const Tensor& g = t.nodes_[self].grad;
      Tensor& gm = t.nodes_[m.id].grad;
      double inv = 1.0 / static_cast<double>(live.size());
      for (std::size_t i : live)
        for (std::size_t j = 0; j < c; ++j)
          gm.data[i * c + j] += g.data[j] * inv;
    });
  }

  // max: ties route the gradient to the first maximal row.
  std::vector<std::size_t> argmax(c, live[0]);
  for (std::size_t j = 0; j < c; ++j) {
    double best = tm.at(live[0], j);
    for (std::size_t i : live) {
      if (tm.at(i, j) > best) {
        best = tm.at(i, j);
        argmax[j] = i;
      }
    }
    out.data[j] = best;
  }
  check_finite(out, "pool_rows");
  return push(std::move(out), [m, argmax, c](Tape& t, std::size_t self) {
    const Tensor& g = t.nodes_[self].grad;
    Tensor& gm = t.nodes_[m.id].grad;
    for (std::size_t j = 0; j < c; ++j)
      gm.data[argmax[j] * c + j] += g.data[j];
  });
}

Var Tape::row(Var m, std::size_t r) {
  const Tensor& tm = value(m);
  if (tm.rank() != 2 || r >= tm.rows())
    throw std::invalid_argument("row: out of range");
  std::size_t c = tm.cols();
  Tensor out({c});
  std::copy_n(tm.data.begin() + r * c, c, out.data.begin());
  return push(std::move(out), [m, r, c](Tape& t, std::size_t self) {
    const Tensor& g = t.nodes_[self].grad;
    Tensor& gm = t.nodes_[m.id].grad;
    for (std::size_t j = 0; j < c; ++j) gm.data[r * c + j] += g.data[j];
  });
}

Var Tape::flatten(Var m) {
  const Tensor& tm = value(m);
  if (tm.rank() != 2) throw std::invalid_argument("flatten: matrix required");
  Tensor out({tm.size()}, tm.data);
  return push(std::move(out), [m](Tape& t, std::size_t self) {
    const Tensor& g = t.nodes_[self].grad;
    Tensor& gm = t.nodes_[m.id].grad;
    for (std::size_t i = 0; i < g.size(); ++i) gm.data[i] += g.data[i];
  });
}

Var Tape::affine(Var x, Var w, Var b, Activation act) {
  return activate(add(matvec(w, x), b), act);
}

Var Tape::lstm_sequence(Var x_seq, const LstmWeights& w) {
  const Tensor& x = value(x_seq);
  if (x.rank() != 2 || x.rows() < 1)
    throw std::invalid_argument("lstm_sequence: [T x d] input required");
  const Tensor& w_ih = value(w.w_ih);
  const Tensor& w_hh = value(w.w_hh);
  const Tensor& bias = value(w.bias);
  std::size_t h = w_hh.cols();
  if (w_ih.rows() != 4 * h || w_hh.rows() != 4 * h || bias.size() != 4 * h ||
      w_ih.cols() != x.cols())
    throw std::invalid_argument("lstm_sequence: weight shape mismatch");
  // Copy T before pushing nodes: pushes may reallocate and invalidate `x`.
  std::size_t T = x.rows();

  Var h_prev = leaf(Tensor::zeros({h}));
  Var c_prev = leaf(Tensor::zeros({h}));
  std::vector<Var> states;
  states.reserve(T);
  for (std::size_t t = 0; t < T; ++t) {
    Var xt = row(x_seq, t);
    Var gates = add(add(matvec(w.w_ih, xt), matvec(w.w_hh, h_prev)), w.bias);
    Var i_g = activate(slice(gates, 0, h), Activation::sigmoid);
    Var f_g = activate(slice(gates, h, h), Activation::sigmoid);
    Var g_g = activate(slice(gates, 2 * h, h), Activation::tanh);
    Var o_g = activate(slice(gates, 3 * h, h), Activation::sigmoid);
    Var c_t = add(mul(f_g, c_prev), mul(i_g, g_g));
    Var h_t = mul(o_g, activate(c_t, Activation::tanh));
    states.push_back(h_t);
    h_prev = h_t;
    c_prev = c_t;
  }
  return stack_rows(states);
}

Var Tape::conv1d_k2(Var x_seq, Var kernel, Var bias, Activation act) {
  const Tensor& x = value(x_seq);
  if (x.rank() != 2 || x.rows() < 2)
    throw std::invalid_argument("conv1d_k2: at least two timesteps required");
  const Tensor& k = value(kernel);
  if (k.rank() != 2 || k.cols() != 2 * x.cols())
    throw std::invalid_argument("conv1d_k2: kernel width must be 2d");
  std::size_t T = x.rows();  // pushes below may invalidate `x`
  std::vector<Var> outs;
  outs.reserve(T - 1);
  for (std::size_t t = 0; t + 1 < T; ++t) {
    Var window = concat({row(x_seq, t), row(x_seq, t + 1)});
    outs.push_back(affine(window, kernel, bias, act));
  }
  return stack_rows(outs);
}

Var Tape::loss(Var pred, const Tensor& target, LossKind kind) {
  const Tensor& p = value(pred);
  if (!p.same_shape(target)) throw std::invalid_argument("loss: shape mismatch");
  std::size_t n = p.size();
  if (n == 0) throw std::invalid_argument("loss: empty prediction");
  double acc = 0.0;
  if (kind == LossKind::bce) {
    for (std::size_t i = 0; i < n; ++i) {
      double pi = std::clamp(p.data[i], kLogClamp, 1.0 - kLogClamp);
      double ti = target.data[i];
      acc += -(ti * std::log(pi) + (1.0 - ti) * std::log(1.0 - pi));
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      double d = p.data[i] - target.data[i];
      acc += d * d;
    }
  }
  Tensor out = Tensor::scalar(acc / static_cast<double>(n));
  check_finite(out, "loss");
  Tensor tgt = target;
  return push(std::move(out), [pred, tgt, kind, n](Tape& t, std::size_t self) {
    double g = t.nodes_[self].grad.data[0] / static_cast<double>(n);
    const Tensor& p = t.nodes_[pred.id].value;
    Tensor& gp = t.nodes_[pred.id].grad;
    for (std::size_t i = 0; i < n; ++i) {
      if (kind == LossKind::bce) {
        double pi = std::clamp(p.data[i], kLogClamp, 1.0 - kLogClamp);
        gp.data[i] += g * (-tgt.data[i] / pi + (1.0 - tgt.data[i]) / (1.0 - pi));
      } else {
        gp.data[i] += g * 2.0 * (p.data[i] - tgt.data[i]);
      }
    }
  });
}

void Tape::backward(Var loss_node) {
  if (backward_done_)
    throw std::runtime_error("backward called twice without a new forward");
  const Tensor& lv = value(loss_node);
  if (lv.size() != 1)
    throw std::invalid_argument("backward: loss must be a scalar");
  for (Node& n : nodes_) n.grad = Tensor::zeros(n.value.shape);
  nodes_[loss_node.id].grad.data[0] = 1.0;
  for (std::size_t i = loss_node.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.backprop) n.backprop(*this, i);
  }
  backward_done_ = true;
}

const Tensor& Tape::value(Var v) const { return node(v).value; }

const Tensor& Tape::grad(Var v) const {
  if (!backward_done_) throw std::runtime_error("grad read before backward");
  return node(v).grad;
}

void AdamState::init(const std::vector<const Tensor*>& params) {
  step = 0;
  m.clear();
  v.clear();
  for (const Tensor* p : params) {
    m.push_back(Tensor::zeros(p->shape));
    v.push_back(Tensor::zeros(p->shape));
  }
}

void adam_step(std::vector<Tensor*>& params,
               const std::vector<const Tensor*>& grads, AdamState& state) {
  if (params.size() != grads.size() || params.size() != state.m.size())
    throw std::invalid_argument("adam_step: list size mismatch");
  ++state.step;
  double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor& p = *params[k];
    const Tensor& g = *grads[k];
    Tensor& m = state.m[k];
    Tensor& v = state.v[k];
    for (std::size_t i = 0; i < p.size(); ++i) {
      m.data[i] = state.beta1 * m.data[i] + (1.0 - state.beta1) * g.data[i];
      v.data[i] = state.beta2 * v.data[i] + (1.0 - state.beta2) * g.data[i] * g.data[i];
      double mhat = m.data[i] / bc1;
      double vhat = v.data[i] / bc2;
      p.data[i] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
    }
  }
}

void adam_step_rows(Tensor& param, const std::vector<std::size_t>& row_ids,
                    const std::vector<Tensor>& row_grads, Tensor& m, Tensor& v,
                    long long step, double lr, double beta1, double beta2,
                    double eps) {
  if (row_ids.size() != row_grads.size())
    throw std::invalid_argument("adam_step_rows: list size mismatch");
  std::size_t c = param.cols();
  double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step));
  double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step));
  for (std::size_t k = 0; k < row_ids.size(); ++k) {
    std::size_t r = row_ids[k];
    const Tensor& g = row_grads[k];
    for (std::size_t j = 0; j < c; ++j) {
      std::size_t i = r * c + j;
      m.data[i] = beta1 * m.data[i] + (1.0 - beta1) * g.data[j];
      v.data[i] = beta2 * v.data[i] + (1.0 - beta2) * g.data[j] * g.data[j];
      double mhat = m.data[i] / bc1;
      double vhat = v.data[i] / bc2;
      param.data[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
  }
}

}  // namespace leap::tensor
