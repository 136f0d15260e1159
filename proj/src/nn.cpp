#include "nn.hpp"

#include <cmath>

#include "error.hpp"

namespace stk {

Tensor init_uniform(std::vector<std::size_t> shape, std::size_t fan_in, Rng& rng) {
  Tensor t = Tensor::zeros(std::move(shape));
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (double& v : t.data) v = rng.uniform(-bound, bound);
  return t;
}

LstmWeights LstmWeights::init(std::size_t input, std::size_t hidden, Rng& rng) {
  LstmWeights w;
  w.w_x = init_uniform({4 * hidden, input}, input, rng);
  w.w_h = init_uniform({4 * hidden, hidden}, hidden, rng);
  w.bias = Tensor::zeros({4 * hidden});
  for (std::size_t i = hidden; i < 2 * hidden; ++i) w.bias.data[i] = 1.0;
  return w;
}

LstmStepNodes lstm_step(Tape& tape, const LstmNodes& w, Tape::NodeId x, Tape::NodeId h,
                        Tape::NodeId c) {
  const std::size_t hidden = tape.value(w.w_h).shape[1];
  const Tape::NodeId gates =
      tape.add(tape.add(tape.matmul(w.w_x, x), tape.matmul(w.w_h, h)), w.bias);
  const Tape::NodeId gate_i = tape.sigmoid(tape.slice(gates, 0, hidden));
  const Tape::NodeId gate_f = tape.sigmoid(tape.slice(gates, hidden, hidden));
  const Tape::NodeId gate_g = tape.tanh(tape.slice(gates, 2 * hidden, hidden));
  const Tape::NodeId gate_o = tape.sigmoid(tape.slice(gates, 3 * hidden, hidden));
  const Tape::NodeId c_new = tape.add(tape.mul(gate_f, c), tape.mul(gate_i, gate_g));
  const Tape::NodeId h_new = tape.mul(gate_o, tape.tanh(c_new));
  return {h_new, c_new};
}

namespace {

inline double sigmoid_scalar(double v) { return 1.0 / (1.0 + std::exp(-v)); }

}  // namespace

LstmState lstm_forward(const LstmWeights& w, const std::vector<double>& x,
                       const LstmState& state) {
  const std::size_t hidden = w.hidden();
  if (x.size() != w.input())
    fail_validation("lstm_forward: input length " + std::to_string(x.size()) +
                    " does not match weights (" + std::to_string(w.input()) + ")");
  if (state.h.size() != hidden || state.c.size() != hidden)
    fail_validation("lstm_forward: state size does not match hidden size");

  // Same summation order as the tape path: w_x x first, then w_h h, then bias.
  std::vector<double> gates(4 * hidden);
  for (std::size_t r = 0; r < 4 * hidden; ++r) {
    double acc = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) acc += w.w_x.data[r * x.size() + k] * x[k];
    double acc_h = 0.0;
    for (std::size_t k = 0; k < hidden; ++k) acc_h += w.w_h.data[r * hidden + k] * state.h[k];
    gates[r] = acc + acc_h + w.bias.data[r];
  }
  LstmState out;
  out.h.resize(hidden);
  out.c.resize(hidden);
  for (std::size_t i = 0; i < hidden; ++i) {
    const double gi = sigmoid_scalar(gates[i]);
    const double gf = sigmoid_scalar(gates[hidden + i]);
    const double gg = std::tanh(gates[2 * hidden + i]);
    const double go = sigmoid_scalar(gates[3 * hidden + i]);
    out.c[i] = gf * state.c[i] + gi * gg;
    out.h[i] = go * std::tanh(out.c[i]);
  }
  return out;
}

std::vector<double> affine_forward(const Tensor& w, const Tensor& b,
                                   const std::vector<double>& x) {
  if (w.rank() != 2 || b.rank() != 1 || w.shape[0] != b.shape[0] || w.shape[1] != x.size())
    fail_validation("affine_forward: shape mismatch " + w.shape_str() + ", " +
                    b.shape_str() + ", input " + std::to_string(x.size()));
  std::vector<double> y(w.shape[0]);
  for (std::size_t r = 0; r < w.shape[0]; ++r) {
    double acc = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) acc += w.data[r * x.size() + k] * x[k];
    y[r] = acc + b.data[r];
  }
  return y;
}

Tape::NodeId affine_node(Tape& tape, Tape::NodeId w, Tape::NodeId b, Tape::NodeId x) {
  return tape.add(tape.matmul(w, x), b);
}

}  // namespace stk
