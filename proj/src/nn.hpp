#ifndef STK_NN_HPP
#define STK_NN_HPP

#include <cstdint>
#include <vector>

#include "rng.hpp"
#include "tape.hpp"
#include "tensor.hpp"

namespace stk {

// Fan-in-scaled uniform init, U(-1/sqrt(fan_in), +1/sqrt(fan_in)).
Tensor init_uniform(std::vector<std::size_t> shape, std::size_t fan_in, Rng& rng);

// Standard LSTM cell. Weights are packed in gate order [input, forget, cell,
// output]: w_x {4H, in}, w_h {4H, H}, bias {4H}. Forget-gate biases start
// at 1, every other bias at 0.
struct LstmWeights {
  Tensor w_x;
  Tensor w_h;
  Tensor bias;

  std::size_t hidden() const { return w_h.shape[1]; }
  std::size_t input() const { return w_x.shape[1]; }

  static LstmWeights init(std::size_t input, std::size_t hidden, Rng& rng);
};

// Tape-side node ids for one cell's weights.
struct LstmNodes {
  Tape::NodeId w_x;
  Tape::NodeId w_h;
  Tape::NodeId bias;
};

struct LstmStepNodes {
  Tape::NodeId h;
  Tape::NodeId c;
};

// One differentiable step: returns the new (h, c).
LstmStepNodes lstm_step(Tape& tape, const LstmNodes& w, Tape::NodeId x, Tape::NodeId h,
                        Tape::NodeId c);

// Plain-math state used by autoregressive sampling, where recording a tape
// would be wasted work.
struct LstmState {
  std::vector<double> h;
  std::vector<double> c;
};

LstmState lstm_forward(const LstmWeights& w, const std::vector<double>& x,
                       const LstmState& state);

// y = W x + b without a tape.
std::vector<double> affine_forward(const Tensor& w, const Tensor& b,
                                   const std::vector<double>& x);

// y = W x + b on the tape.
Tape::NodeId affine_node(Tape& tape, Tape::NodeId w, Tape::NodeId b, Tape::NodeId x);

}  // namespace stk

#endif
