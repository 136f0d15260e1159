#ifndef STK_OPTIM_HPP
#define STK_OPTIM_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "tensor.hpp"

namespace stk {

// Named parameter tensors in a stable insertion order. The order drives both
// the optimizer state layout and the checkpoint layout, so training runs and
// saved models are reproducible.
class ParamSet {
public:
  Tensor& add(const std::string& name, Tensor t);
  Tensor& at(const std::string& name);
  const Tensor& at(const std::string& name) const;
  bool has(const std::string& name) const;
  std::size_t size() const { return items_.size(); }

  std::vector<std::pair<std::string, Tensor>>& items() { return items_; }
  const std::vector<std::pair<std::string, Tensor>>& items() const { return items_; }

private:
  std::vector<std::pair<std::string, Tensor>> items_;
};

enum class OptKind { Sgd, Adam };

struct OptimizerState {
  OptKind kind = OptKind::Sgd;
  double learning_rate = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t step_count = 0;
  std::vector<Tensor> m;  // Adam first moments, one per parameter
  std::vector<Tensor> v;  // Adam second moments

  static OptimizerState sgd(double lr);
  static OptimizerState adam(double lr);
};

// One update over params in order. grads must align with params; Adam moments
// are allocated lazily on the first step and shape-checked afterwards.
void optimizer_step(OptimizerState& state, ParamSet& params,
                    const std::vector<Tensor>& grads);

}  // namespace stk

#endif
