#include "optim.hpp"

#include <cmath>

#include "error.hpp"

namespace stk {

Tensor& ParamSet::add(const std::string& name, Tensor t) {
  if (has(name)) fail_validation("parameter '" + name + "' already registered");
  items_.emplace_back(name, std::move(t));
  return items_.back().second;
}

Tensor& ParamSet::at(const std::string& name) {
  for (auto& [n, t] : items_)
    if (n == name) return t;
  fail_validation("unknown parameter '" + name + "'");
}

const Tensor& ParamSet::at(const std::string& name) const {
  for (const auto& [n, t] : items_)
    if (n == name) return t;
  fail_validation("unknown parameter '" + name + "'");
}

bool ParamSet::has(const std::string& name) const {
  for (const auto& [n, t] : items_)
    if (n == name) return true;
  return false;
}

OptimizerState OptimizerState::sgd(double lr) {
  OptimizerState s;
  s.kind = OptKind::Sgd;
  s.learning_rate = lr;
  return s;
}

OptimizerState OptimizerState::adam(double lr) {
  OptimizerState s;
  s.kind = OptKind::Adam;
  s.learning_rate = lr;
  return s;
}

void optimizer_step(OptimizerState& state, ParamSet& params,
                    const std::vector<Tensor>& grads) {
  if (grads.size() != params.size())
    fail_validation("optimizer_step: " + std::to_string(grads.size()) + " gradients for " +
                    std::to_string(params.size()) + " parameters");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params.items()[i].second.same_shape(grads[i]))
      fail_validation("optimizer_step: gradient shape " + grads[i].shape_str() +
                      " does not match parameter '" + params.items()[i].first + "' " +
                      params.items()[i].second.shape_str());
  }

  if (state.kind == OptKind::Sgd) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      Tensor& p = params.items()[i].second;
      for (std::size_t j = 0; j < p.numel(); ++j)
        p.data[j] -= state.learning_rate * grads[i].data[j];
    }
    ++state.step_count;
    return;
  }

  // Adam with standard bias correction.
  if (state.m.empty()) {
    for (const auto& [name, t] : params.items()) {
      (void)name;
      state.m.push_back(Tensor::zeros(t.shape));
      state.v.push_back(Tensor::zeros(t.shape));
    }
  }
  if (state.m.size() != params.size())
    fail_validation("optimizer_step: Adam state does not match parameter count");
  ++state.step_count;
  const double t = static_cast<double>(state.step_count);
  const double bc1 = 1.0 - std::pow(state.beta1, t);
  const double bc2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = params.items()[i].second;
    Tensor& m = state.m[i];
    Tensor& v = state.v[i];
    if (!m.same_shape(p))
      fail_validation("optimizer_step: Adam moment shape does not match parameter '" +
                      params.items()[i].first + "'");
    for (std::size_t j = 0; j < p.numel(); ++j) {
      const double g = grads[i].data[j];
      m.data[j] = state.beta1 * m.data[j] + (1.0 - state.beta1) * g;
      v.data[j] = state.beta2 * v.data[j] + (1.0 - state.beta2) * g * g;
      const double m_hat = m.data[j] / bc1;
      const double v_hat = v.data[j] / bc2;
      p.data[j] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
  }
}

}  // namespace stk
