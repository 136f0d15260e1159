#ifndef STK_TAPE_HPP
#define STK_TAPE_HPP

#include <functional>
#include <string>
#include <vector>

#include "tensor.hpp"

namespace stk {

// Reverse-mode autodiff over an op tape. Construction order is topological
// order by definition: an op only ever references already-created nodes.
//
// All reductions run in a fixed left-to-right order and nothing inside an op
// is parallelized, so identical inputs give bit-identical values and
// gradients. Every op checks its output for NaN/Inf and raises a Numeric
// error naming the op instead of letting poison propagate.
//
// A Tape is single-threaded; run distinct Tapes on distinct threads.
class Tape {
public:
  using NodeId = int;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  NodeId leaf(Tensor value, bool requires_grad = false);

  // Elementwise; both operands must share a shape.
  NodeId add(NodeId a, NodeId b);
  NodeId sub(NodeId a, NodeId b);
  NodeId mul(NodeId a, NodeId b);
  NodeId scale(NodeId a, double k);
  NodeId add_scalar(NodeId a, double c);
  NodeId sigmoid(NodeId a);
  NodeId tanh(NodeId a);
  NodeId relu(NodeId a);

  // 1-D shape surgery.
  NodeId concat(const std::vector<NodeId>& parts);
  NodeId slice(NodeId a, std::size_t start, std::size_t len);

  // {m,n} x {n,p} -> {m,p}, or {m,n} x {n} -> {m}.
  NodeId matmul(NodeId a, NodeId b);

  // x {C,H,W}, kernel {O,C,kh,kw}, optional bias {O} (pass kNoBias to skip).
  static constexpr NodeId kNoBias = -1;
  NodeId conv2d(NodeId x, NodeId kernel, NodeId bias, std::size_t stride,
                std::size_t pad);
  NodeId max_pool2d(NodeId x, std::size_t window);  // stride = window
  NodeId global_max_pool(NodeId x);                 // {C,H,W} -> {C}

  NodeId softmax(NodeId a);  // 1-D, max-subtracted for stability

  // x / sqrt(|x|^2 + eps^2); eps keeps the zero vector finite (it maps to 0).
  NodeId l2_normalize(NodeId a, double eps = 1e-12);

  NodeId sum(NodeId a);
  NodeId mean(NodeId a);

  // mean of squared differences over all elements
  NodeId mse_loss(NodeId pred, NodeId target);
  // mean over rows of -log softmax(logits) . one_hot; logits {c} or {r,c};
  // fused with log-sum-exp. one_hot rows must be exact one-hot vectors.
  NodeId cross_entropy_loss(NodeId logits, NodeId one_hot);

  // Reverse traversal from a scalar loss. Leaves that do not influence the
  // loss report zero gradients.
  void backward(NodeId loss);

  const Tensor& value(NodeId id) const;
  Tensor grad(NodeId id) const;  // zeros when the node was never reached
  bool requires_grad(NodeId id) const;
  std::size_t size() const { return nodes_.size(); }

private:
  struct Node {
    std::string op;
    std::vector<NodeId> inputs;
    Tensor value;
    bool requires_grad = false;
    std::function<void(Tape&)> backward;  // null when no input needs grads
  };

  NodeId push(std::string op, std::vector<NodeId> inputs, Tensor value,
              std::function<void(Tape&)> backward_fn);
  Tensor& grad_buffer(NodeId id);
  bool grad_allocated(NodeId id) const;
  const Node& node(NodeId id) const;
  void check_id(NodeId id, const char* op) const;

  std::vector<Node> nodes_;
  std::vector<Tensor> grads_;  // parallel to nodes_, empty until touched
};

}  // namespace stk

#endif
