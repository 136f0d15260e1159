#include "tape.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "error.hpp"

namespace stk {

namespace {

void check_finite(const Tensor& t, const std::string& op) {
  for (double v : t.data) {
    if (!std::isfinite(v))
      fail_numeric("op '" + op + "' produced a non-finite value");
  }
}

}  // namespace

const Tape::Node& Tape::node(NodeId id) const { return nodes_[static_cast<std::size_t>(id)]; }

void Tape::check_id(NodeId id, const char* op) const {
  if (id < 0 || static_cast<std::size_t>(id) >= nodes_.size())
    fail_validation(std::string(op) + ": invalid node id " + std::to_string(id));
}

Tape::NodeId Tape::push(std::string op, std::vector<NodeId> inputs, Tensor value,
                        std::function<void(Tape&)> backward_fn) {
  check_finite(value, op);
  bool needs_grad = false;
  for (NodeId in : inputs) needs_grad = needs_grad || node(in).requires_grad;
  Node n;
  n.op = std::move(op);
  n.inputs = std::move(inputs);
  n.value = std::move(value);
  n.requires_grad = needs_grad;
  if (needs_grad) n.backward = std::move(backward_fn);
  nodes_.push_back(std::move(n));
  grads_.emplace_back();
  return static_cast<NodeId>(nodes_.size() - 1);
}

Tensor& Tape::grad_buffer(NodeId id) {
  Tensor& g = grads_[static_cast<std::size_t>(id)];
  if (g.data.empty()) g = Tensor::zeros(node(id).value.shape);
  return g;
}

bool Tape::grad_allocated(NodeId id) const {
  return !grads_[static_cast<std::size_t>(id)].data.empty();
}

Tape::NodeId Tape::leaf(Tensor value, bool requires_grad) {
  check_finite(value, "leaf");
  if (value.numel() != shape_numel(value.shape))
    fail_validation("leaf: data length does not match shape " + value.shape_str());
  Node n;
  n.op = "leaf";
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  nodes_.push_back(std::move(n));
  grads_.emplace_back();
  return static_cast<NodeId>(nodes_.size() - 1);
}

const Tensor& Tape::value(NodeId id) const {
  check_id(id, "value");
  return node(id).value;
}

Tensor Tape::grad(NodeId id) const {
  check_id(id, "grad");
  if (grad_allocated(id)) return grads_[static_cast<std::size_t>(id)];
  return Tensor::zeros(node(id).value.shape);
}

bool Tape::requires_grad(NodeId id) const {
  check_id(id, "requires_grad");
  return node(id).requires_grad;
}

// ---------------------------------------------------------------------------
// elementwise

Tape::NodeId Tape::add(NodeId a, NodeId b) {
  check_id(a, "add");
  check_id(b, "add");
  const Tensor& va = node(a).value;
  const Tensor& vb = node(b).value;
  if (!va.same_shape(vb))
    fail_validation("add: shape mismatch " + va.shape_str() + " vs " + vb.shape_str());
  Tensor out = va;
  for (std::size_t i = 0; i < out.numel(); ++i) out.data[i] += vb.data[i];
  NodeId id = push("add", {a, b}, std::move(out), nullptr);
  nodes_.back().backward = [a, b, id](Tape& t) {
    const Tensor& g = t.grads_[static_cast<std::size_t>(id)];
    if (t.node(a).requires_grad) {
      Tensor& ga = t.grad_buffer(a);
      for (std::size_t i = 0; i < g.numel(); ++i) ga.data[i] += g.data[i];
    }
    if (t.node(b).requires_grad) {
      Tensor& gb = t.grad_buffer(b);
      for (std::size_t i = 0; i < g.numel(); ++i) gb.data[i] += g.data[i];
    }
  };
  return id;
}

Tape::NodeId Tape::sub(NodeId a, NodeId b) {
  check_id(a, "sub");
  check_id(b, "sub");
  const Tensor& va = node(a).value;
  const Tensor& vb = node(b).value;
  if (!va.same_shape(vb))
    fail_validation("sub: shape mismatch " + va.shape_str() + " vs " + vb.shape_str());
  Tensor out = va;
  for (std::size_t i = 0; i < out.numel(); ++i) out.data[i] -= vb.data[i];
  NodeId id = push("sub", {a, b}, std::move(out), nullptr);
  nodes_.back().backward = [a, b, id](Tape& t) {
    const Tensor& g = t.grads_[static_cast<std::size_t>(id)];
    if (t.node(a).requires_grad) {
      Tensor& ga = t.grad_buffer(a);
      for (std::size_t i = 0; i < g.numel(); ++i) ga.data[i] += g.data[i];
    }
    if (t.node(b).requires_grad) {
      Tensor& gb = t.grad_buffer(b);
      for (std::size_t i = 0; i < g.numel(); ++i) gb.data[i] -= g.data[i];
    }
  };
  return id;
}

Tape::NodeId Tape::mul(NodeId a, NodeId b) {
  check_id(a, "mul");
  check_id(b, "mul");
  const Tensor& va = node(a).value;
  const Tensor& vb = node(b).value;
  if (!va.same_shape(vb))
    fail_validation("mul: shape mismatch " + va.shape_str() + " vs " + vb.shape_str());
  Tensor out = va;
  for (std::size_t i = 0; i < out.numel(); ++i) out.data[i] *= vb.data[i];
  NodeId id = push("mul", {a, b}, std::move(out), nullptr);
  nodes_.back().backward = [a, b, id](Tape& t) {
    const Tensor& g = t.grads_[static_cast<std::size_t>(id)];
    const Tensor& va = t.node(a).value;
    const Tensor& vb = t.node(b).value;
    if (t.node(a).requires_grad) {
      Tensor& ga = t.grad_buffer(a);
      for (std::size_t i = 0; i < g.numel(); ++i) ga.data[i] += g.data[i] * vb.data[i];
    }
    if (t.node(b).requires_grad) {
      Tensor& gb = t.grad_buffer(b);
      for (std::size_t i = 0; i < g.numel(); ++i) gb.data[i] += g.data[i] * va.data[i];
    }
  };
  return id;
}

Tape::NodeId Tape::scale(NodeId a, double k) {
  check_id(a, "scale");
  Tensor out = node(a).value;
  for (double& v : out.data) v *= k;
  NodeId id = push("scale", {a}, std::move(out), nullptr);
  nodes_.back().backward = [a, k, id](Tape& t) {
    const Tensor& g = t.grads_[static_cast<std::size_t>(id)];
    Tensor& ga = t.grad_buffer(a);
    for (std::size_t i = 0; i < g.numel(); ++i) ga.data[i] += k * g.data[i];
  };
  return id;
}

Tape::NodeId Tape::add_scalar(NodeId a, double c) {
  check_id(a, "add_scalar");
  Tensor out = node(a).value;
  for (double& v : out.data) v += c;
  NodeId id = push("add_scalar", {a}, std::move(out), nullptr);
  nodes_.back().backward = [a, id](Tape& t) {
    const Tensor& g = t.grads_[static_cast<std::size_t>(id)];
    Tensor& ga = t.grad_buffer(a);
    for (std::size_t i = 0; i < g.numel(); ++i) ga.data[i] += g.data[i];
  };
  return id;
}

Tape::NodeId Tape::sigmoid(NodeId a) {
  check_id(a, "sigmoid");
  Tensor out = node(a).value;
  for (double& v : out.data) v = 1.0 / (1.0 + std::exp(-v));
  NodeId id = push("sigmoid", {a}, std::move(out), nullptr);
  nodes_.back().backward = [a, id](Tape& t) {
    const Tensor& g = t.grads_[static_cast<std::size_t>(id)];
    const Tensor& y = t.node(id).value;
    Tensor& ga = t.grad_buffer(a);
    for (std::size_t i = 0; i < g.numel(); ++i)
      ga.data[i] += g.data[i] * y.data[i] * (1.0 - y.data[i]);
  };
  return id;
}

Tape::NodeId Tape::tanh(NodeId a) {
  check_id(a, "tanh");
  Tensor out = node(a).value;
  for (double& v : out.data) v = std::tanh(v);
  NodeId id = push("tanh", {a}, std::move(out), nullptr);
  nodes_.back().backward = [a, id](Tape& t) {
    const Tensor& g = t.grads_[static_cast<std::size_t>(id)];
    const Tensor& y = t.node(id).value;
    Tensor& ga = t.grad_buffer(a);
    for (std::size_t i = 0; i < g.numel(); ++i)
      ga.data[i] += g.data[i] * (1.0 - y.data[i] * y.data[i]);
  };
  return id;
}

Tape::NodeId Tape::relu(NodeId a) {
  check_id(a, "relu");
  Tensor out = node(a).value;
  for (double& v : out.data) v = v > 0.0 ? v : 0.0;
  NodeId id = push("relu", {a}, std::move(out), nullptr);
  nodes_.back().backward = [a, id](Tape& t) {
    const Tensor& g = t.grads_[static_cast<std::size_t>(id)];
    const Tensor& x = t.node(a).value;
    Tensor& ga = t.grad_buffer(a);
    for (std::size_t i = 0; i < g.numel(); ++i)
      if (x.data[i] > 0.0) ga.data[i] += g.data[i];
  };
  return id;
}

// ---------------------------------------------------------------------------
// shape surgery

Tape::NodeId Tape::concat(const std::vector<NodeId>& parts) {
  if (parts.empty()) fail_validation("concat: no inputs");
  std::size_t total = 0;
  for (NodeId p : parts) {
    check_id(p, "concat");
    if (node(p).value.rank() != 1)
      fail_validation("concat: expected 1-D inputs, got " + node(p).value.shape_str());
    total += node(p).value.numel();
  }
  Tensor out = Tensor::zeros({total});
  std::size_t off = 0;
  for (NodeId p : parts) {
    const Tensor& v = node(p).value;
    std::copy(v.data.begin(), v.data.end(), out.data.begin() + static_cast<long>(off));
    off += v.numel();
  }
  std::vector<NodeId> inputs = parts;
  NodeId id = push("concat", std::move(inputs), std::move(out), nullptr);
  nodes_.back().backward = [parts, id](Tape& t) {
    const Tensor& g = t.grads_[static_cast<std::size_t>(id)];
    std::size_t off = 0;
    for (NodeId p : parts) {
      const std::size_t n = t.node(p).value.numel();
      if (t.node(p).requires_grad) {
        Tensor& gp = t.grad_buffer(p);
        for (std::size_t i = 0; i < n; ++i) gp.data[i] += g.data[off + i];
      }
      off += n;
    }
  };
  return id;
}

Tape::NodeId Tape::slice(NodeId a, std::size_t start, std::size_t len) {
  check_id(a, "slice");
  const Tensor& va = node(a).value;
  if (va.rank() != 1)
    fail_validation("slice: expected a 1-D input, got " + va.shape_str());
  if (len == 0 || start + len > va.numel())
    fail_validation("slice: range [" + std::to_string(start) + "," +
                    std::to_string(start + len) + ") out of bounds for " + va.shape_str());
  Tensor out = Tensor::zeros({len});
  std::copy(va.data.begin() + static_cast<long>(start),
            va.data.begin() + static_cast<long>(start + len), out.data.begin());
  NodeId id = push("slice", {a}, std::move(out), nullptr);
  nodes_.back().backward = [a, start, len, id](Tape& t) {
    const Tensor& g = t.grads_[static_cast<std::size_t>(id)];
    Tensor& ga = t.grad_buffer(a);
    for (std::size_t i = 0; i < len; ++i) ga.data[start + i] += g.data[i];
  };
  return id;
}

// ---------------------------------------------------------------------------
// linear algebra

Tape::NodeId Tape::matmul(NodeId a, NodeId b) {
  check_id(a, "matmul");
  check_id(b, "matmul");
  const Tensor& va = node(a).value;
  const Tensor& vb = node(b).value;
  if (va.rank() != 2 || (vb.rank() != 1 && vb.rank() != 2))
    fail_validation("matmul: unsupported shapes " + va.shape_str() + " x " +
                    vb.shape_str());
  const std::size_t m = va.shape[0];
  const std::size_t n = va.shape[1];
  const bool vec = (vb.rank() == 1);
  const std::size_t p = vec ? 1 : vb.shape[1];
  if ((vec ? vb.shape[0] : vb.shape[0]) != n)
    fail_validation("matmul: shape mismatch " + va.shape_str() + " x " + vb.shape_str());

  Tensor out = vec ? Tensor::zeros({m}) : Tensor::zeros({m, p});
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < p; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < n; ++k)
        acc += va.data[i * n + k] * vb.data[k * p + j];
      out.data[i * p + j] = acc;
    }
  }
  NodeId id = push("matmul", {a, b}, std::move(out), nullptr);
  nodes_.back().backward = [a, b, m, n, p, id](Tape& t) {
    const Tensor& g = t.grads_[static_cast<std::size_t>(id)];
    const Tensor& va = t.node(a).value;
    const Tensor& vb = t.node(b).value;
    if (t.node(a).requires_grad) {
      Tensor& ga = t.grad_buffer(a);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t k = 0; k < n; ++k) {
          double acc = 0.0;
          for (std::size_t j = 0; j < p; ++j)
            acc += g.data[i * p + j] * vb.data[k * p + j];
          ga.data[i * n + k] += acc;
        }
    }
    if (t.node(b).requires_grad) {
      Tensor& gb = t.grad_buffer(b);
      for (std::size_t k = 0; k < n; ++k)
        for (std::size_t j = 0; j < p; ++j) {
          double acc = 0.0;
          for (std::size_t i = 0; i < m; ++i)
            acc += va.data[i * n + k] * g.data[i * p + j];
          gb.data[k * p + j] += acc;
        }
    }
  };
  return id;
}

// ---------------------------------------------------------------------------
// convolution stack

Tape::NodeId Tape::conv2d(NodeId x, NodeId kernel, NodeId bias, std::size_t stride,
                          std::size_t pad) {
  check_id(x, "conv2d");
  check_id(kernel, "conv2d");
  const Tensor& vx = node(x).value;
  const Tensor& vk = node(kernel).value;
  if (vx.rank() != 3 || vk.rank() != 4)
    fail_validation("conv2d: expected input {C,H,W} and kernel {O,C,kh,kw}, got " +
                    vx.shape_str() + " and " + vk.shape_str());
  if (stride == 0) fail_validation("conv2d: stride must be >= 1");
  const std::size_t C = vx.shape[0], H = vx.shape[1], W = vx.shape[2];
  const std::size_t O = vk.shape[0], kh = vk.shape[2], kw = vk.shape[3];
  if (vk.shape[1] != C)
    fail_validation("conv2d: channel mismatch " + vx.shape_str() + " vs " +
                    vk.shape_str());
  if (H + 2 * pad < kh || W + 2 * pad < kw)
    fail_validation("conv2d: kernel larger than padded input");
  const std::size_t OH = (H + 2 * pad - kh) / stride + 1;
  const std::size_t OW = (W + 2 * pad - kw) / stride + 1;

  const bool has_bias = (bias != kNoBias);
  if (has_bias) {
    check_id(bias, "conv2d");
    const Tensor& vb = node(bias).value;
    if (vb.rank() != 1 || vb.shape[0] != O)
      fail_validation("conv2d: bias shape " + vb.shape_str() + " does not match " +
                      std::to_string(O) + " output channels");
  }

  Tensor out = Tensor::zeros({O, OH, OW});
  const Tensor* vb = has_bias ? &node(bias).value : nullptr;
  for (std::size_t o = 0; o < O; ++o) {
    for (std::size_t oy = 0; oy < OH; ++oy) {
      for (std::size_t ox = 0; ox < OW; ++ox) {
        double acc = has_bias ? vb->data[o] : 0.0;
        for (std::size_t c = 0; c < C; ++c) {
          for (std::size_t ky = 0; ky < kh; ++ky) {
            const long long iy =
                static_cast<long long>(oy * stride + ky) - static_cast<long long>(pad);
            if (iy < 0 || iy >= static_cast<long long>(H)) continue;
            for (std::size_t kx = 0; kx < kw; ++kx) {
              const long long ix =
                  static_cast<long long>(ox * stride + kx) - static_cast<long long>(pad);
              if (ix < 0 || ix >= static_cast<long long>(W)) continue;
              acc += vx.at3(c, static_cast<std::size_t>(iy), static_cast<std::size_t>(ix)) *
                     vk.data[((o * C + c) * kh + ky) * kw + kx];
            }
          }
        }
        out.at3(o, oy, ox) = acc;
      }
    }
  }

  std::vector<NodeId> inputs = {x, kernel};
  if (has_bias) inputs.push_back(bias);
  NodeId id = push("conv2d", std::move(inputs), std::move(out), nullptr);
  nodes_.back().backward = [x, kernel, bias, has_bias, stride, pad, C, H, W, O, kh, kw,
                            OH, OW, id](Tape& t) {
    const Tensor& g = t.grads_[static_cast<std::size_t>(id)];
    const Tensor& vx = t.node(x).value;
    const Tensor& vk = t.node(kernel).value;
    const bool need_x = t.node(x).requires_grad;
    const bool need_k = t.node(kernel).requires_grad;
    const bool need_b = has_bias && t.node(bias).requires_grad;
    Tensor* gx = need_x ? &t.grad_buffer(x) : nullptr;
    Tensor* gk = need_k ? &t.grad_buffer(kernel) : nullptr;
    Tensor* gb = need_b ? &t.grad_buffer(bias) : nullptr;
    for (std::size_t o = 0; o < O; ++o) {
      for (std::size_t oy = 0; oy < OH; ++oy) {
        for (std::size_t ox = 0; ox < OW; ++ox) {
          const double go = g.at3(o, oy, ox);
          if (go == 0.0) continue;
          if (gb) gb->data[o] += go;
          for (std::size_t c = 0; c < C; ++c) {
            for (std::size_t ky = 0; ky < kh; ++ky) {
              const long long iy =
                  static_cast<long long>(oy * stride + ky) - static_cast<long long>(pad);
              if (iy < 0 || iy >= static_cast<long long>(H)) continue;
              for (std::size_t kx = 0; kx < kw; ++kx) {
                const long long ix = static_cast<long long>(ox * stride + kx) -
                                     static_cast<long long>(pad);
                if (ix < 0 || ix >= static_cast<long long>(W)) continue;
                const std::size_t xi =
                    (c * H + static_cast<std::size_t>(iy)) * W + static_cast<std::size_t>(ix);
                const std::size_t ki = ((o * C + c) * kh + ky) * kw + kx;
                if (gx) gx->data[xi] += go * vk.data[ki];
                if (gk) gk->data[ki] += go * vx.data[xi];
              }
            }
          }
        }
      }
    }
  };
  return id;
}

Tape::NodeId Tape::max_pool2d(NodeId x, std::size_t window) {
  check_id(x, "max_pool2d");
  const Tensor& vx = node(x).value;
  if (vx.rank() != 3)
    fail_validation("max_pool2d: expected {C,H,W}, got " + vx.shape_str());
  if (window == 0) fail_validation("max_pool2d: window must be >= 1");
  const std::size_t C = vx.shape[0], H = vx.shape[1], W = vx.shape[2];
  if (H < window || W < window)
    fail_validation("max_pool2d: window larger than input " + vx.shape_str());
  const std::size_t OH = H / window, OW = W / window;
  Tensor out = Tensor::zeros({C, OH, OW});
  // Argmax (first max in scan order) saved for the backward pass.
  auto argmax = std::make_shared<std::vector<std::size_t>>(C * OH * OW);
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t oy = 0; oy < OH; ++oy) {
      for (std::size_t ox = 0; ox < OW; ++ox) {
        double best = -1e308;
        std::size_t best_idx = 0;
        for (std::size_t wy = 0; wy < window; ++wy) {
          for (std::size_t wx = 0; wx < window; ++wx) {
            const std::size_t idx = (c * H + oy * window + wy) * W + ox * window + wx;
            if (vx.data[idx] > best) {
              best = vx.data[idx];
              best_idx = idx;
            }
          }
        }
        out.at3(c, oy, ox) = best;
        (*argmax)[(c * OH + oy) * OW + ox] = best_idx;
      }
    }
  }
  NodeId id = push("max_pool2d", {x}, std::move(out), nullptr);
  nodes_.back().backward = [x, argmax, id](Tape& t) {
    const Tensor& g = t.grads_[static_cast<std::size_t>(id)];
    Tensor& gx = t.grad_buffer(x);
    for (std::size_t i = 0; i < g.numel(); ++i) gx.data[(*argmax)[i]] += g.data[i];
  };
  return id;
}

Tape::NodeId Tape::global_max_pool(NodeId x) {
  check_id(x, "global_max_pool");
  const Tensor& vx = node(x).value;
  if (vx.rank() != 3)
    fail_validation("global_max_pool: expected {C,H,W}, got " + vx.shape_str());
  const std::size_t C = vx.shape[0], HW = vx.shape[1] * vx.shape[2];
  Tensor out = Tensor::zeros({C});
  auto argmax = std::make_shared<std::vector<std::size_t>>(C);
  for (std::size_t c = 0; c < C; ++c) {
    double best = -1e308;
    std::size_t best_idx = 0;
    for (std::size_t i = 0; i < HW; ++i) {
      const std::size_t idx = c * HW + i;
      if (vx.data[idx] > best) {
        best = vx.data[idx];
        best_idx = idx;
      }
    }
    out.data[c] = best;
    (*argmax)[c] = best_idx;
  }
  NodeId id = push("global_max_pool", {x}, std::move(out), nullptr);
  nodes_.back().backward = [x, argmax, id](Tape& t) {
    const Tensor& g = t.grads_[static_cast<std::size_t>(id)];
    Tensor& gx = t.grad_buffer(x);
    for (std::size_t c = 0; c < g.numel(); ++c) gx.data[(*argmax)[c]] += g.data[c];
  };
  return id;
}

// ---------------------------------------------------------------------------
// softmax / reductions / losses

Tape::NodeId Tape::softmax(NodeId a) {
  check_id(a, "softmax");
  const Tensor& va = node(a).value;
  if (va.rank() != 1)
    fail_validation("softmax: expected a 1-D input, got " + va.shape_str());
  Tensor out = va;
  double mx = out.data[0];
  for (double v : out.data) mx = std::max(mx, v);
  double denom = 0.0;
  for (double& v : out.data) {
    v = std::exp(v - mx);
    denom += v;
  }
  for (double& v : out.data) v /= denom;
  NodeId id = push("softmax", {a}, std::move(out), nullptr);
  nodes_.back().backward = [a, id](Tape& t) {
    const Tensor& g = t.grads_[static_cast<std::size_t>(id)];
    const Tensor& y = t.node(id).value;
    Tensor& ga = t.grad_buffer(a);
    double dot = 0.0;
    for (std::size_t i = 0; i < g.numel(); ++i) dot += g.data[i] * y.data[i];
    for (std::size_t i = 0; i < g.numel(); ++i)
      ga.data[i] += y.data[i] * (g.data[i] - dot);
  };
  return id;
}

Tape::NodeId Tape::l2_normalize(NodeId a, double eps) {
  check_id(a, "l2_normalize");
  const Tensor& va = node(a).value;
  if (va.rank() != 1)
    fail_validation("l2_normalize: expected a 1-D input, got " + va.shape_str());
  double n2 = 0.0;
  for (double v : va.data) n2 += v * v;
  const double inv_norm = 1.0 / std::sqrt(n2 + eps * eps);
  Tensor out = va;
  for (double& v : out.data) v *= inv_norm;
  NodeId id = push("l2_normalize", {a}, std::move(out), nullptr);
  nodes_.back().backward = [a, inv_norm, id](Tape& t) {
    const Tensor& g = t.grads_[static_cast<std::size_t>(id)];
    const Tensor& y = t.node(id).value;
    Tensor& ga = t.grad_buffer(a);
    double dot = 0.0;
    for (std::size_t i = 0; i < g.numel(); ++i) dot += g.data[i] * y.data[i];
    for (std::size_t i = 0; i < g.numel(); ++i)
      ga.data[i] += inv_norm * (g.data[i] - y.data[i] * dot);
  };
  return id;
}

Tape::NodeId Tape::sum(NodeId a) {
  check_id(a, "sum");
  const Tensor& va = node(a).value;
  double acc = 0.0;
  for (double v : va.data) acc += v;
  NodeId id = push("sum", {a}, Tensor::scalar(acc), nullptr);
  nodes_.back().backward = [a, id](Tape& t) {
    const double g = t.grads_[static_cast<std::size_t>(id)].data[0];
    Tensor& ga = t.grad_buffer(a);
    for (double& v : ga.data) v += g;
  };
  return id;
}

Tape::NodeId Tape::mean(NodeId a) {
  check_id(a, "mean");
  const Tensor& va = node(a).value;
  double acc = 0.0;
  for (double v : va.data) acc += v;
  const double inv_n = 1.0 / static_cast<double>(va.numel());
  NodeId id = push("mean", {a}, Tensor::scalar(acc * inv_n), nullptr);
  nodes_.back().backward = [a, inv_n, id](Tape& t) {
    const double g = t.grads_[static_cast<std::size_t>(id)].data[0] * inv_n;
    Tensor& ga = t.grad_buffer(a);
    for (double& v : ga.data) v += g;
  };
  return id;
}

Tape::NodeId Tape::mse_loss(NodeId pred, NodeId target) {
  check_id(pred, "mse_loss");
  check_id(target, "mse_loss");
  const Tensor& vp = node(pred).value;
  const Tensor& vt = node(target).value;
  if (!vp.same_shape(vt))
    fail_validation("mse_loss: shape mismatch " + vp.shape_str() + " vs " +
                    vt.shape_str());
  double acc = 0.0;
  for (std::size_t i = 0; i < vp.numel(); ++i) {
    const double d = vp.data[i] - vt.data[i];
    acc += d * d;
  }
  const double inv_n = 1.0 / static_cast<double>(vp.numel());
  NodeId id = push("mse_loss", {pred, target}, Tensor::scalar(acc * inv_n), nullptr);
  nodes_.back().backward = [pred, target, inv_n, id](Tape& t) {
    const double g = t.grads_[static_cast<std::size_t>(id)].data[0];
    const Tensor& vp = t.node(pred).value;
    const Tensor& vt = t.node(target).value;
    if (t.node(pred).requires_grad) {
      Tensor& gp = t.grad_buffer(pred);
      for (std::size_t i = 0; i < vp.numel(); ++i)
        gp.data[i] += g * 2.0 * (vp.data[i] - vt.data[i]) * inv_n;
    }
    if (t.node(target).requires_grad) {
      Tensor& gt = t.grad_buffer(target);
      for (std::size_t i = 0; i < vp.numel(); ++i)
        gt.data[i] -= g * 2.0 * (vp.data[i] - vt.data[i]) * inv_n;
    }
  };
  return id;
}

Tape::NodeId Tape::cross_entropy_loss(NodeId logits, NodeId one_hot) {
  check_id(logits, "cross_entropy_loss");
  check_id(one_hot, "cross_entropy_loss");
  const Tensor& vl = node(logits).value;
  const Tensor& vh = node(one_hot).value;
  if (!vl.same_shape(vh))
    fail_validation("cross_entropy_loss: shape mismatch " + vl.shape_str() + " vs " +
                    vh.shape_str());
  if (vl.rank() != 1 && vl.rank() != 2)
    fail_validation("cross_entropy_loss: expected {c} or {r,c}, got " + vl.shape_str());
  const std::size_t rows = vl.rank() == 2 ? vl.shape[0] : 1;
  const std::size_t cols = vl.rank() == 2 ? vl.shape[1] : vl.shape[0];
  for (std::size_t r = 0; r < rows; ++r) {
    double row_sum = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      const double v = vh.data[r * cols + c];
      if (v != 0.0 && v != 1.0)
        fail_validation("cross_entropy_loss: target row " + std::to_string(r) +
                        " is not one-hot");
      row_sum += v;
    }
    if (row_sum != 1.0)
      fail_validation("cross_entropy_loss: target row " + std::to_string(r) +
                      " does not sum to 1");
  }
  // Fused log-sum-exp; softmax probabilities saved for the backward pass.
  auto probs = std::make_shared<std::vector<double>>(vl.data.size());
  double loss = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    double mx = vl.data[r * cols];
    for (std::size_t c = 1; c < cols; ++c) mx = std::max(mx, vl.data[r * cols + c]);
    double denom = 0.0;
    for (std::size_t c = 0; c < cols; ++c)
      denom += std::exp(vl.data[r * cols + c] - mx);
    const double lse = mx + std::log(denom);
    for (std::size_t c = 0; c < cols; ++c)
      (*probs)[r * cols + c] = std::exp(vl.data[r * cols + c] - lse);
    double row_logit = 0.0;
    for (std::size_t c = 0; c < cols; ++c)
      row_logit += vl.data[r * cols + c] * vh.data[r * cols + c];
    loss += lse - row_logit;
  }
  const double inv_rows = 1.0 / static_cast<double>(rows);
  NodeId id = push("cross_entropy_loss", {logits, one_hot},
                   Tensor::scalar(loss * inv_rows), nullptr);
  nodes_.back().backward = [logits, one_hot, probs, rows, cols, inv_rows, id](Tape& t) {
    const double g = t.grads_[static_cast<std::size_t>(id)].data[0];
    const Tensor& vl = t.node(logits).value;
    const Tensor& vh = t.node(one_hot).value;
    if (t.node(logits).requires_grad) {
      Tensor& gl = t.grad_buffer(logits);
      for (std::size_t i = 0; i < vl.numel(); ++i)
        gl.data[i] += g * ((*probs)[i] - vh.data[i]) * inv_rows;
    }
    if (t.node(one_hot).requires_grad) {
      Tensor& gh = t.grad_buffer(one_hot);
      for (std::size_t i = 0; i < vl.numel(); ++i)
        gh.data[i] -= g * vl.data[i] * inv_rows;
    }
    (void)rows;
    (void)cols;
  };
  return id;
}

void Tape::backward(NodeId loss) {
  check_id(loss, "backward");
  if (nodes_.empty()) fail_validation("backward: tape is empty");
  const Tensor& v = node(loss).value;
  if (v.numel() != 1)
    fail_validation("backward: loss must be scalar, got " + v.shape_str());
  grad_buffer(loss).data[0] = 1.0;
  for (NodeId id = loss; id >= 0; --id) {
    const Node& n = node(id);
    if (!n.requires_grad || !n.backward) continue;
    if (!grad_allocated(id)) continue;  // never reached from the loss
    n.backward(*this);
  }
}

}  // namespace stk
