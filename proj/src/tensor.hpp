#ifndef STK_TENSOR_HPP
#define STK_TENSOR_HPP

#include <cstddef>
#include <string>
#include <vector>

namespace stk {

// Dense row-major tensor of 64-bit floats. Shapes are immutable after
// construction; ops allocate fresh outputs.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;

  Tensor() = default;
  Tensor(std::vector<std::size_t> s, std::vector<double> d)
      : shape(std::move(s)), data(std::move(d)) {}

  static Tensor zeros(std::vector<std::size_t> shape);
  static Tensor full(std::vector<std::size_t> shape, double v);
  static Tensor scalar(double v);
  static Tensor vector(std::vector<double> v);

  std::size_t numel() const { return data.size(); }
  std::size_t rank() const { return shape.size(); }
  bool same_shape(const Tensor& other) const { return shape == other.shape; }

  // 2-D and 3-D accessors; bounds are the callers' responsibility.
  double& at2(std::size_t r, std::size_t c) { return data[r * shape[1] + c]; }
  double at2(std::size_t r, std::size_t c) const { return data[r * shape[1] + c]; }
  double& at3(std::size_t i, std::size_t j, std::size_t k) {
    return data[(i * shape[1] + j) * shape[2] + k];
  }
  double at3(std::size_t i, std::size_t j, std::size_t k) const {
    return data[(i * shape[1] + j) * shape[2] + k];
  }

  std::string shape_str() const;
};

std::size_t shape_numel(const std::vector<std::size_t>& shape);

}  // namespace stk

#endif
