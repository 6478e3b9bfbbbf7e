// tensor.hpp - dense row-major double tensor.

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace ccep {

struct Tensor {
  std::vector<int> shape;
  std::vector<double> v;

  Tensor() = default;
  explicit Tensor(std::vector<int> s);

  std::size_t numel() const { return v.size(); }
  int dim(std::size_t i) const { return shape[i]; }
  int rank() const { return static_cast<int>(shape.size()); }

  double& at(std::size_t i) { return v[i]; }
  double at(std::size_t i) const { return v[i]; }

  // NHWC addressing for rank-4 tensors.
  double& at4(int n, int h, int w, int c) {
    return v[((static_cast<std::size_t>(n) * shape[1] + h) * shape[2] + w) * shape[3] + c];
  }
  double at4(int n, int h, int w, int c) const {
    return v[((static_cast<std::size_t>(n) * shape[1] + h) * shape[2] + w) * shape[3] + c];
  }

  double& at2(int n, int d) { return v[static_cast<std::size_t>(n) * shape[1] + d]; }
  double at2(int n, int d) const { return v[static_cast<std::size_t>(n) * shape[1] + d]; }

  void fill(double x);
  bool all_finite() const;
};

std::size_t shape_numel(const std::vector<int>& shape);
std::string shape_str(const std::vector<int>& shape);
bool same_shape(const std::vector<int>& a, const std::vector<int>& b);

/// Error raised when an operation receives a tensor of the wrong shape.
struct ShapeError : std::runtime_error {
  ShapeError(const std::string& where, const std::vector<int>& expected,
             const std::vector<int>& actual);
  ShapeError(const std::string& where, const std::string& expected, const std::string& actual);
  using std::runtime_error::runtime_error;
};

/// Error raised when a forward/backward pass produces non-finite values.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace ccep
