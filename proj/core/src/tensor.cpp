#include "ccep/tensor.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace ccep {

Tensor::Tensor(std::vector<int> s) : shape(std::move(s)) {
  v.assign(shape_numel(shape), 0.0);
}

void Tensor::fill(double x) {
  for (auto& e : v) e = x;
}

bool Tensor::all_finite() const {
  for (double e : v) {
    if (!std::isfinite(e)) return false;
  }
  return true;
}

std::size_t shape_numel(const std::vector<int>& shape) {
  std::size_t n = 1;
  for (int d : shape) {
    if (d < 0) throw std::invalid_argument("negative tensor dimension");
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

std::string shape_str(const std::vector<int>& shape) {
  std::ostringstream os;
  os << "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ",";
    os << shape[i];
  }
  os << ")";
  return os.str();
}

bool same_shape(const std::vector<int>& a, const std::vector<int>& b) {
  return a == b;
}

ShapeError::ShapeError(const std::string& where, const std::vector<int>& expected,
                       const std::vector<int>& actual)
    : std::runtime_error(where + ": expected shape " + shape_str(expected) +
                         ", got " + shape_str(actual)) {}

ShapeError::ShapeError(const std::string& where, const std::string& expected,
                       const std::string& actual)
    : std::runtime_error(where + ": expected shape " + expected + ", got " + actual) {}

}  // namespace ccep
