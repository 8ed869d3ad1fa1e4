#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace dialogctl {

/// Named dense array of doubles, row-major.
struct Tensor {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<double> values;

  Tensor() = default;
  Tensor(std::string name, std::vector<std::size_t> shape);

  std::size_t size() const { return values.size(); }
  std::size_t rows() const { return shape.empty() ? 0 : shape[0]; }
  std::size_t cols() const { return shape.size() < 2 ? 1 : shape[1]; }

  double& at(std::size_t r, std::size_t c) { return values[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const { return values[r * cols() + c]; }

  bool all_finite() const;
  bool operator==(const Tensor&) const = default;
};

std::size_t shape_volume(const std::vector<std::size_t>& shape);

}  // namespace dialogctl
