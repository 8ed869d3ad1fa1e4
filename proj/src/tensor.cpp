#include "dialogctl/tensor.hpp"

#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>

namespace dialogctl {

std::size_t shape_volume(const std::vector<std::size_t>& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

Tensor::Tensor(std::string name_, std::vector<std::size_t> shape_)
    : name(std::move(name_)), shape(std::move(shape_)) {
  for (auto d : shape)
    if (d == 0) throw std::invalid_argument("tensor " + name + ": zero dimension");
  values.assign(shape_volume(shape), 0.0);
}

bool Tensor::all_finite() const {
  for (double v : values)
    if (!std::isfinite(v)) return false;
  return true;
}

}  // namespace dialogctl
