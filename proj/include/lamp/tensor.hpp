#pragma once

#include <cstddef>
#include <initializer_list>
#include <vector>

#include "lamp/common.hpp"

namespace lamp {

// Dense row-major tensor. Rank is dynamic but in practice everything here is
// rank 1 or 2; (rows, cols) accessors assume rank 2.
struct Tensor {
  std::vector<std::size_t> shape;
  Vec data;

  Tensor() = default;

  static Tensor zeros(std::initializer_list<std::size_t> dims) {
    return zeros(std::vector<std::size_t>(dims));
  }
  static Tensor zeros(const std::vector<std::size_t>& dims) {
    Tensor t;
    t.shape = dims;
    std::size_t n = 1;
    for (std::size_t d : dims) n *= d;
    t.data.assign(n, real(0));
    return t;
  }
  static Tensor from(std::initializer_list<std::size_t> dims, Vec values) {
    Tensor t;
    t.shape = dims;
    std::size_t n = 1;
    for (std::size_t d : t.shape) n *= d;
    if (values.size() != n) throw UsageError("Tensor::from: size mismatch");
    t.data = std::move(values);
    return t;
  }

  std::size_t size() const { return data.size(); }
  std::size_t rows() const { return shape.empty() ? 0 : shape[0]; }
  std::size_t cols() const { return shape.size() < 2 ? 1 : shape[1]; }

  real& operator()(std::size_t i, std::size_t j) { return data[i * cols() + j]; }
  real operator()(std::size_t i, std::size_t j) const { return data[i * cols() + j]; }
  real& operator[](std::size_t i) { return data[i]; }
  real operator[](std::size_t i) const { return data[i]; }

  bool all_finite() const {
    for (real v : data)
      if (!is_finite(v)) return false;
    return true;
  }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }
};

}  // namespace lamp
