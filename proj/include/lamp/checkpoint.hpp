#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "lamp/tensor.hpp"

namespace lamp {

// Flat name->tensor container for serialization. Order is preserved and is
// part of the on-disk byte layout, so builders must emit in a fixed order.
struct NamedTensors {
  std::vector<std::pair<std::string, Tensor>> items;

  void add(std::string name, Tensor t) { items.emplace_back(std::move(name), std::move(t)); }
  const Tensor* find(std::string_view name) const;
  // Like find but throws IoError when missing (checkpoint restore paths).
  const Tensor& require(std::string_view name) const;
};

// Binary blob format: magic "LAMPCKPT", u32 version, then per tensor:
// u32 name length, name bytes, u32 rank, u64 dims..., f64 values...
// Everything little-endian; values are written as f64 regardless of `real`.
void save_blob(const std::filesystem::path& path, const NamedTensors& t);
NamedTensors load_blob(const std::filesystem::path& path);

constexpr std::uint32_t kCkptVersion = 1;

}  // namespace lamp
