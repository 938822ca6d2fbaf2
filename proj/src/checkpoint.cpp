#include "lamp/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace lamp {

static_assert(std::endian::native == std::endian::little,
              "checkpoint blobs assume a little-endian host");

const Tensor* NamedTensors::find(std::string_view name) const {
  for (const auto& [n, t] : items)
    if (n == name) return &t;
  return nullptr;
}

const Tensor& NamedTensors::require(std::string_view name) const {
  const Tensor* t = find(name);
  if (!t) throw IoError("checkpoint: missing tensor '" + std::string(name) + "'");
  return *t;
}

namespace {

constexpr char kMagic[8] = {'L', 'A', 'M', 'P', 'C', 'K', 'P', 'T'};

template <typename T>
void put(std::ofstream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& is, const char* what) {
  T v;
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw IoError(std::string("checkpoint: truncated reading ") + what);
  return v;
}

}  // namespace

void save_blob(const std::filesystem::path& path, const NamedTensors& t) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("checkpoint: cannot open " + path.string() + " for write");
  os.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(os, kCkptVersion);
  for (const auto& [name, tensor] : t.items) {
    put<std::uint32_t>(os, static_cast<std::uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    put<std::uint32_t>(os, static_cast<std::uint32_t>(tensor.shape.size()));
    for (std::size_t d : tensor.shape) put<std::uint64_t>(os, d);
    for (real v : tensor.data) put<double>(os, static_cast<double>(v));
  }
  if (!os) throw IoError("checkpoint: write failed for " + path.string());
}

NamedTensors load_blob(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("checkpoint: cannot open " + path.string());
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw IoError("checkpoint: bad magic in " + path.string());
  auto version = get<std::uint32_t>(is, "version");
  if (version != kCkptVersion)
    throw IoError("checkpoint: unsupported version " + std::to_string(version));

  NamedTensors out;
  while (true) {
    std::uint32_t name_len;
    is.read(reinterpret_cast<char*>(&name_len), sizeof(name_len));
    if (is.eof()) break;
    if (!is) throw IoError("checkpoint: truncated reading name length");
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    if (!is) throw IoError("checkpoint: truncated reading name");
    auto rank = get<std::uint32_t>(is, "rank");
    std::vector<std::size_t> dims(rank);
    std::size_t n = 1;
    for (auto& d : dims) {
      d = static_cast<std::size_t>(get<std::uint64_t>(is, "dims"));
      n *= d;
    }
    Tensor t = Tensor::zeros(dims);
    for (std::size_t i = 0; i < n; ++i)
      t.data[i] = static_cast<real>(get<double>(is, "values"));
    out.add(std::move(name), std::move(t));
  }
  return out;
}

}  // namespace lamp
