#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "zipfmem/nn/tensor.hpp"

namespace zipfmem::nn {

// Named arrays plus string metadata, persisted in a versioned little-endian
// binary layout:
//
//   "ZMCKPT\0\0"  u32 version  u32 scalar_bytes
//   u64 n_meta    { u32 len, key bytes, u32 len, value bytes } * n_meta
//   u64 n_arrays  { u32 len, name bytes, u32 rank, u64 dims[rank], raw values } * n_arrays
//
// Values are stored bit-for-bit, so a load reproduces the saved arrays exactly.
template <typename T>
struct Archive {
  struct Array {
    Shape shape;
    std::vector<T> values;
  };

  std::map<std::string, std::string> meta;
  std::map<std::string, Array> arrays;

  void put(const std::string& name, const Tensor<T>& tensor);
  void put(const std::string& name, Shape shape, std::vector<T> values);
  const Array& get(const std::string& name) const;
  bool contains(const std::string& name) const { return arrays.count(name) != 0; }
  // Copies the named array into an existing tensor of the same shape.
  void load_into(const std::string& name, Tensor<T>& tensor) const;
  const std::string& meta_value(const std::string& key) const;
};

inline constexpr std::uint32_t kArchiveVersion = 1;

template <typename T>
void save_archive(const Archive<T>& archive, const std::filesystem::path& path);

template <typename T>
Archive<T> load_archive(const std::filesystem::path& path);

}  // namespace zipfmem::nn
