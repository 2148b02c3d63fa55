#include "zipfmem/nn/checkpoint.hpp"

#include <algorithm>
#include <array>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace zipfmem::nn {

namespace {

constexpr std::array<char, 8> kMagic{'Z', 'M', 'C', 'K', 'P', 'T', '\0', '\0'};

template <typename U>
void write_pod(std::ostream& os, U value) {
  os.write(reinterpret_cast<const char*>(&value), sizeof(U));
}

template <typename U>
U read_pod(std::istream& is) {
  U value{};
  is.read(reinterpret_cast<char*>(&value), sizeof(U));
  if (!is) throw std::runtime_error("checkpoint: truncated file");
  return value;
}

void write_string(std::ostream& os, const std::string& s) {
  write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& is) {
  const auto len = read_pod<std::uint32_t>(is);
  if (len > (1u << 20)) throw std::runtime_error("checkpoint: implausible string length");
  std::string s(len, '\0');
  is.read(s.data(), len);
  if (!is) throw std::runtime_error("checkpoint: truncated file");
  return s;
}

}  // namespace

template <typename T>
void Archive<T>::put(const std::string& name, const Tensor<T>& tensor) {
  put(name, tensor.shape(), std::vector<T>(tensor.data().begin(), tensor.data().end()));
}

template <typename T>
void Archive<T>::put(const std::string& name, Shape shape, std::vector<T> values) {
  if (numel(shape) != values.size() && !(shape.empty() && values.empty())) {
    throw std::invalid_argument("archive: shape/value mismatch for '" + name + "'");
  }
  arrays[name] = Array{std::move(shape), std::move(values)};
}

template <typename T>
const typename Archive<T>::Array& Archive<T>::get(const std::string& name) const {
  auto it = arrays.find(name);
  if (it == arrays.end()) throw std::runtime_error("checkpoint: missing array '" + name + "'");
  return it->second;
}

template <typename T>
void Archive<T>::load_into(const std::string& name, Tensor<T>& tensor) const {
  const auto& array = get(name);
  if (array.shape != tensor.shape()) {
    throw std::runtime_error("checkpoint: array '" + name + "' has shape " + shape_str(array.shape) + ", expected " +
                             shape_str(tensor.shape()));
  }
  std::copy(array.values.begin(), array.values.end(), tensor.mutable_data().begin());
}

template <typename T>
const std::string& Archive<T>::meta_value(const std::string& key) const {
  auto it = meta.find(key);
  if (it == meta.end()) throw std::runtime_error("checkpoint: missing metadata '" + key + "'");
  return it->second;
}

template <typename T>
void save_archive(const Archive<T>& archive, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("checkpoint: cannot open '" + path.string() + "' for writing");
  os.write(kMagic.data(), kMagic.size());
  write_pod<std::uint32_t>(os, kArchiveVersion);
  write_pod<std::uint32_t>(os, sizeof(T));
  write_pod<std::uint64_t>(os, archive.meta.size());
  for (const auto& [key, value] : archive.meta) {
    write_string(os, key);
    write_string(os, value);
  }
  write_pod<std::uint64_t>(os, archive.arrays.size());
  for (const auto& [name, array] : archive.arrays) {
    write_string(os, name);
    write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(array.shape.size()));
    for (auto d : array.shape) write_pod<std::uint64_t>(os, d);
    os.write(reinterpret_cast<const char*>(array.values.data()),
             static_cast<std::streamsize>(array.values.size() * sizeof(T)));
  }
  if (!os) throw std::runtime_error("checkpoint: write failed for '" + path.string() + "'");
}

template <typename T>
Archive<T> load_archive(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("checkpoint: cannot open '" + path.string() + "'");
  std::array<char, 8> magic{};
  is.read(magic.data(), magic.size());
  if (!is || magic != kMagic) throw std::runtime_error("checkpoint: '" + path.string() + "' is not a checkpoint file");
  const auto version = read_pod<std::uint32_t>(is);
  if (version != kArchiveVersion) throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));
  const auto scalar_bytes = read_pod<std::uint32_t>(is);
  if (scalar_bytes != sizeof(T)) {
    throw std::runtime_error("checkpoint: stored with " + std::to_string(scalar_bytes) + "-byte scalars, expected " +
                             std::to_string(sizeof(T)));
  }
  Archive<T> archive;
  const auto n_meta = read_pod<std::uint64_t>(is);
  for (std::uint64_t i = 0; i < n_meta; ++i) {
    auto key = read_string(is);
    archive.meta[key] = read_string(is);
  }
  const auto n_arrays = read_pod<std::uint64_t>(is);
  for (std::uint64_t i = 0; i < n_arrays; ++i) {
    auto name = read_string(is);
    const auto rank = read_pod<std::uint32_t>(is);
    Shape shape(rank);
    for (auto& d : shape) d = read_pod<std::uint64_t>(is);
    std::vector<T> values(rank == 0 ? 0 : numel(shape));
    is.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(T)));
    if (!is) throw std::runtime_error("checkpoint: truncated array '" + name + "'");
    archive.arrays[name] = {std::move(shape), std::move(values)};
  }
  return archive;
}

template struct Archive<float>;
template struct Archive<double>;
template void save_archive(const Archive<float>&, const std::filesystem::path&);
template void save_archive(const Archive<double>&, const std::filesystem::path&);
template Archive<float> load_archive(const std::filesystem::path&);
template Archive<double> load_archive(const std::filesystem::path&);

}  // namespace zipfmem::nn
