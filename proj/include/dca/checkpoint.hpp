#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <string>

#include "dca/layers.hpp"

namespace dca {

// Versioned checkpoint archive: magic, version, iteration count, the full
// experiment config as a JSON string, then every parameter and buffer keyed
// by hierarchical name. Loading fails loudly on any key or shape mismatch.

constexpr std::uint32_t kCheckpointMagic = 0x4443414E;  // "DCAN"
constexpr std::uint32_t kCheckpointVersion = 1;

namespace detail {

template <typename T>
void write_pod(std::ostream& os, const T& x) {
  os.write(reinterpret_cast<const char*>(&x), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is) {
  T x{};
  is.read(reinterpret_cast<char*>(&x), sizeof(T));
  if (!is) throw std::runtime_error("checkpoint: truncated file");
  return x;
}

inline void write_string(std::ostream& os, const std::string& s) {
  write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string read_string(std::istream& is) {
  auto n = read_pod<std::uint32_t>(is);
  std::string s(n, '\0');
  is.read(s.data(), n);
  if (!is) throw std::runtime_error("checkpoint: truncated string");
  return s;
}

template <typename T>
void write_tensor(std::ostream& os, const std::string& name, const Tensor<T>& t) {
  write_string(os, name);
  write_pod<std::uint8_t>(os, static_cast<std::uint8_t>(sizeof(T)));
  write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(t.shape.size()));
  for (int d : t.shape) write_pod<std::int32_t>(os, d);
  os.write(reinterpret_cast<const char*>(t.v.data()), static_cast<std::streamsize>(t.size() * sizeof(T)));
}

template <typename T>
std::pair<std::string, Tensor<T>> read_tensor(std::istream& is) {
  std::string name = read_string(is);
  auto width = read_pod<std::uint8_t>(is);
  if (width != sizeof(T))
    throw std::runtime_error("checkpoint: entry '" + name + "' has element width " + std::to_string(width) +
                             ", expected " + std::to_string(sizeof(T)));
  auto rank = read_pod<std::uint32_t>(is);
  std::vector<int> shape(rank);
  for (auto& d : shape) d = read_pod<std::int32_t>(is);
  Tensor<T> t(shape);
  is.read(reinterpret_cast<char*>(t.v.data()), static_cast<std::streamsize>(t.size() * sizeof(T)));
  if (!is) throw std::runtime_error("checkpoint: truncated tensor data for '" + name + "'");
  return {name, std::move(t)};
}

}  // namespace detail

template <typename T>
void save_checkpoint(const std::string& path, StateDict<T>& sd, const std::string& config_json, std::int64_t iter) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("checkpoint: cannot write " + path);
  detail::write_pod(os, kCheckpointMagic);
  detail::write_pod(os, kCheckpointVersion);
  detail::write_pod(os, iter);
  detail::write_string(os, config_json);
  detail::write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(sd.params.size() + sd.buffers.size()));
  for (auto& [name, var] : sd.params) detail::write_tensor(os, name, var->value);
  for (auto& [name, buf] : sd.buffers) detail::write_tensor(os, name, *buf);
  if (!os) throw std::runtime_error("checkpoint: write failed for " + path);
}

// Reads only the embedded config (to rebuild the model before loading state).
std::string checkpoint_config(const std::string& path);

template <typename T>
std::int64_t load_checkpoint(const std::string& path, StateDict<T>& sd, std::string* config_json = nullptr) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("checkpoint: cannot read " + path);
  if (detail::read_pod<std::uint32_t>(is) != kCheckpointMagic) throw std::runtime_error("checkpoint: bad magic in " + path);
  auto version = detail::read_pod<std::uint32_t>(is);
  if (version != kCheckpointVersion)
    throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));
  auto iter = detail::read_pod<std::int64_t>(is);
  std::string cfg = detail::read_string(is);
  if (config_json) *config_json = cfg;
  auto count = detail::read_pod<std::uint32_t>(is);
  std::map<std::string, Tensor<T>> entries;
  for (std::uint32_t i = 0; i < count; ++i) {
    auto [name, t] = detail::read_tensor<T>(is);
    entries.emplace(std::move(name), std::move(t));
  }
  std::string missing, extra;
  auto take = [&](const std::string& name, Tensor<T>& dst) {
    auto it = entries.find(name);
    if (it == entries.end()) {
      missing += (missing.empty() ? "" : ", ") + name;
      return;
    }
    if (it->second.shape != dst.shape)
      throw std::runtime_error("checkpoint: shape mismatch for '" + name + "': file " + shape_str(it->second.shape) +
                               " vs model " + shape_str(dst.shape));
    dst = std::move(it->second);
    entries.erase(it);
  };
  for (auto& [name, var] : sd.params) take(name, var->value);
  for (auto& [name, buf] : sd.buffers) take(name, *buf);
  for (auto& [name, _] : entries) extra += (extra.empty() ? "" : ", ") + name;
  if (!missing.empty() || !extra.empty())
    throw std::runtime_error("checkpoint: key mismatch for " + path +
                             (missing.empty() ? "" : "; missing from file: " + missing) +
                             (extra.empty() ? "" : "; unexpected in file: " + extra));
  return iter;
}

// FNV-1a digest of a file, used for determinism checks and run provenance.
std::uint64_t file_digest(const std::string& path);

}  // namespace dca
