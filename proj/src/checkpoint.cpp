#include "dca/checkpoint.hpp"

namespace dca {

std::string checkpoint_config(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("checkpoint: cannot read " + path);
  if (detail::read_pod<std::uint32_t>(is) != kCheckpointMagic) throw std::runtime_error("checkpoint: bad magic in " + path);
  detail::read_pod<std::uint32_t>(is);  // version
  detail::read_pod<std::int64_t>(is);   // iter
  return detail::read_string(is);
}

std::uint64_t file_digest(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("file_digest: cannot read " + path);
  std::uint64_t h = 14695981039346656037ull;
  char buf[4096];
  while (is.read(buf, sizeof(buf)) || is.gcount() > 0) {
    for (std::streamsize i = 0; i < is.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ull;
    }
    if (!is) break;
  }
  return h;
}

}  // namespace dca
