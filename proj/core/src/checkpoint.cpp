#include "leap/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace leap::checkpoint {

namespace {

constexpr char kMagic[8] = {'L', 'E', 'A', 'P', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

void write_u64(std::ostream& os, std::uint64_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint64_t read_u64(std::istream& is) {
  std::uint64_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!is) throw std::runtime_error("checkpoint: truncated file");
  return v;
}

}  // namespace

void save(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("checkpoint: cannot open " + path);
  os.write(kMagic, sizeof(kMagic));
  std::uint32_t version = kVersion;
  os.write(reinterpret_cast<const char*>(&version), sizeof(version));
  write_u64(os, ckpt.header.size());
  os.write(ckpt.header.data(), static_cast<std::streamsize>(ckpt.header.size()));
  write_u64(os, ckpt.arrays.size());
  for (auto& [name, t] : ckpt.arrays) {
    write_u64(os, name.size());
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_u64(os, t.shape.size());
    for (std::size_t d : t.shape) write_u64(os, d);
    os.write(reinterpret_cast<const char*>(t.data.data()),
             static_cast<std::streamsize>(t.data.size() * sizeof(double)));
  }
  if (!os) throw std::runtime_error("checkpoint: write failed for " + path);
}

Checkpoint load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("checkpoint: cannot open " + path);
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error("checkpoint: bad magic in " + path);
  std::uint32_t version = 0;
  is.read(reinterpret_cast<char*>(&version), sizeof(version));
  if (!is || version != kVersion)
    throw std::runtime_error("checkpoint: unsupported version in " + path);
  Checkpoint ckpt;
  std::uint64_t header_len = read_u64(is);
  ckpt.header.resize(header_len);
  is.read(ckpt.header.data(), static_cast<std::streamsize>(header_len));
  if (!is) throw std::runtime_error("checkpoint: truncated file");
  std::uint64_t count = read_u64(is);
  for (std::uint64_t i = 0; i < count; ++i) {
    std::uint64_t name_len = read_u64(is);
    std::string name(name_len, '\0');
    is.read(name.data(), static_cast<std::streamsize>(name_len));
    std::uint64_t rank = read_u64(is);
    std::vector<std::size_t> shape(rank);
    for (auto& d : shape) d = read_u64(is);
    tensor::Tensor t(shape);
    is.read(reinterpret_cast<char*>(t.data.data()),
            static_cast<std::streamsize>(t.data.size() * sizeof(double)));
    if (!is) throw std::runtime_error("checkpoint: truncated file");
    ckpt.arrays.emplace(std::move(name), std::move(t));
  }
  return ckpt;
}

}  // namespace leap::checkpoint
