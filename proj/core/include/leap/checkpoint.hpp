#pragma once

#include <map>
#include <string>

#include "leap/tensor.hpp"

namespace leap::checkpoint {

/// Versioned binary container of named parameter arrays plus a free-form
/// text header. Save/load round-trips are bit-exact.
struct Checkpoint {
  std::string header;
  std::map<std::string, tensor::Tensor> arrays;
};

void save(const std::string& path, const Checkpoint& ckpt);
Checkpoint load(const std::string& path);

}  // namespace leap::checkpoint
