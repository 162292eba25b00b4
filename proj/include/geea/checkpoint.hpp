#pragma once

#include "geea/autodiff.hpp"

#include <filesystem>
#include <memory>
#include <vector>

namespace geea {

// Single-file parameter archive: magic + count, then per tensor a name,
// a (rows, cols) pair as little-endian 64-bit integers and the values as
// little-endian 32-bit floats, row-major. save(load(f)) reproduces f
// byte for byte.
void save_checkpoint(const std::filesystem::path& path,
                     const std::vector<std::shared_ptr<ad::Tensor>>& tensors);

// Fills the given tensors from the archive, matching by name. Throws on a
// missing name or a shape mismatch.
void load_checkpoint(const std::filesystem::path& path,
                     const std::vector<std::shared_ptr<ad::Tensor>>& tensors);

}  // namespace geea
