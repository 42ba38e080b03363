#pragma once
// Binary named-tensor files: magic "IMACTNS1", tensor count, then for each
// tensor its name, rows, cols and column-major little-endian doubles.
// Values are stored bit-exactly, so save -> load round-trips identically.

#include "imac/nn.hpp"

#include <filesystem>
#include <span>
#include <vector>

namespace imac {

void save_tensors(const std::filesystem::path& path, std::span<const ParamView> tensors);

// Every view must be present in the file under the same name and shape.
// Extra tensors in the file are an error unless allow_extra is set.
void load_tensors(const std::filesystem::path& path, std::span<const ParamView> tensors,
                  bool allow_extra = false);

}  // namespace imac
