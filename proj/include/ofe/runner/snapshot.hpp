#pragma once

#include "ofe/gradkit/tensor.hpp"

#include <filesystem>
#include <vector>

namespace ofe {

/// Parameter snapshot file:
///   8-byte magic "OFESNAP1", uint64 array count, then per array
///   uint32 name length, name bytes, uint64 rows, uint64 cols,
///   rows * cols float64 values in row-major order. Native byte order.
void write_snapshot(const std::filesystem::path& path, const std::vector<NamedArray>& arrays);
std::vector<NamedArray> read_snapshot(const std::filesystem::path& path);

}  // namespace ofe
