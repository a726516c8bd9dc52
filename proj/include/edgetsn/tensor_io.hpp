#pragma once

#include <filesystem>
#include <iosfwd>

#include "edgetsn/tensor.hpp"

namespace edgetsn {

// `.ten` layout: u32 rank, rank x u64 dims, then the f64 payload. All
// fields little-endian regardless of host byte order.
void write_tensor(std::ostream& os, const Tensor& t);
Tensor read_tensor(std::istream& is);

void save_tensor(const std::filesystem::path& path, const Tensor& t);
Tensor load_tensor(const std::filesystem::path& path);

}  // namespace edgetsn
