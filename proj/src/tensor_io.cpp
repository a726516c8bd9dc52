#include "edgetsn/tensor_io.hpp"

#include <fstream>

#include "edgetsn/binary_io.hpp"
#include "edgetsn/error.hpp"

namespace edgetsn {

namespace {
constexpr std::uint32_t kMaxRank = 16;
}

void write_tensor(std::ostream& os, const Tensor& t) {
  detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(t.rank()));
  for (const std::size_t d : t.shape()) {
    detail::put_le<std::uint64_t>(os, d);
  }
  for (const double v : t.data()) {
    detail::put_le<double>(os, v);
  }
  if (!os) {
    throw DataError("failed writing tensor");
  }
}

Tensor read_tensor(std::istream& is) {
  const auto rank = detail::get_le<std::uint32_t>(is);
  if (rank == 0 || rank > kMaxRank) {
    throw DataError("tensor file has invalid rank " + std::to_string(rank));
  }
  Shape shape(rank);
  for (auto& d : shape) {
    d = detail::get_le<std::uint64_t>(is);
    if (d == 0) {
      throw DataError("tensor file has a zero dimension");
    }
  }
  Tensor t(shape);
  for (double& v : t.data()) {
    v = detail::get_le<double>(is);
  }
  return t;
}

void save_tensor(const std::filesystem::path& path, const Tensor& t) {
  std::ofstream os(path, std::ios::binary);
  if (!os) {
    throw DataError("cannot open " + path.string() + " for writing");
  }
  write_tensor(os, t);
}

Tensor load_tensor(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) {
    throw DataError("cannot open " + path.string());
  }
  try {
    return read_tensor(is);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace edgetsn
