#pragma once

#include <cstddef>
#include <string_view>

// Data-parallel inner loops shared by the convolution, affine and
// elementwise primitives. Each kernel has a scalar reference version and
// vectorized variants; one table is selected at runtime.

namespace edgetsn::simd {

enum class Isa { scalar, avx2 };

struct KernelTable {
  Isa isa;
  // y[i] += a * x[i]
  void (*axpy)(std::size_t n, double a, const double* x, double* y);
  // sum_i x[i] * y[i]
  double (*dot)(std::size_t n, const double* x, const double* y);
  // y[i] += x[i]
  void (*add)(std::size_t n, const double* x, double* y);
  // y[i] *= a
  void (*scale)(std::size_t n, double a, double* y);
  // y[i] = max(x[i], 0)
  void (*relu)(std::size_t n, const double* x, double* y);
  // gx[i] += x[i] > 0 ? g[i] : 0
  void (*relu_backward)(std::size_t n, const double* x, const double* g, double* gx);
};

namespace scalar {
const KernelTable& table() noexcept;
}

#if defined(__x86_64__) || defined(_M_X64)
namespace avx2 {
const KernelTable& table() noexcept;
}
#endif

bool isa_supported(Isa isa) noexcept;
std::string_view isa_name(Isa isa) noexcept;

// The active table. Picked on first use: the widest supported ISA, unless
// EDGETSN_ISA=scalar|avx2 overrides it.
const KernelTable& kernels() noexcept;
Isa active_isa() noexcept;

// Throws ContractError when the ISA is unavailable on this CPU.
void set_isa(Isa isa);

// Swaps the active ISA for the lifetime of the guard.
class ScopedIsa {
 public:
  explicit ScopedIsa(Isa isa);
  ~ScopedIsa();
  ScopedIsa(const ScopedIsa&) = delete;
  ScopedIsa& operator=(const ScopedIsa&) = delete;

 private:
  Isa previous_;
};

}  // namespace edgetsn::simd
