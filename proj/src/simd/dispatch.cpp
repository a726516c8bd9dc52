#include <atomic>
#include <cstdlib>
#include <string>

#include "edgetsn/error.hpp"
#include "edgetsn/simd/kernels.hpp"

namespace edgetsn::simd {

namespace {

const KernelTable& table_for(Isa isa) noexcept {
#if defined(__x86_64__) || defined(_M_X64)
  if (isa == Isa::avx2) {
    return avx2::table();
  }
#endif
  return scalar::table();
}

Isa detect_default() noexcept {
  if (const char* env = std::getenv("EDGETSN_ISA")) {
    const std::string want(env);
    if (want == "scalar") {
      return Isa::scalar;
    }
    if (want == "avx2" && isa_supported(Isa::avx2)) {
      return Isa::avx2;
    }
  }
  return isa_supported(Isa::avx2) ? Isa::avx2 : Isa::scalar;
}

std::atomic<const KernelTable*>& active_slot() noexcept {
  static std::atomic<const KernelTable*> slot{&table_for(detect_default())};
  return slot;
}

}  // namespace

bool isa_supported(Isa isa) noexcept {
  switch (isa) {
    case Isa::scalar:
      return true;
    case Isa::avx2:
#if (defined(__x86_64__) || defined(_M_X64)) && (defined(__GNUC__) || defined(__clang__))
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
  }
  return false;
}

std::string_view isa_name(Isa isa) noexcept { return isa == Isa::avx2 ? "avx2" : "scalar"; }

const KernelTable& kernels() noexcept { return *active_slot().load(std::memory_order_acquire); }

Isa active_isa() noexcept { return kernels().isa; }

void set_isa(Isa isa) {
  if (!isa_supported(isa)) {
    throw ContractError("ISA " + std::string(isa_name(isa)) + " is not supported on this CPU");
  }
  active_slot().store(&table_for(isa), std::memory_order_release);
}

ScopedIsa::ScopedIsa(Isa isa) : previous_(active_isa()) { set_isa(isa); }

ScopedIsa::~ScopedIsa() { active_slot().store(&table_for(previous_), std::memory_order_release); }

}  // namespace edgetsn::simd
