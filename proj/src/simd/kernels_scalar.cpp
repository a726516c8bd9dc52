#include "edgetsn/simd/kernels.hpp"

namespace edgetsn::simd::scalar {

namespace {

void axpy(std::size_t n, double a, const double* x, double* y) {
  for (std::size_t i = 0; i < n; ++i) {
    y[i] += a * x[i];
  }
}

double dot(std::size_t n, const double* x, const double* y) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    s += x[i] * y[i];
  }
  return s;
}

void add(std::size_t n, const double* x, double* y) {
  for (std::size_t i = 0; i < n; ++i) {
    y[i] += x[i];
  }
}

void scale(std::size_t n, double a, double* y) {
  for (std::size_t i = 0; i < n; ++i) {
    y[i] *= a;
  }
}

void relu(std::size_t n, const double* x, double* y) {
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = x[i] > 0.0 ? x[i] : 0.0;
  }
}

void relu_backward(std::size_t n, const double* x, const double* g, double* gx) {
  for (std::size_t i = 0; i < n; ++i) {
    if (x[i] > 0.0) {
      gx[i] += g[i];
    }
  }
}

}  // namespace

const KernelTable& table() noexcept {
  static const KernelTable t{Isa::scalar, axpy, dot, add, scale, relu, relu_backward};
  return t;
}

}  // namespace edgetsn::simd::scalar
