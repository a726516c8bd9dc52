#include "edgetsn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "edgetsn/error.hpp"
#include "edgetsn/simd/kernels.hpp"

namespace edgetsn::ops {

std::size_t conv_out_dim(std::size_t in, std::size_t kernel, std::size_t stride, std::size_t padding) {
  if (stride == 0) {
    throw ContractError("stride must be >= 1");
  }
  if (kernel == 0 || kernel > in + 2 * padding) {
    throw ShapeError("window " + std::to_string(kernel) + " does not fit padded extent " +
                     std::to_string(in + 2 * padding));
  }
  return (in + 2 * padding - kernel) / stride + 1;
}

namespace {

struct ConvGeometry {
  std::size_t channels, frames, height, width;
  std::size_t out_channels, kt, kh, kw;
  Dims3 stride, pad;
  std::size_t out_t, out_h, out_w;
};

ConvGeometry make_geometry(const Shape& in, const Shape& k, Dims3 stride, Dims3 pad) {
  if (in.size() != 4 || k.size() != 5) {
    throw ShapeError("conv3d expects C x T x H x W input and O x C x Nt x Nh x Nw kernels, got " +
                     shape_to_string(in) + " and " + shape_to_string(k));
  }
  if (in[0] != k[1]) {
    throw ShapeError("input has " + std::to_string(in[0]) + " channels but kernels expect " + std::to_string(k[1]));
  }
  ConvGeometry g{};
  g.channels = in[0];
  g.frames = in[1];
  g.height = in[2];
  g.width = in[3];
  g.out_channels = k[0];
  g.kt = k[2];
  g.kh = k[3];
  g.kw = k[4];
  g.stride = stride;
  g.pad = pad;
  g.out_t = conv_out_dim(g.frames, g.kt, stride[0], pad[0]);
  g.out_h = conv_out_dim(g.height, g.kh, stride[1], pad[1]);
  g.out_w = conv_out_dim(g.width, g.kw, stride[2], pad[2]);
  return g;
}

// Output columns [lo, hi) whose input column ow*stride + kx - pad is in range.
void valid_cols(const ConvGeometry& g, std::size_t kx, std::size_t& lo, std::size_t& hi) {
  const std::ptrdiff_t s = static_cast<std::ptrdiff_t>(g.stride[2]);
  const std::ptrdiff_t off = static_cast<std::ptrdiff_t>(kx) - static_cast<std::ptrdiff_t>(g.pad[2]);
  const std::ptrdiff_t w = static_cast<std::ptrdiff_t>(g.width);
  // smallest ow with ow*s + off >= 0
  std::ptrdiff_t first = off >= 0 ? 0 : (-off + s - 1) / s;
  // largest ow with ow*s + off <= w - 1
  std::ptrdiff_t last = (w - 1 - off) >= 0 ? (w - 1 - off) / s : -1;
  last = std::min<std::ptrdiff_t>(last, static_cast<std::ptrdiff_t>(g.out_w) - 1);
  if (last < first) {
    lo = hi = 0;
    return;
  }
  lo = static_cast<std::size_t>(first);
  hi = static_cast<std::size_t>(last) + 1;
}

bool in_range(std::size_t out_idx, std::size_t k, std::size_t stride, std::size_t pad, std::size_t extent,
              std::size_t& in_idx) {
  const std::size_t pos = out_idx * stride + k;
  if (pos < pad || pos - pad >= extent) {
    return false;
  }
  in_idx = pos - pad;
  return true;
}

// Visits every (input row, output row, kernel tap) triple of the convolution.
// fn(weight_offset, in_row, out_row, col_lo, col_hi, kx) with rows as flat offsets.
template <typename Fn>
void for_each_row_tap(const ConvGeometry& g, Fn&& fn) {
  const std::size_t in_plane = g.height * g.width;
  const std::size_t in_vol = g.frames * in_plane;
  const std::size_t out_plane = g.out_h * g.out_w;
  const std::size_t out_vol = g.out_t * out_plane;
  for (std::size_t o = 0; o < g.out_channels; ++o) {
    for (std::size_t c = 0; c < g.channels; ++c) {
      for (std::size_t zt = 0; zt < g.kt; ++zt) {
        for (std::size_t zy = 0; zy < g.kh; ++zy) {
          for (std::size_t zx = 0; zx < g.kw; ++zx) {
            const std::size_t widx = (((o * g.channels + c) * g.kt + zt) * g.kh + zy) * g.kw + zx;
            std::size_t lo = 0;
            std::size_t hi = 0;
            valid_cols(g, zx, lo, hi);
            if (lo >= hi) {
              continue;
            }
            for (std::size_t ot = 0; ot < g.out_t; ++ot) {
              std::size_t it = 0;
              if (!in_range(ot, zt, g.stride[0], g.pad[0], g.frames, it)) {
                continue;
              }
              for (std::size_t oy = 0; oy < g.out_h; ++oy) {
                std::size_t iy = 0;
                if (!in_range(oy, zy, g.stride[1], g.pad[1], g.height, iy)) {
                  continue;
                }
                const std::size_t in_row = c * in_vol + it * in_plane + iy * g.width;
                const std::size_t out_row = o * out_vol + ot * out_plane + oy * g.out_w;
                fn(widx, in_row, out_row, lo, hi, zx);
              }
            }
          }
        }
      }
    }
  }
}

Shape as_3d_input(const Shape& s) {
  if (s.size() != 3) {
    throw ShapeError("conv2d expects C x H x W input, got " + shape_to_string(s));
  }
  return {s[0], 1, s[1], s[2]};
}

Shape as_3d_kernel(const Shape& s) {
  if (s.size() != 4) {
    throw ShapeError("conv2d expects O x C x N x N kernels, got " + shape_to_string(s));
  }
  return {s[0], s[1], 1, s[2], s[3]};
}

void conv_forward_raw(const ConvGeometry& g, const double* x, const double* w, double* y) {
  const auto& k = simd::kernels();
  const std::size_t sw = g.stride[2];
  for_each_row_tap(g, [&](std::size_t widx, std::size_t in_row, std::size_t out_row, std::size_t lo,
                          std::size_t hi, std::size_t zx) {
    const double a = w[widx];
    const double* src = x + in_row + lo * sw + zx - g.pad[2];
    double* dst = y + out_row + lo;
    if (sw == 1) {
      k.axpy(hi - lo, a, src, dst);
    } else {
      for (std::size_t i = 0; i < hi - lo; ++i) {
        dst[i] += a * src[i * sw];
      }
    }
  });
}

void conv_backward_raw(const ConvGeometry& g, const double* x, const double* w, const double* gy, double* gx,
                       double* gw) {
  const auto& k = simd::kernels();
  const std::size_t sw = g.stride[2];
  for_each_row_tap(g, [&](std::size_t widx, std::size_t in_row, std::size_t out_row, std::size_t lo,
                          std::size_t hi, std::size_t zx) {
    const std::size_t n = hi - lo;
    const std::size_t in_off = in_row + lo * sw + zx - g.pad[2];
    const double* go = gy + out_row + lo;
    if (sw == 1) {
      if (gw) {
        gw[widx] += k.dot(n, go, x + in_off);
      }
      if (gx) {
        k.axpy(n, w[widx], go, gx + in_off);
      }
    } else {
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        acc += go[i] * x[in_off + i * sw];
        if (gx) {
          gx[in_off + i * sw] += w[widx] * go[i];
        }
      }
      if (gw) {
        gw[widx] += acc;
      }
    }
  });
}

void check_backward_shapes(const Tensor& input, const Tensor& kernels, const Tensor& grad_out,
                           const Shape& out_shape, const Tensor* grad_input, const Tensor* grad_kernels) {
  if (grad_out.shape() != out_shape) {
    throw ShapeError("conv backward: grad_out " + shape_to_string(grad_out.shape()) + " expected " +
                     shape_to_string(out_shape));
  }
  if (grad_input && grad_input->shape() != input.shape()) {
    throw ShapeError("conv backward: grad_input shape mismatch");
  }
  if (grad_kernels && grad_kernels->shape() != kernels.shape()) {
    throw ShapeError("conv backward: grad_kernels shape mismatch");
  }
}

}  // namespace

Tensor conv3d(const Tensor& input, const Tensor& kernels, Dims3 stride, Dims3 padding) {
  const ConvGeometry g = make_geometry(input.shape(), kernels.shape(), stride, padding);
  Tensor out({g.out_channels, g.out_t, g.out_h, g.out_w});
  conv_forward_raw(g, input.ptr(), kernels.ptr(), out.ptr());
  return out;
}

void conv3d_backward(const Tensor& input, const Tensor& kernels, const Tensor& grad_out, Dims3 stride,
                     Dims3 padding, Tensor* grad_input, Tensor* grad_kernels) {
  const ConvGeometry g = make_geometry(input.shape(), kernels.shape(), stride, padding);
  check_backward_shapes(input, kernels, grad_out, {g.out_channels, g.out_t, g.out_h, g.out_w}, grad_input,
                        grad_kernels);
  conv_backward_raw(g, input.ptr(), kernels.ptr(), grad_out.ptr(), grad_input ? grad_input->ptr() : nullptr,
                    grad_kernels ? grad_kernels->ptr() : nullptr);
}

Tensor conv2d(const Tensor& input, const Tensor& kernels, std::size_t stride, std::size_t padding) {
  const ConvGeometry g =
      make_geometry(as_3d_input(input.shape()), as_3d_kernel(kernels.shape()), {1, stride, stride}, {0, padding, padding});
  Tensor out({g.out_channels, g.out_h, g.out_w});
  conv_forward_raw(g, input.ptr(), kernels.ptr(), out.ptr());
  return out;
}

void conv2d_backward(const Tensor& input, const Tensor& kernels, const Tensor& grad_out, std::size_t stride,
                     std::size_t padding, Tensor* grad_input, Tensor* grad_kernels) {
  const ConvGeometry g =
      make_geometry(as_3d_input(input.shape()), as_3d_kernel(kernels.shape()), {1, stride, stride}, {0, padding, padding});
  check_backward_shapes(input, kernels, grad_out, {g.out_channels, g.out_h, g.out_w}, grad_input, grad_kernels);
  conv_backward_raw(g, input.ptr(), kernels.ptr(), grad_out.ptr(), grad_input ? grad_input->ptr() : nullptr,
                    grad_kernels ? grad_kernels->ptr() : nullptr);
}

void bias_add_inplace(Tensor& x, const Tensor& bias) {
  if (bias.rank() != 1 || bias.size() != x.dim(0)) {
    throw ShapeError("bias of shape " + shape_to_string(bias.shape()) + " does not match channels of " +
                     shape_to_string(x.shape()));
  }
  const std::size_t per = x.size() / x.dim(0);
  for (std::size_t c = 0; c < x.dim(0); ++c) {
    double* row = x.ptr() + c * per;
    const double b = bias[c];
    for (std::size_t i = 0; i < per; ++i) {
      row[i] += b;
    }
  }
}

void bias_add_backward(const Tensor& grad_out, Tensor& grad_bias) {
  if (grad_bias.size() != grad_out.dim(0)) {
    throw ShapeError("bias_add_backward: channel mismatch");
  }
  const std::size_t per = grad_out.size() / grad_out.dim(0);
  for (std::size_t c = 0; c < grad_out.dim(0); ++c) {
    double s = 0.0;
    const double* row = grad_out.ptr() + c * per;
    for (std::size_t i = 0; i < per; ++i) {
      s += row[i];
    }
    grad_bias[c] += s;
  }
}

Tensor relu(const Tensor& x) {
  Tensor out(x.shape());
  simd::kernels().relu(x.size(), x.ptr(), out.ptr());
  return out;
}

void relu_backward(const Tensor& x, const Tensor& grad_out, Tensor& grad_input) {
  if (x.shape() != grad_out.shape() || x.shape() != grad_input.shape()) {
    throw ShapeError("relu_backward: shape mismatch");
  }
  simd::kernels().relu_backward(x.size(), x.ptr(), grad_out.ptr(), grad_input.ptr());
}

namespace {

void pool_raw(const Tensor& x, std::size_t C, std::size_t T, std::size_t H, std::size_t W, Dims3 window,
              Dims3 stride, PoolResult& r) {
  const std::size_t ot = conv_out_dim(T, window[0], stride[0], 0);
  const std::size_t oh = conv_out_dim(H, window[1], stride[1], 0);
  const std::size_t ow = conv_out_dim(W, window[2], stride[2], 0);
  r.output = Tensor({C, ot, oh, ow});
  r.argmax.assign(r.output.size(), 0);
  std::size_t o = 0;
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t t = 0; t < ot; ++t) {
      for (std::size_t h = 0; h < oh; ++h) {
        for (std::size_t w = 0; w < ow; ++w, ++o) {
          double best = -std::numeric_limits<double>::infinity();
          std::size_t best_idx = std::numeric_limits<std::size_t>::max();
          for (std::size_t a = 0; a < window[0]; ++a) {
            for (std::size_t b = 0; b < window[1]; ++b) {
              const std::size_t base = ((c * T + t * stride[0] + a) * H + h * stride[1] + b) * W + w * stride[2];
              for (std::size_t d = 0; d < window[2]; ++d) {
                const double v = x[base + d];
                if (best_idx == std::numeric_limits<std::size_t>::max() || v > best) {
                  best = v;
                  best_idx = base + d;
                }
              }
            }
          }
          r.output[o] = best;
          r.argmax[o] = best_idx;
        }
      }
    }
  }
}

}  // namespace

PoolResult max_pool3d_indexed(const Tensor& x, Dims3 window, Dims3 stride) {
  if (x.rank() != 4) {
    throw ShapeError("max_pool3d expects C x T x H x W, got " + shape_to_string(x.shape()));
  }
  PoolResult r;
  pool_raw(x, x.dim(0), x.dim(1), x.dim(2), x.dim(3), window, stride, r);
  return r;
}

PoolResult max_pool2d_indexed(const Tensor& x, std::size_t window, std::size_t stride) {
  if (x.rank() != 3) {
    throw ShapeError("max_pool2d expects C x H x W, got " + shape_to_string(x.shape()));
  }
  PoolResult r;
  pool_raw(x, x.dim(0), 1, x.dim(1), x.dim(2), {1, window, window}, {1, stride, stride}, r);
  const Shape& s = r.output.shape();
  r.output = std::move(r.output).reshaped({s[0], s[2], s[3]});
  return r;
}

Tensor max_pool3d(const Tensor& x, Dims3 window, Dims3 stride) {
  return max_pool3d_indexed(x, window, stride).output;
}

Tensor max_pool2d(const Tensor& x, std::size_t window, std::size_t stride) {
  return max_pool2d_indexed(x, window, stride).output;
}

void max_pool_backward(const std::vector<std::size_t>& argmax, const Tensor& grad_out, Tensor& grad_input) {
  if (argmax.size() != grad_out.size()) {
    throw ShapeError("max_pool_backward: index count mismatch");
  }
  for (std::size_t i = 0; i < argmax.size(); ++i) {
    grad_input[argmax[i]] += grad_out[i];
  }
}

Tensor global_avg_pool(const Tensor& x) {
  if (x.rank() < 2) {
    throw ShapeError("global_avg_pool expects C x ..., got " + shape_to_string(x.shape()));
  }
  const std::size_t C = x.dim(0);
  const std::size_t per = x.size() / C;
  Tensor out({C});
  for (std::size_t c = 0; c < C; ++c) {
    double s = 0.0;
    for (std::size_t i = 0; i < per; ++i) {
      s += x[c * per + i];
    }
    out[c] = s / static_cast<double>(per);
  }
  return out;
}

void global_avg_pool_backward(const Tensor& grad_out, Tensor& grad_input) {
  const std::size_t C = grad_input.dim(0);
  if (grad_out.size() != C) {
    throw ShapeError("global_avg_pool_backward: channel mismatch");
  }
  const std::size_t per = grad_input.size() / C;
  const double inv = 1.0 / static_cast<double>(per);
  for (std::size_t c = 0; c < C; ++c) {
    const double g = grad_out[c] * inv;
    for (std::size_t i = 0; i < per; ++i) {
      grad_input[c * per + i] += g;
    }
  }
}

Tensor affine(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  if (weight.rank() != 2 || weight.dim(1) != x.size()) {
    throw ShapeError("affine: weight " + shape_to_string(weight.shape()) + " incompatible with input of " +
                     std::to_string(x.size()) + " elements");
  }
  if (bias.rank() != 1 || bias.size() != weight.dim(0)) {
    throw ShapeError("affine: bias " + shape_to_string(bias.shape()) + " incompatible with weight");
  }
  const std::size_t C = weight.dim(0);
  const std::size_t D = weight.dim(1);
  const auto& k = simd::kernels();
  Tensor out({C});
  for (std::size_t c = 0; c < C; ++c) {
    out[c] = k.dot(D, weight.ptr() + c * D, x.ptr()) + bias[c];
  }
  return out;
}

void affine_backward(const Tensor& x, const Tensor& weight, const Tensor& grad_out, Tensor* grad_input,
                     Tensor* grad_weight, Tensor* grad_bias) {
  const std::size_t C = weight.dim(0);
  const std::size_t D = weight.dim(1);
  if (grad_out.size() != C || x.size() != D) {
    throw ShapeError("affine_backward: shape mismatch");
  }
  const auto& k = simd::kernels();
  for (std::size_t c = 0; c < C; ++c) {
    const double g = grad_out[c];
    if (grad_weight) {
      k.axpy(D, g, x.ptr(), grad_weight->ptr() + c * D);
    }
    if (grad_input) {
      k.axpy(D, g, weight.ptr() + c * D, grad_input->ptr());
    }
    if (grad_bias) {
      (*grad_bias)[c] += g;
    }
  }
}

double log_sum_exp(std::span<const double> v) {
  if (v.empty()) {
    throw ShapeError("log_sum_exp of empty vector");
  }
  const double m = *std::max_element(v.begin(), v.end());
  double s = 0.0;
  for (const double x : v) {
    s += std::exp(x - m);
  }
  return m + std::log(s);
}

Tensor softmax(const Tensor& scores) {
  if (scores.empty()) {
    throw ShapeError("softmax of empty vector");
  }
  Tensor out(scores.shape());
  const auto v = scores.data();
  const double m = *std::max_element(v.begin(), v.end());
  double s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = std::exp(v[i] - m);
    s += out[i];
  }
  for (double& p : out.data()) {
    p /= s;
  }
  return out;
}

void softmax_backward(const Tensor& probs, const Tensor& grad_out, Tensor& grad_input) {
  if (probs.size() != grad_out.size() || probs.size() != grad_input.size()) {
    throw ShapeError("softmax_backward: shape mismatch");
  }
  const double inner = simd::kernels().dot(probs.size(), probs.ptr(), grad_out.ptr());
  for (std::size_t i = 0; i < probs.size(); ++i) {
    grad_input[i] += probs[i] * (grad_out[i] - inner);
  }
}

}  // namespace edgetsn::ops
