#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "edgetsn/tensor.hpp"

// Closed set of differentiable primitives. Every forward is a pure function
// of its arguments; backward helpers accumulate into caller-owned tensors.
// Convolutions are cross-correlations with zero padding.

namespace edgetsn::ops {

// Per-axis extents in (time, height, width) order.
using Dims3 = std::array<std::size_t, 3>;

std::size_t conv_out_dim(std::size_t in, std::size_t kernel, std::size_t stride, std::size_t padding);

// input C x H x W, kernels O x C x N x N  ->  O x H' x W'
Tensor conv2d(const Tensor& input, const Tensor& kernels, std::size_t stride = 1, std::size_t padding = 0);
// input C x T x H x W, kernels O x C x Nt x Nh x Nw  ->  O x T' x H' x W'
Tensor conv3d(const Tensor& input, const Tensor& kernels, Dims3 stride = {1, 1, 1}, Dims3 padding = {0, 0, 0});

// Accumulates dL/dinput and dL/dkernels; either target may be null.
void conv2d_backward(const Tensor& input, const Tensor& kernels, const Tensor& grad_out, std::size_t stride,
                     std::size_t padding, Tensor* grad_input, Tensor* grad_kernels);
void conv3d_backward(const Tensor& input, const Tensor& kernels, const Tensor& grad_out, Dims3 stride,
                     Dims3 padding, Tensor* grad_input, Tensor* grad_kernels);

// Adds bias[c] to every element of channel c (leading axis), in place.
void bias_add_inplace(Tensor& x, const Tensor& bias);
void bias_add_backward(const Tensor& grad_out, Tensor& grad_bias);

Tensor relu(const Tensor& x);
void relu_backward(const Tensor& x, const Tensor& grad_out, Tensor& grad_input);

struct PoolResult {
  Tensor output;
  // Flat input offset of the selected element for every output element.
  std::vector<std::size_t> argmax;
};

// No padding; floor output size. Ties resolve to the first element in
// row-major window order.
Tensor max_pool2d(const Tensor& x, std::size_t window, std::size_t stride);
Tensor max_pool3d(const Tensor& x, Dims3 window, Dims3 stride);
PoolResult max_pool3d_indexed(const Tensor& x, Dims3 window, Dims3 stride);
PoolResult max_pool2d_indexed(const Tensor& x, std::size_t window, std::size_t stride);
void max_pool_backward(const std::vector<std::size_t>& argmax, const Tensor& grad_out, Tensor& grad_input);

// C x ...  ->  C, the mean over all trailing axes.
Tensor global_avg_pool(const Tensor& x);
void global_avg_pool_backward(const Tensor& grad_out, Tensor& grad_input);

// weight C x D, bias C; x is flattened to length D.
Tensor affine(const Tensor& x, const Tensor& weight, const Tensor& bias);
void affine_backward(const Tensor& x, const Tensor& weight, const Tensor& grad_out, Tensor* grad_input,
                     Tensor* grad_weight, Tensor* grad_bias);

double log_sum_exp(std::span<const double> v);
Tensor softmax(const Tensor& scores);
// Given s = softmax(x) and dL/ds, accumulates dL/dx.
void softmax_backward(const Tensor& probs, const Tensor& grad_out, Tensor& grad_input);

}  // namespace edgetsn::ops
