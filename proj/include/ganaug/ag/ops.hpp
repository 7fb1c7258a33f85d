#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ganaug/ag/tensor.hpp"

namespace ganaug::ag {

// Elementwise; operands must have identical shapes.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, float s);
Tensor add_scalar(const Tensor& a, float s);
Tensor neg(const Tensor& a);
/// a + t * (b - a)
Tensor lerp(const Tensor& a, const Tensor& b, float t);

Tensor leaky_relu(const Tensor& a, float slope);
Tensor relu(const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor pow_scalar(const Tensor& a, float p);

/// Repeats size-1 dimensions of `a` up to `shape`.
Tensor broadcast_to(const Tensor& a, Shape shape);
/// Sums over the dimensions where `shape` has size 1 (adjoint of broadcast_to).
Tensor sum_to(const Tensor& a, Shape shape);
Tensor sum_all(const Tensor& a);
Tensor mean_all(const Tensor& a);
Tensor reshape(const Tensor& a, Shape shape);

/// Stride-1 cross-correlation. x: [N,Ci,H,W], w: [Co,Ci,k,k]; output spatial
/// size is H + 2*pad - k + 1.
Tensor conv2d(const Tensor& x, const Tensor& w, int pad);
/// Gradient of conv2d with respect to its input, as an op of (g, w).
Tensor conv2d_input_grad(const Tensor& g, const Tensor& w, Shape x_shape, int pad);
/// Gradient of conv2d with respect to its weights, as an op of (x, g).
Tensor conv2d_weight_grad(const Tensor& x, const Tensor& g, Shape w_shape, int pad);

/// Mean over non-overlapping k x k windows.
Tensor avg_pool(const Tensor& x, int k);
/// Nearest-neighbour upsampling by an integer factor.
Tensor upsample(const Tensor& x, int k);
/// 2x2 max pooling; the first maximum in scan order wins ties.
Tensor max_pool2(const Tensor& x);

Tensor concat_channels(const Tensor& a, const Tensor& b);
Tensor slice_channels(const Tensor& a, int start, int count);
/// Places `a` at channel offset `start` inside a zero tensor with `total` channels.
Tensor pad_channels(const Tensor& a, int start, int total);

/// Softmax across channels at every pixel.
Tensor softmax_channels(const Tensor& logits);

/// Mean per-pixel cross-entropy of channel-softmax(logits) against integer
/// class targets (one per pixel, N*H*W entries). First-order only.
Tensor softmax_cross_entropy(const Tensor& logits, std::span<const std::uint8_t> targets);

}  // namespace ganaug::ag
