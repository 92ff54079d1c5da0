#pragma once

#include "slotseed/numcore/tensor.hpp"

#include <cstddef>
#include <span>
#include <vector>

// Differentiable tensor operations. Each records itself on the active tape when any
// input requires a gradient; otherwise it only computes values.
//
// Binary elementwise operations broadcast by trailing-axes alignment: the shorter
// operand's dims must equal the trailing dims of the longer one.
namespace slotseed::num {

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
Tensor add_scalar(const Tensor& a, double offset);

Tensor relu(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
Tensor square(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor tanh(const Tensor& a);

/// Max-subtracted softmax along one axis.
Tensor softmax(const Tensor& a, std::size_t axis);
/// Divides by the sum along an axis (plus epsilon), so each slice sums to ~1.
Tensor normalize_sum(const Tensor& a, std::size_t axis, double epsilon = 1e-8);

Tensor sum(const Tensor& a, std::size_t axis);
Tensor mean(const Tensor& a, std::size_t axis);
Tensor sum_all(const Tensor& a);
Tensor mean_all(const Tensor& a);

Tensor reshape(const Tensor& a, Shape dims);
/// Inserts a new axis of extent `count` at position `axis`, repeating the input.
Tensor expand(const Tensor& a, std::size_t axis, std::size_t count);
/// Concatenates along the last axis; leading dims must agree.
Tensor concat_last(const Tensor& a, const Tensor& b);
/// Channels [begin, end) of the last axis.
Tensor slice_last(const Tensor& a, std::size_t begin, std::size_t end);
Tensor gather_rows(const Tensor& a, std::span<const std::size_t> rows);
/// Row-wise mean per segment: out[s] = mean of rows i with segments[i] == s.
/// Segments without members produce zero rows.
Tensor segment_mean(const Tensor& a, std::span<const std::size_t> segments, std::size_t count);

/// Zero-padded 3x3 convolution, stride 1. input H x W x Cin, kernels 3 x 3 x Cin x Cout,
/// bias Cout; output H x W x Cout.
Tensor conv2d_same(const Tensor& input, const Tensor& kernels, const Tensor& bias);

/// Layer normalization over the last axis without affine parameters.
Tensor layer_norm(const Tensor& a, double epsilon = 1e-5);

} // namespace slotseed::num
