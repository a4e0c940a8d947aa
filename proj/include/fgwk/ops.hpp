#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "fgwk/tensor.hpp"

// Differentiable tensor operations. Every op checks its shapes and throws
// DimensionError naming the offending shapes; index arguments are checked
// and throw IndexError.
namespace fgwk::ops {

// [M x K] x [K x N] -> [M x N]
Tensor matmul(const Tensor& a, const Tensor& b);

Tensor add(const Tensor& a, const Tensor& b);
// a: [M x N], bias: [N], added to every row.
Tensor add_row_bias(const Tensor& a, const Tensor& bias);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, Real factor);
Tensor relu(const Tensor& a);

// Scalar results have shape [1].
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
// [N x D] -> [D], column-wise mean over rows.
Tensor mean_rows(const Tensor& a);
// Global average pool, [C x H x W] -> [C].
Tensor spatial_mean(const Tensor& x);

Tensor reshape(const Tensor& a, Shape shape);
// [M x N] -> [N x M]
Tensor transpose(const Tensor& a);
Tensor concat(const std::vector<Tensor>& parts, std::size_t axis);
// Rows of a [N x D] matrix at `rows`, -> [k x D].
Tensor gather_rows(const Tensor& a, std::span<const std::size_t> rows);
// Single element at a flat index, -> [1].
Tensor pick(const Tensor& a, std::size_t flat_index);

// Numerically stable (max-subtracted) softmax along `axis`.
Tensor softmax(const Tensor& x, std::size_t axis);
Tensor log_softmax(const Tensor& x, std::size_t axis);
// Mean over the batch of -log softmax(logits)[label]; logits [B x C].
Tensor cross_entropy(const Tensor& logits, std::span<const int> labels);

// Cross-correlation. x: [C x H x W], weight: [C' x C x k x k], optional
// bias: [C'] (pass an undefined Tensor to skip). Output [C' x H' x W'] with
// H' = (H + 2 pad - k) / stride + 1.
Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias, std::size_t stride,
              std::size_t pad);
Tensor conv2d(const Tensor& x, const Tensor& weight, std::size_t stride, std::size_t pad);

// x: [N x Din], weight: [Din x Dout], bias: [Dout].
Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias);

} // namespace fgwk::ops
