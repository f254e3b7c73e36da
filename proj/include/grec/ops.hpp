#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "grec/tensor.hpp"

namespace grec {

inline constexpr double kLayerNormEps = 1e-8;

/// Dilated 1D convolution over the time axis of a [B, t, c] tensor.
///
/// Weights are laid out [width, in_channels, out_channels]. A causal kernel
/// left-pads (width-1)*dilation zeros so tap `width-1` lands on the current
/// position; a non-causal kernel (odd width only) pads symmetrically and
/// centres the middle tap on the current position.
template <typename T>
struct ConvKernel {
  Tensor<T> weight;
  Tensor<T> bias;
  int dilation = 1;
  bool causal = true;

  std::size_t width() const { return weight.dim(0); }
  std::size_t in_channels() const { return weight.dim(1); }
  std::size_t out_channels() const { return weight.dim(2); }

  // Signed offset of tap j relative to the output position.
  long tap_offset(std::size_t j) const;
  // Number of extra positions this layer adds to a stack's receptive field.
  std::size_t receptive_growth() const { return (width() - 1) * dilation; }
  void validate() const;
};

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> sum(const Tensor<T>& x);
template <typename T>
Tensor<T> relu(const Tensor<T>& x);

// Row gather from `table` [V, d] for every id; output [rows, cols, d].
template <typename T>
Tensor<T> embedding_lookup(const Tensor<T>& table, const IdMatrix& ids);

template <typename T>
Tensor<T> conv1d(const Tensor<T>& input, const ConvKernel<T>& kernel);

// Normalizes every slice along the last axis.
template <typename T>
Tensor<T> layer_norm(const Tensor<T>& input, const Tensor<T>& gain,
                     const Tensor<T>& shift, double eps = kLayerNormEps);

// Per-position affine map over the last axis: [..., c_in] -> [..., c_out].
// `bias` may be undefined.
template <typename T>
Tensor<T> pointwise(const Tensor<T>& input, const Tensor<T>& weights,
                    const Tensor<T>& bias);

// Selects rows of a [B, t, d] tensor by flat index b*t + pos -> [M, d].
template <typename T>
Tensor<T> gather_positions(const Tensor<T>& input,
                           std::span<const std::size_t> flat_positions);

template <typename T>
Tensor<T> concat_last(const Tensor<T>& a, const Tensor<T>& b);

// Mean over the M prediction sites of -log softmax(logits)[target], with
// logits [M, n] over classes {PAD=0, items 1..n-1}. Targets must be items:
// PAD (0) and anything >= n (which includes MASK) are rejected.
template <typename T>
Tensor<T> masked_softmax_xent(const Tensor<T>& logits,
                              std::span<const int> targets);

// Numerically stable row softmax without graph tracking.
template <typename T>
std::vector<T> softmax_rows(std::span<const T> logits, std::size_t cols);

}  // namespace grec
