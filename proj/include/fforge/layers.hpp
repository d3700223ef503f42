#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fforge/ops.hpp"
#include "fforge/params.hpp"

namespace fforge {

template <typename Scalar>
struct Conv {
  Tensor<Scalar> weight;
  Tensor<Scalar> bias;  // undefined when the layer has no bias
  Index stride = 1;
  Index padding = 0;
  Index output_padding = 0;
  bool transposed = false;

  Index in_channels() const { return transposed ? weight.shape()[0] : weight.shape()[1]; }
  Index out_channels() const { return transposed ? weight.shape()[1] : weight.shape()[0]; }
};

template <typename Scalar>
struct BatchNorm {
  Tensor<Scalar> gamma, beta, running_mean, running_var;
};

/// Convolution followed by batch normalization. With a 1×1 kernel this is the
/// agant layer used on shortcut and skip paths to match channel widths.
template <typename Scalar>
struct ConvBN {
  Conv<Scalar> conv;
  BatchNorm<Scalar> bn;
};

template <typename Scalar>
struct Linear {
  Tensor<Scalar> weight, bias;
};

template <typename Scalar>
Tensor<Scalar> apply(const Conv<Scalar>& c, const Tensor<Scalar>& x) {
  return c.transposed ? conv_transpose2d(x, c.weight, c.bias, c.stride, c.padding, c.output_padding)
                      : conv2d(x, c.weight, c.bias, c.stride, c.padding);
}

template <typename Scalar>
Tensor<Scalar> apply(const BatchNorm<Scalar>& b, const Tensor<Scalar>& x, Mode mode) {
  return batchnorm2d(x, b.gamma, b.beta, b.running_mean, b.running_var, mode);
}

template <typename Scalar>
Tensor<Scalar> apply(const ConvBN<Scalar>& l, const Tensor<Scalar>& x, Mode mode) {
  return apply(l.bn, apply(l.conv, x), mode);
}

template <typename Scalar>
Tensor<Scalar> apply(const Linear<Scalar>& l, const Tensor<Scalar>& x) {
  return fully_connected(x, l.weight, l.bias);
}

// ---------------------------------------------------------------------------
// Builders. Names are relative to the ParameterSet prefix.
// ---------------------------------------------------------------------------

template <typename Scalar>
Conv<Scalar> make_conv(ParameterSet<Scalar>& set, Initializer<Scalar>& init, const std::string& name,
                       Index in, Index out, Index kernel, Index stride, Index padding,
                       bool with_bias = false) {
  Conv<Scalar> c;
  c.weight = set.add(name + ".weight", {out, in, kernel, kernel},
                     init.kaiming(out * in * kernel * kernel, in * kernel * kernel));
  if (with_bias) c.bias = set.add(name + ".bias", {out}, Initializer<Scalar>::zeros(out));
  c.stride = stride;
  c.padding = padding;
  return c;
}

template <typename Scalar>
Conv<Scalar> make_conv_transpose(ParameterSet<Scalar>& set, Initializer<Scalar>& init,
                                 const std::string& name, Index in, Index out, Index kernel,
                                 Index stride, Index padding, Index output_padding,
                                 bool with_bias = false) {
  Conv<Scalar> c;
  // Each output pixel receives about in·k²/s² contributions.
  const Index fan_in = std::max<Index>(1, in * kernel * kernel / (stride * stride));
  c.weight = set.add(name + ".weight", {in, out, kernel, kernel},
                     init.kaiming(in * out * kernel * kernel, fan_in));
  if (with_bias) c.bias = set.add(name + ".bias", {out}, Initializer<Scalar>::zeros(out));
  c.stride = stride;
  c.padding = padding;
  c.output_padding = output_padding;
  c.transposed = true;
  return c;
}

template <typename Scalar>
BatchNorm<Scalar> make_batchnorm(ParameterSet<Scalar>& set, const std::string& name, Index channels) {
  BatchNorm<Scalar> b;
  b.gamma = set.add(name + ".gamma", {channels}, Initializer<Scalar>::ones(channels));
  b.beta = set.add(name + ".beta", {channels}, Initializer<Scalar>::zeros(channels));
  b.running_mean =
      set.add(name + ".running_mean", {channels}, Initializer<Scalar>::zeros(channels), false);
  b.running_var =
      set.add(name + ".running_var", {channels}, Initializer<Scalar>::ones(channels), false);
  return b;
}

template <typename Scalar>
ConvBN<Scalar> make_conv_bn(ParameterSet<Scalar>& set, Initializer<Scalar>& init,
                            const std::string& name, Index in, Index out, Index kernel, Index stride,
                            Index padding) {
  return {make_conv(set, init, name + ".conv", in, out, kernel, stride, padding),
          make_batchnorm(set, name + ".bn", out)};
}

template <typename Scalar>
ConvBN<Scalar> make_agant(ParameterSet<Scalar>& set, Initializer<Scalar>& init,
                          const std::string& name, Index in, Index out, Index stride = 1) {
  return make_conv_bn(set, init, name, in, out, 1, stride, 0);
}

template <typename Scalar>
Linear<Scalar> make_linear(ParameterSet<Scalar>& set, Initializer<Scalar>& init,
                           const std::string& name, Index in, Index out) {
  return {set.add(name + ".weight", {in, out}, init.kaiming(in * out, in)),
          set.add(name + ".bias", {out}, Initializer<Scalar>::zeros(out))};
}

// ---------------------------------------------------------------------------
// Residual units
// ---------------------------------------------------------------------------

/// Encoder residual unit: 1×1 reduce, 3×3 (stride 2 when downsampling),
/// 1×1 expand. The shortcut is identity when shapes match, otherwise an agant
/// layer carrying the same stride.
template <typename Scalar>
struct BottleneckBlock {
  ConvBN<Scalar> reduce, spatial, expand;
  std::optional<ConvBN<Scalar>> shortcut;
  bool downsample = false;

  Index in_channels() const { return reduce.conv.in_channels(); }
  Index out_channels() const { return expand.conv.out_channels(); }
};

template <typename Scalar>
BottleneckBlock<Scalar> make_bottleneck(ParameterSet<Scalar>& set, Initializer<Scalar>& init,
                                        const std::string& name, Index in, Index out,
                                        bool downsample, Index expansion = 4) {
  const Index mid = std::max<Index>(1, out / expansion);
  const Index stride = downsample ? 2 : 1;
  BottleneckBlock<Scalar> b;
  b.reduce = make_conv_bn(set, init, name + ".reduce", in, mid, 1, 1, 0);
  b.spatial = make_conv_bn(set, init, name + ".spatial", mid, mid, 3, stride, 1);
  b.expand = make_conv_bn(set, init, name + ".expand", mid, out, 1, 1, 0);
  if (downsample || in != out) b.shortcut = make_agant(set, init, name + ".shortcut", in, out, stride);
  b.downsample = downsample;
  return b;
}

template <typename Scalar>
Tensor<Scalar> bottleneck_block(const Tensor<Scalar>& x, const BottleneckBlock<Scalar>& b, Mode mode) {
  if (x.channels() != b.in_channels())
    throw DimensionError("bottleneck_block: input has " + std::to_string(x.channels()) +
                         " channels, block expects " + std::to_string(b.in_channels()));
  Tensor<Scalar> r = relu(apply(b.reduce, x, mode));
  r = relu(apply(b.spatial, r, mode));
  r = apply(b.expand, r, mode);
  const Tensor<Scalar> s = b.shortcut ? apply(*b.shortcut, x, mode) : x;
  return relu(r + s);
}

/// Decoder residual unit, the encoder unit in reverse: 3×3 conv, then a 3×3
/// conv or, when upsampling, a stride-2 transposed conv. The upsampling
/// shortcut is a 2×2 stride-2 transposed conv plus batchnorm.
template <typename Scalar>
struct TransBasicBlock {
  ConvBN<Scalar> first, second;
  std::optional<ConvBN<Scalar>> shortcut;
  bool upsample = false;

  Index in_channels() const { return first.conv.in_channels(); }
  Index out_channels() const { return second.conv.out_channels(); }
};

template <typename Scalar>
TransBasicBlock<Scalar> make_transbasic(ParameterSet<Scalar>& set, Initializer<Scalar>& init,
                                        const std::string& name, Index in, Index out, bool upsample) {
  TransBasicBlock<Scalar> b;
  b.first = make_conv_bn(set, init, name + ".first", in, in, 3, 1, 1);
  if (upsample) {
    b.second = {make_conv_transpose(set, init, name + ".second.conv", in, out, 3, 2, 1, 1),
                make_batchnorm(set, name + ".second.bn", out)};
    b.shortcut = ConvBN<Scalar>{make_conv_transpose(set, init, name + ".shortcut.conv", in, out, 2, 2, 0, 0),
                                make_batchnorm(set, name + ".shortcut.bn", out)};
  } else {
    b.second = make_conv_bn(set, init, name + ".second", in, out, 3, 1, 1);
    if (in != out) b.shortcut = make_agant(set, init, name + ".shortcut", in, out);
  }
  b.upsample = upsample;
  return b;
}

template <typename Scalar>
Tensor<Scalar> transbasic_block(const Tensor<Scalar>& x, const TransBasicBlock<Scalar>& b, Mode mode) {
  if (x.channels() != b.in_channels())
    throw DimensionError("transbasic_block: input has " + std::to_string(x.channels()) +
                         " channels, block expects " + std::to_string(b.in_channels()));
  Tensor<Scalar> r = relu(apply(b.first, x, mode));
  r = apply(b.second, r, mode);
  const Tensor<Scalar> s = b.shortcut ? apply(*b.shortcut, x, mode) : x;
  return relu(r + s);
}

}  // namespace fforge
