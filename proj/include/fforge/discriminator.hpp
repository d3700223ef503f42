#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fforge/layers.hpp"

namespace fforge {

/// Encoder-style trunk (stem + bottleneck stages) followed by a hidden fully
/// connected layer and a one-unit sigmoid head.
struct DiscriminatorConfig {
  Index stem_channels = 16;
  std::vector<Index> stage_widths{16, 32};
  std::vector<Index> blocks_per_stage{2, 2};
  Index hidden = 128;
  Index input_extent = 64;
  Index bottleneck_expansion = 4;

  void validate() const {
    if (stem_channels < 1 || hidden < 1 || bottleneck_expansion < 1)
      throw ConfigError("discriminator: widths must be positive");
    if (stage_widths.size() != blocks_per_stage.size())
      throw ConfigError("discriminator: stage_widths and blocks_per_stage lengths differ");
    for (std::size_t s = 0; s < stage_widths.size(); ++s)
      if (stage_widths[s] < 1 || blocks_per_stage[s] < 1)
        throw ConfigError("discriminator: stage widths and block counts must be positive");
    if (input_extent < 1) throw ConfigError("discriminator: input_extent must be positive");
  }

  /// Extent after the stem and every stage, each a stride-2 3×3 conv with padding 1.
  Index final_extent() const {
    Index e = input_extent;
    for (std::size_t s = 0; s <= stage_widths.size(); ++s) e = (e - 1) / 2 + 1;
    return e;
  }

  Index final_width() const { return stage_widths.empty() ? stem_channels : stage_widths.back(); }

  Index fc_input_size() const { return final_width() * final_extent() * final_extent(); }
};

template <typename Scalar>
struct DiscriminatorParams {
  DiscriminatorConfig config;
  ParameterSet<Scalar> set{"disc."};
  ConvBN<Scalar> stem;
  std::vector<std::vector<BottleneckBlock<Scalar>>> stages;
  Linear<Scalar> hidden, head;
};

template <typename Scalar>
DiscriminatorParams<Scalar> build_discriminator(const DiscriminatorConfig& config, std::uint64_t seed) {
  config.validate();
  DiscriminatorParams<Scalar> d;
  d.config = config;
  Initializer<Scalar> init(seed);
  auto& set = d.set;
  d.stem = make_conv_bn(set, init, "stem", 1, config.stem_channels, 3, 2, 1);
  Index in = config.stem_channels;
  d.stages.resize(config.stage_widths.size());
  for (std::size_t s = 0; s < config.stage_widths.size(); ++s) {
    const Index out = config.stage_widths[s];
    for (Index b = 0; b < config.blocks_per_stage[s]; ++b)
      d.stages[s].push_back(make_bottleneck(set, init,
                                            "layer" + std::to_string(s + 1) + "." + std::to_string(b),
                                            b == 0 ? in : out, out, b == 0, config.bottleneck_expansion));
    in = out;
  }
  d.hidden = make_linear(set, init, "fc_hidden", config.fc_input_size(), config.hidden);
  d.head = make_linear(set, init, "fc_head", config.hidden, 1);
  return d;
}

/// Probability that each batch item is a real visible image; shape (N, 1, 1, 1).
template <typename Scalar>
Tensor<Scalar> forward(const DiscriminatorParams<Scalar>& d, const Tensor<Scalar>& image, Mode mode) {
  const Index e = d.config.input_extent;
  if (image.channels() != 1 || image.height() != e || image.width() != e)
    throw InputError("discriminator: expected (N, 1, " + std::to_string(e) + ", " + std::to_string(e) +
                     ") input, got " + to_string(image.shape()));
  Tensor<Scalar> x = relu(apply(d.stem, image, mode));
  for (const auto& stage : d.stages)
    for (const auto& b : stage) x = bottleneck_block(x, b, mode);
  x = relu(apply(d.hidden, x));
  return sigmoid(apply(d.head, x));
}

}  // namespace fforge
