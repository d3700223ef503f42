#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "fforge/layers.hpp"

namespace fforge {

enum class LatentFusion { sum, average };

/// Which features the visible branch carries into its next stage.
/// branch_private: each branch runs on its own features and the fused
/// features only feed the skip connections. fused: the visible branch
/// continues from the fused features while the infrared branch stays private.
enum class EncoderFeed { branch_private, fused };

struct GeneratorConfig {
  Index stem_channels = 16;
  std::array<Index, 4> stage_widths{16, 32, 64, 128};
  std::array<Index, 4> blocks_per_stage{2, 2, 2, 2};
  std::array<Index, 4> decoder_widths{128, 64, 32, 16};
  Index bottleneck_expansion = 4;
  LatentFusion fusion = LatentFusion::sum;
  EncoderFeed encoder_feed = EncoderFeed::branch_private;

  /// Stem plus four encoder stages, each halving H and W.
  static constexpr int downsampling_stages = 5;
  static constexpr Index input_multiple = Index(1) << downsampling_stages;

  void validate() const {
    if (stem_channels < 1) throw ConfigError("generator: stem_channels must be positive");
    for (int k = 0; k < 4; ++k) {
      if (stage_widths[k] < 1) throw ConfigError("generator: stage widths must be positive");
      if (blocks_per_stage[k] < 1) throw ConfigError("generator: blocks_per_stage entries must be >= 1");
      if (decoder_widths[k] != stage_widths[3 - k])
        throw ConfigError("generator: decoder_widths must equal stage_widths reversed");
    }
    if (bottleneck_expansion < 1) throw ConfigError("generator: bottleneck_expansion must be >= 1");
  }
};

/// Per-branch encoder: stem conv then four bottleneck stages.
template <typename Scalar>
struct EncoderBranch {
  ConvBN<Scalar> stem;
  std::array<std::vector<BottleneckBlock<Scalar>>, 4> stages;
};

/// Feature maps of one branch: index 0 is the stem output, 1..4 the outputs
/// of encoder layers 1..4. Each entry has half the extent of the previous.
template <typename Scalar>
using StageFeatures = std::array<Tensor<Scalar>, 5>;

template <typename Scalar>
struct GeneratorParams {
  GeneratorConfig config;
  ParameterSet<Scalar> set{"gen."};
  EncoderBranch<Scalar> visible, infrared;
  std::array<ConvBN<Scalar>, 5> agant;  // agant[k] projects fused feature k
  std::array<std::vector<TransBasicBlock<Scalar>>, 4> decoder;
  TransBasicBlock<Scalar> final_block;
  Conv<Scalar> final_deconv;
};

namespace detail {

template <typename Scalar>
EncoderBranch<Scalar> make_encoder(ParameterSet<Scalar>& set, Initializer<Scalar>& init,
                                   const std::string& name, const GeneratorConfig& cfg) {
  EncoderBranch<Scalar> e;
  e.stem = make_conv_bn(set, init, name + ".stem", 1, cfg.stem_channels, 3, 2, 1);
  Index in = cfg.stem_channels;
  for (int s = 0; s < 4; ++s) {
    const Index out = cfg.stage_widths[s];
    for (Index b = 0; b < cfg.blocks_per_stage[s]; ++b) {
      const std::string block = name + ".layer" + std::to_string(s + 1) + "." + std::to_string(b);
      e.stages[s].push_back(make_bottleneck(set, init, block, b == 0 ? in : out, out, b == 0,
                                            cfg.bottleneck_expansion));
    }
    in = out;
  }
  return e;
}

template <typename Scalar>
Tensor<Scalar> run_stage(const std::vector<BottleneckBlock<Scalar>>& blocks, Tensor<Scalar> x,
                         Mode mode) {
  for (const auto& b : blocks) x = bottleneck_block(x, b, mode);
  return x;
}

}  // namespace detail

/// Builds the two-branch residual autoencoder. The same seed always yields
/// bit-identical parameters.
template <typename Scalar>
GeneratorParams<Scalar> build_generator(const GeneratorConfig& config, std::uint64_t seed) {
  config.validate();
  GeneratorParams<Scalar> g;
  g.config = config;
  Initializer<Scalar> init(seed);
  auto& set = g.set;

  g.visible = detail::make_encoder(set, init, "enc_vis", config);
  g.infrared = detail::make_encoder(set, init, "enc_ir", config);

  // Skip widths: stem, then layers 1..4.
  const std::array<Index, 5> skip{config.stem_channels, config.stage_widths[0], config.stage_widths[1],
                                  config.stage_widths[2], config.stage_widths[3]};
  for (int k = 0; k < 5; ++k)
    g.agant[k] = make_agant(set, init, "agant" + std::to_string(k), skip[k], skip[k]);

  // Decoder layer d upsamples from skip[4 - d] to skip[3 - d].
  for (int d = 0; d < 4; ++d) {
    const Index in = config.decoder_widths[d];
    const Index out = skip[3 - d];
    const Index blocks = config.blocks_per_stage[3 - d];
    for (Index b = 0; b < blocks; ++b) {
      const bool last = b + 1 == blocks;
      g.decoder[d].push_back(make_transbasic(set, init,
                                             "dec" + std::to_string(d + 1) + "." + std::to_string(b),
                                             in, last ? out : in, last));
    }
  }
  g.final_block = make_transbasic(set, init, "final_block", config.stem_channels,
                                  config.stem_channels, false);
  g.final_deconv = make_conv_transpose(set, init, "final_deconv", config.stem_channels, 1, 2, 2, 0, 0, true);
  return g;
}

/// Latent adder: elementwise sum (or mean, when configured) of two
/// same-shaped feature maps.
template <typename Scalar>
Tensor<Scalar> fuse_latents(const Tensor<Scalar>& feat_v, const Tensor<Scalar>& feat_i,
                            LatentFusion how = LatentFusion::sum) {
  if (feat_v.shape() != feat_i.shape())
    throw DimensionError("fuse_latents: shape mismatch " + to_string(feat_v.shape()) + " vs " +
                         to_string(feat_i.shape()));
  Tensor<Scalar> s = add(feat_v, feat_i);
  return how == LatentFusion::sum ? s : scale(s, Scalar(0.5));
}

/// Runs one branch on its own input with no cross-branch mixing.
template <typename Scalar>
StageFeatures<Scalar> encode_branch(const EncoderBranch<Scalar>& branch, const Tensor<Scalar>& x,
                                    Mode mode) {
  StageFeatures<Scalar> f;
  f[0] = relu(apply(branch.stem, x, mode));
  for (int s = 0; s < 4; ++s) f[s + 1] = detail::run_stage(branch.stages[s], f[s], mode);
  return f;
}

template <typename Scalar>
struct EncodedPair {
  StageFeatures<Scalar> visible, infrared, fused;
};

template <typename Scalar>
EncodedPair<Scalar> encode_pair(const GeneratorParams<Scalar>& g, const Tensor<Scalar>& v,
                                const Tensor<Scalar>& i, Mode mode) {
  EncodedPair<Scalar> e;
  const auto how = g.config.fusion;
  if (g.config.encoder_feed == EncoderFeed::branch_private) {
    e.visible = encode_branch(g.visible, v, mode);
    e.infrared = encode_branch(g.infrared, i, mode);
    for (int k = 0; k < 5; ++k) e.fused[k] = fuse_latents(e.visible[k], e.infrared[k], how);
    return e;
  }
  e.visible[0] = relu(apply(g.visible.stem, v, mode));
  e.infrared[0] = relu(apply(g.infrared.stem, i, mode));
  e.fused[0] = fuse_latents(e.visible[0], e.infrared[0], how);
  for (int s = 0; s < 4; ++s) {
    e.visible[s + 1] = detail::run_stage(g.visible.stages[s], e.fused[s], mode);
    e.infrared[s + 1] = detail::run_stage(g.infrared.stages[s], e.infrared[s], mode);
    e.fused[s + 1] = fuse_latents(e.visible[s + 1], e.infrared[s + 1], how);
  }
  return e;
}

template <typename Scalar>
void check_generator_inputs(const GeneratorConfig& cfg, const Tensor<Scalar>& v,
                            const Tensor<Scalar>& i) {
  if (v.shape() != i.shape())
    throw InputError("generator: visible " + to_string(v.shape()) + " and infrared " +
                     to_string(i.shape()) + " inputs differ in shape");
  if (v.channels() != 1) throw InputError("generator: inputs must be single-channel");
  const Index m = cfg.input_multiple;
  if (v.height() % m != 0 || v.width() % m != 0)
    throw InputError("generator: spatial extents " + std::to_string(v.height()) + "x" +
                     std::to_string(v.width()) + " must be divisible by " + std::to_string(m));
  for (const auto* t : {&v, &i})
    if (!((t->value() >= Scalar(0)) && (t->value() <= Scalar(1))).all())
      throw InputError("generator: input values must lie in [0, 1]");
}

/// F = RAE(V, I): encode both modalities, fuse per stage, decode through the
/// upsampling residual layers with agant-projected skips, and map to (0, 1).
template <typename Scalar>
Tensor<Scalar> forward(const GeneratorParams<Scalar>& g, const Tensor<Scalar>& v,
                       const Tensor<Scalar>& i, Mode mode) {
  check_generator_inputs(g.config, v, i);
  const EncodedPair<Scalar> e = encode_pair(g, v, i, mode);
  Tensor<Scalar> x = apply(g.agant[4], e.fused[4], mode);
  for (int d = 0; d < 4; ++d) {
    for (const auto& b : g.decoder[d]) x = transbasic_block(x, b, mode);
    x = x + apply(g.agant[3 - d], e.fused[3 - d], mode);
  }
  x = transbasic_block(x, g.final_block, mode);
  return sigmoid(apply(g.final_deconv, x));
}

}  // namespace fforge
