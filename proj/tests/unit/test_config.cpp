#include <gtest/gtest.h>

#include "fforge/config.hpp"

using namespace fforge;

TEST(Config, KeyValueSyntax) {
  const auto kv = parse_key_values("# comment\n a = 1 \n\nb=x y # trailing\n");
  EXPECT_EQ(kv.at("a"), "1");
  EXPECT_EQ(kv.at("b"), "x y");
  EXPECT_THROW(parse_key_values("a = 1\na = 2\n"), InputError);
  EXPECT_THROW(parse_key_values("no equals sign\n"), InputError);
}

TEST(Config, AppliesKeysOverDefaults) {
  const TrainConfig c = parse_train_config(
      "seed = 7\nsteps = 20\ngen_lr = 0.002\nalpha = 2\nbeta = 0.25\nadversarial = non_saturating\n"
      "patch_size = 32\npatch_stride = 16\ngen.blocks_per_stage = 1,1,1,1\ndisc.stage_widths = 8,8,8\n"
      "disc.blocks_per_stage = 1,1,1\n");
  EXPECT_EQ(c.seed, 7u);
  EXPECT_EQ(c.steps, 20);
  EXPECT_EQ(c.gen_lr, 0.002);
  EXPECT_EQ(c.weights.alpha, 2);
  EXPECT_EQ(c.weights.beta, 0.25);
  EXPECT_EQ(c.adversarial, AdversarialForm::non_saturating);
  EXPECT_EQ(c.patch.size, 32);
  EXPECT_EQ(c.discriminator.input_extent, 32);
  EXPECT_EQ(c.generator.blocks_per_stage[2], 1);
  EXPECT_EQ(c.discriminator.stage_widths.size(), 3u);
  EXPECT_EQ(c.disc_lr, TrainConfig{}.disc_lr);
}

TEST(Config, EchoRoundTrips) {
  const TrainConfig c = parse_train_config("seed = 11\ndisc_steps_per_gen_step = 3\ngen.latent_fusion = average\n");
  EXPECT_EQ(config_text(parse_train_config(config_text(c))), config_text(c));
  EXPECT_EQ(config_text(parse_train_config(config_text(TrainConfig{}))), config_text(TrainConfig{}));
}

TEST(Config, RejectsUnknownAndInvalid) {
  EXPECT_THROW(parse_train_config("bogus = 1\n"), InputError);
  EXPECT_THROW(parse_train_config("steps = ten\n"), InputError);
  EXPECT_THROW(parse_train_config("beta = 1.5\n"), ConfigError);
  EXPECT_THROW(parse_train_config("patch_size = 48\n"), ConfigError);
  EXPECT_THROW(parse_train_config("adversarial = maybe\n"), InputError);
}

TEST(Config, GridSpec) {
  const auto kv = parse_key_values("grid.alphas = 0.5, 2\ngrid.betas = 0.4\ngrid.steps_per_cell = 3\n");
  const GridSpec g = parse_grid_spec(kv, TrainConfig{});
  EXPECT_EQ(g.alphas, (std::vector<double>{0.5, 2}));
  EXPECT_EQ(g.betas, (std::vector<double>{0.4}));
  EXPECT_EQ(g.steps_per_cell, 3);
  EXPECT_THROW(parse_grid_spec(parse_key_values("grid.alphas = \n"), TrainConfig{}), InputError);
  EXPECT_EQ(parse_real_list("1, 2.5,3"), (std::vector<double>{1, 2.5, 3}));
}
