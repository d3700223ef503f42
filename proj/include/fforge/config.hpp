#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "fforge/data.hpp"
#include "fforge/discriminator.hpp"
#include "fforge/generator.hpp"
#include "fforge/objectives.hpp"

namespace fforge {

struct TrainConfig {
  std::uint64_t seed = 1;
  long steps = 1000;
  Index batch_size = 4;
  double gen_lr = 1e-4;
  double disc_lr = 1e-4;
  double adam_beta1 = 0.9;  // shared by both optimizers
  double adam_beta2 = 0.999;
  long disc_steps_per_gen_step = 1;
  LossWeights weights;
  AdversarialForm adversarial = AdversarialForm::literal;
  PatchSpec patch;               // patch.seed is derived from seed
  long checkpoint_interval = 500;
  std::string log_path = "train_log.csv";  // relative paths resolve against the output dir
  GeneratorConfig generator;
  DiscriminatorConfig discriminator;  // input_extent always equals patch.size

  void validate() const;
};

/// Alpha/beta candidates for the grid search. Every cell is scored by its
/// held-out content loss under the fixed reference weights so cells compare
/// on one scale.
struct GridSpec {
  std::vector<double> alphas{0.1, 1.0, 10.0};
  std::vector<double> betas{0.3, 0.5, 0.7};
  long steps_per_cell = 200;
  LossWeights reference;
  double holdout_fraction = 0.2;  // used only when the manifest has no "eval" entries

  void validate() const;
};

/// Parses `key = value` lines. '#' starts a comment; blank lines are ignored.
/// Malformed lines and repeated keys raise InputError.
std::map<std::string, std::string> parse_key_values(const std::string& text);

/// Applies recognised keys on top of the defaults; unknown keys raise InputError.
TrainConfig parse_train_config(const std::string& text);
TrainConfig parse_train_config(const std::map<std::string, std::string>& kv);
GridSpec parse_grid_spec(const std::map<std::string, std::string>& kv, const TrainConfig& base);

/// Complete `key = value` echo; parse_train_config(config_text(c)) == c.
std::string config_text(const TrainConfig& config);

std::string read_text_file(const std::filesystem::path& path);

std::vector<double> parse_real_list(const std::string& text);

}  // namespace fforge
