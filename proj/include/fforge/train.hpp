#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "fforge/checkpoint.hpp"
#include "fforge/config.hpp"
#include "fforge/metrics.hpp"

namespace fforge {

struct LogRow {
  long step = 0;
  LossReport loss;
};

struct RunLog {
  std::string config_echo;
  std::vector<LogRow> rows;  // steps strictly increasing from 1
  std::chrono::system_clock::time_point started, finished;
};

/// Header step,disc,content,mse_ir,mse_vis,tv,gen_adv,generator_total and one
/// row per step at full precision.
std::string log_csv(const RunLog& log);

enum class Phase { discriminator, generator };

/// Owns the two networks, their optimizers and the patch stream.
///
/// One step() runs disc_steps_per_gen_step discriminator updates, each on a
/// fresh batch, then one generator update on the fused batch of the last
/// discriminator update. Discriminator updates run in train mode on the
/// joint batch [detached F; V]. The generator update scores F in eval mode,
/// so no discriminator tensor changes during it.
class Trainer {
 public:
  /// Called at the start and end of each phase; `before` tells which.
  using Observer = std::function<void(Phase phase, bool before, const Trainer& trainer)>;

  Trainer(const TrainConfig& config, std::vector<PatchPair> patches);

  LossReport step();

  long steps_done() const { return steps_done_; }
  const TrainConfig& config() const { return config_; }
  const GeneratorParams<float>& generator() const { return gen_; }
  const DiscriminatorParams<float>& discriminator() const { return disc_; }

  void set_observer(Observer observer) { observer_ = std::move(observer); }

  /// gen.*, disc.* and the meta.config echo.
  std::vector<CheckpointRecord> checkpoint_records() const;

 private:
  struct Batch {
    Tensor<float> visible, infrared;
  };
  Batch next_batch();
  void notify(Phase phase, bool before) const;

  TrainConfig config_;
  std::vector<PatchPair> patches_;
  GeneratorParams<float> gen_;
  DiscriminatorParams<float> disc_;
  AdamState<float> gen_opt_, disc_opt_;
  std::mt19937_64 batch_rng_;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
  long steps_done_ = 0;
  Observer observer_;
};

/// Patches of the given entries, in entry order; each entry gets its own shuffle seed.
std::vector<PatchPair> collect_patches(const DatasetManifest& manifest, const std::vector<ManifestEntry>& entries,
                                       const PatchSpec& spec);

struct TrainResult {
  GeneratorParams<float> generator;
  DiscriminatorParams<float> discriminator;
  RunLog log;
  std::filesystem::path final_checkpoint;  // empty when out_dir is empty
};

/// Trains on the manifest's "train" entries. When out_dir is non-empty it
/// receives the CSV log, checkpoint_<step>.ffc every checkpoint_interval
/// steps, checkpoint_final.ffc and run_info.txt. A non-finite loss raises
/// NumericError naming the step and every term before anything is saved.
TrainResult train(const TrainConfig& config, const DatasetManifest& manifest,
                  const std::filesystem::path& out_dir = {}, Trainer::Observer observer = {});

TrainResult train_on_patches(const TrainConfig& config, std::vector<PatchPair> patches,
                             const std::filesystem::path& out_dir = {}, Trainer::Observer observer = {});

/// Mean content loss of the generator (eval mode) over the patches.
double heldout_content(const GeneratorParams<float>& generator, const std::vector<PatchPair>& patches,
                       const LossWeights& weights, Index batch_size);

struct GridCell {
  double alpha = 0, beta = 0;
  std::uint64_t seed = 0;
  double heldout_content = 0;
  double final_train_content = 0;
};

struct GridResult {
  LossWeights best;
  std::vector<GridCell> table;  // alpha-major, |alphas|·|betas| rows
};

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

std::string grid_csv(const GridResult& result);

/// One run of grid.steps_per_cell steps per (alpha, beta) cell; the best cell
/// minimizes held-out content loss under grid.reference. Held-out pairs are
/// the "eval" entries, or the trailing holdout_fraction of the train entries
/// when none are tagged. Writes grid.csv into out_dir when it is non-empty.
GridResult grid_search(const GridSpec& grid, const TrainConfig& base, const DatasetManifest& manifest,
                       const std::filesystem::path& out_dir = {});

/// Generator restored from a checkpoint for inference.
struct FusionModel {
  TrainConfig config;
  GeneratorParams<float> generator;
};

FusionModel load_fusion_model(const std::filesystem::path& checkpoint);
FusionModel load_fusion_model(const std::vector<CheckpointRecord>& records);

/// Full-image eval-mode forward pass. Extents that are not multiples of the
/// generator's input multiple are reflect-padded and the output cropped back.
GrayImage fuse(const FusionModel& model, const ImagePair& pair);
GrayImage fuse(const GeneratorParams<float>& generator, const ImagePair& pair);

struct EvalOutcome {
  MetricReport report;
  std::vector<std::string> missing;  // manifest ids without a fused image
};

/// Scores <fused_dir>/<id>.png (or .pgm) for every manifest entry.
EvalOutcome evaluate_fused(const std::filesystem::path& fused_dir, const DatasetManifest& manifest);

}  // namespace fforge
