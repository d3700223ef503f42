#include "fforge/train.hpp"

#include <algorithm>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

namespace fforge {
namespace fs = std::filesystem;

namespace {

std::string full(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

std::string timestamp(std::chrono::system_clock::time_point t) {
  const std::time_t tt = std::chrono::system_clock::to_time_t(t);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  out << text;
}

bool all_finite(const LossReport& r) {
  for (double v : {r.content, r.mse_ir, r.mse_vis, r.tv, r.gen_adv, r.disc, r.generator_total})
    if (!std::isfinite(v)) return false;
  return true;
}

[[noreturn]] void non_finite(long step, const LossReport& r, const char* where) {
  std::ostringstream os;
  os << "non-finite loss at step " << step << " (" << where << "): disc=" << r.disc << " content=" << r.content
     << " mse_ir=" << r.mse_ir << " mse_vis=" << r.mse_vis << " tv=" << r.tv << " gen_adv=" << r.gen_adv
     << " generator_total=" << r.generator_total;
  throw NumericError(os.str());
}

std::string step_name(long step) {
  std::ostringstream os;
  os << "checkpoint_" << std::setw(6) << std::setfill('0') << step << ".ffc";
  return os.str();
}

}  // namespace

std::string log_csv(const RunLog& log) {
  std::ostringstream os;
  os << "step,disc,content,mse_ir,mse_vis,tv,gen_adv,generator_total\n";
  for (const auto& row : log.rows) {
    const auto& r = row.loss;
    os << row.step << ',' << full(r.disc) << ',' << full(r.content) << ',' << full(r.mse_ir) << ','
       << full(r.mse_vis) << ',' << full(r.tv) << ',' << full(r.gen_adv) << ',' << full(r.generator_total)
       << '\n';
  }
  return os.str();
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  // splitmix64 finalizer
  std::uint64_t z = base + 0x9E3779B97F4A7C15ull * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// ---------------------------------------------------------------------------
// Trainer
// ---------------------------------------------------------------------------

Trainer::Trainer(const TrainConfig& config, std::vector<PatchPair> patches)
    : config_(config), patches_(std::move(patches)) {
  config_.validate();
  if (patches_.empty()) throw DatasetError("no training patches");
  for (const auto& p : patches_)
    if (p.visible.height() != config_.patch.size || p.visible.width() != config_.patch.size)
      throw InputError("patch from '" + p.id + "' does not match patch_size");
  gen_ = build_generator<float>(config_.generator, derive_seed(config_.seed, 1));
  disc_ = build_discriminator<float>(config_.discriminator, derive_seed(config_.seed, 2));
  gen_opt_.learning_rate = config_.gen_lr;
  disc_opt_.learning_rate = config_.disc_lr;
  for (auto* opt : {&gen_opt_, &disc_opt_}) {
    opt->beta1 = config_.adam_beta1;
    opt->beta2 = config_.adam_beta2;
  }
  batch_rng_.seed(derive_seed(config_.seed, 3));
}

Trainer::Batch Trainer::next_batch() {
  std::vector<GrayImage> vis, ir;
  for (Index k = 0; k < config_.batch_size; ++k) {
    if (cursor_ == order_.size()) {
      order_.resize(patches_.size());
      std::iota(order_.begin(), order_.end(), std::size_t(0));
      std::shuffle(order_.begin(), order_.end(), batch_rng_);
      cursor_ = 0;
    }
    const PatchPair& p = patches_[order_[cursor_++]];
    vis.push_back(p.visible);
    ir.push_back(p.infrared);
  }
  return {to_tensor<float>(vis), to_tensor<float>(ir)};
}

void Trainer::notify(Phase phase, bool before) const {
  if (observer_) observer_(phase, before, *this);
}

LossReport Trainer::step() {
  const long step_no = steps_done_ + 1;
  LossReport r;
  Batch batch;
  Tensor<float> fused;

  for (long k = 0; k < config_.disc_steps_per_gen_step; ++k) {
    batch = next_batch();
    fused = forward(gen_, batch.visible, batch.infrared, Mode::train);
    notify(Phase::discriminator, true);
    // One joint batch so the running statistics describe the mixture that
    // eval-mode scoring later sees.
    const Index n = batch.visible.batch();
    const Tensor<float> scores = forward(disc_, concat_batch(fused.detach(), batch.visible), Mode::train);
    const Tensor<float> loss = disc_loss(slice_batch(scores, 0, n), slice_batch(scores, n, n));
    r.disc = loss.item();
    if (!std::isfinite(r.disc)) non_finite(step_no, r, "discriminator update");
    loss.backward();
    adam_step(disc_.set, disc_opt_);
    notify(Phase::discriminator, false);
  }

  notify(Phase::generator, true);
  const Tensor<float> d_fused = forward(disc_, fused, Mode::eval);
  const Tensor<float> adv = gen_adv_loss(d_fused, config_.adversarial);
  const ContentTerms<float> terms = content_loss(fused, batch.visible, batch.infrared, config_.weights);
  const Tensor<float> total = generator_total(terms.content, adv);
  r.content = terms.content.item();
  r.mse_ir = terms.mse_ir.item();
  r.mse_vis = terms.mse_vis.item();
  r.tv = terms.tv.item();
  r.gen_adv = adv.item();
  r.generator_total = total.item();
  if (!all_finite(r)) non_finite(step_no, r, "generator update");
  total.backward();
  adam_step(gen_.set, gen_opt_);
  disc_.set.zero_grad();
  notify(Phase::generator, false);

  steps_done_ = step_no;
  return r;
}

std::vector<CheckpointRecord> Trainer::checkpoint_records() const {
  std::vector<CheckpointRecord> records = to_records(gen_.set);
  for (auto& r : to_records(disc_.set)) records.push_back(std::move(r));
  records.push_back(text_record("meta.config", config_text(config_)));
  return records;
}

// ---------------------------------------------------------------------------
// Runs
// ---------------------------------------------------------------------------

std::vector<PatchPair> collect_patches(const DatasetManifest& manifest, const std::vector<ManifestEntry>& entries,
                                       const PatchSpec& spec) {
  std::vector<PatchPair> out;
  for (std::size_t k = 0; k < entries.size(); ++k) {
    PatchSpec s = spec;
    s.seed = derive_seed(spec.seed, k);
    for (auto& p : sample_patches(load_pair(manifest, entries[k]), s)) out.push_back(std::move(p));
  }
  return out;
}

TrainResult train_on_patches(const TrainConfig& config, std::vector<PatchPair> patches, const fs::path& out_dir,
                             Trainer::Observer observer) {
  Trainer trainer(config, std::move(patches));
  trainer.set_observer(std::move(observer));
  TrainResult result;
  RunLog& log = result.log;
  log.config_echo = config_text(trainer.config());
  log.started = std::chrono::system_clock::now();
  const fs::path log_path = out_dir.empty() ? fs::path{} : out_dir / config.log_path;

  try {
    for (long s = 1; s <= config.steps; ++s) {
      log.rows.push_back({s, trainer.step()});
      if (!out_dir.empty() && s % config.checkpoint_interval == 0 && s != config.steps)
        save_checkpoint(out_dir / step_name(s), trainer.checkpoint_records());
    }
  } catch (const NumericError&) {
    if (!out_dir.empty()) write_text(log_path, log_csv(log));
    throw;
  }
  log.finished = std::chrono::system_clock::now();

  if (!out_dir.empty()) {
    write_text(log_path, log_csv(log));
    result.final_checkpoint = out_dir / "checkpoint_final.ffc";
    save_checkpoint(result.final_checkpoint, trainer.checkpoint_records());
    std::ostringstream info;
    info << "started = " << timestamp(log.started) << '\n'
         << "finished = " << timestamp(log.finished) << '\n'
         << "wall_seconds = " << std::chrono::duration<double>(log.finished - log.started).count() << '\n'
         << "steps = " << log.rows.size() << '\n'
         << "# config\n"
         << log.config_echo;
    write_text(out_dir / "run_info.txt", info.str());
  }
  result.generator = trainer.generator();
  result.discriminator = trainer.discriminator();
  return result;
}

TrainResult train(const TrainConfig& config, const DatasetManifest& manifest, const fs::path& out_dir,
                  Trainer::Observer observer) {
  config.validate();
  const auto entries = manifest.split("train");
  if (entries.empty()) throw DatasetError("manifest has no entries tagged 'train'");
  if (!out_dir.empty()) write_text(out_dir / "manifest.tsv", manifest_text(manifest));
  return train_on_patches(config, collect_patches(manifest, entries, config.patch), out_dir, std::move(observer));
}

double heldout_content(const GeneratorParams<float>& generator, const std::vector<PatchPair>& patches,
                       const LossWeights& weights, Index batch_size) {
  if (patches.empty()) throw DatasetError("no held-out patches");
  double total = 0;
  for (std::size_t b = 0; b < patches.size(); b += std::size_t(batch_size)) {
    std::vector<GrayImage> vis, ir;
    for (std::size_t k = b; k < std::min(patches.size(), b + std::size_t(batch_size)); ++k) {
      vis.push_back(patches[k].visible);
      ir.push_back(patches[k].infrared);
    }
    const Tensor<float> v = to_tensor<float>(vis), i = to_tensor<float>(ir);
    const Tensor<float> f = forward(generator, v, i, Mode::eval);
    total += double(content_loss(f, v, i, weights).content.item()) * double(vis.size());
  }
  return total / double(patches.size());
}

// ---------------------------------------------------------------------------
// Grid search
// ---------------------------------------------------------------------------

std::string grid_csv(const GridResult& result) {
  std::ostringstream os;
  os << "alpha,beta,seed,heldout_content,final_train_content\n";
  for (const auto& c : result.table)
    os << full(c.alpha) << ',' << full(c.beta) << ',' << c.seed << ',' << full(c.heldout_content) << ','
       << full(c.final_train_content) << '\n';
  return os.str();
}

GridResult grid_search(const GridSpec& grid, const TrainConfig& base, const DatasetManifest& manifest,
                       const fs::path& out_dir) {
  grid.validate();
  base.validate();
  std::vector<ManifestEntry> train_entries = manifest.split("train");
  std::vector<ManifestEntry> held_entries = manifest.split("eval");
  if (held_entries.empty()) {
    const auto n = train_entries.size();
    const auto hold = std::max<std::size_t>(1, std::size_t(std::lround(grid.holdout_fraction * double(n))));
    if (n <= hold) throw DatasetError("grid search needs at least two train pairs to hold one out");
    held_entries.assign(train_entries.end() - std::ptrdiff_t(hold), train_entries.end());
    train_entries.resize(n - hold);
  }
  if (train_entries.empty()) throw DatasetError("manifest has no entries tagged 'train'");
  const auto train_patches = collect_patches(manifest, train_entries, base.patch);
  const auto held_patches = collect_patches(manifest, held_entries, base.patch);

  GridResult result;
  double best = 0;
  std::uint64_t cell = 0;
  for (double a : grid.alphas)
    for (double b : grid.betas) {
      TrainConfig cfg = base;
      cfg.weights = {a, b};
      cfg.steps = grid.steps_per_cell;
      cfg.seed = derive_seed(base.seed, 100 + cell++);
      const TrainResult run = train_on_patches(cfg, train_patches);
      GridCell c{a, b, cfg.seed, heldout_content(run.generator, held_patches, grid.reference, base.batch_size),
                 run.log.rows.back().loss.content};
      if (result.table.empty() || c.heldout_content < best) {
        best = c.heldout_content;
        result.best = cfg.weights;
      }
      result.table.push_back(c);
    }
  if (!out_dir.empty()) write_text(out_dir / "grid.csv", grid_csv(result));
  return result;
}

// ---------------------------------------------------------------------------
// Inference and evaluation
// ---------------------------------------------------------------------------

FusionModel load_fusion_model(const std::vector<CheckpointRecord>& records) {
  const CheckpointRecord* meta = find_record(records, "meta.config");
  if (!meta) throw DecodeError("checkpoint has no meta.config record");
  FusionModel m{parse_train_config(record_text(*meta)), {}};
  m.generator = build_generator<float>(m.config.generator, 0);
  load_records(m.generator.set, records);
  return m;
}

FusionModel load_fusion_model(const fs::path& checkpoint) { return load_fusion_model(load_checkpoint(checkpoint)); }

GrayImage fuse(const GeneratorParams<float>& generator, const ImagePair& pair) {
  const Index h = pair.visible.height(), w = pair.visible.width();
  if (pair.infrared.height() != h || pair.infrared.width() != w)
    throw InputError("fuse: visible and infrared images differ in size");
  const Index m = GeneratorConfig::input_multiple;
  const Index ph = (h + m - 1) / m * m, pw = (w + m - 1) / m * m;
  const Tensor<float> v = to_tensor<float>(reflect_pad(pair.visible, ph, pw));
  const Tensor<float> i = to_tensor<float>(reflect_pad(pair.infrared, ph, pw));
  const GrayImage out = to_image(forward(generator, v, i, Mode::eval));
  return crop(out, 0, 0, h, w);
}

GrayImage fuse(const FusionModel& model, const ImagePair& pair) { return fuse(model.generator, pair); }

EvalOutcome evaluate_fused(const fs::path& fused_dir, const DatasetManifest& manifest) {
  EvalOutcome out;
  std::vector<MetricRow> rows;
  for (const auto& e : manifest.entries) {
    fs::path path;
    for (const char* ext : {".png", ".pgm"})
      if (fs::is_regular_file(fused_dir / (e.id + ext))) {
        path = fused_dir / (e.id + ext);
        break;
      }
    if (path.empty()) {
      out.missing.push_back(e.id);
      continue;
    }
    const ImagePair pair = load_pair(manifest, e);
    const GrayImage f = load_grayscale(path);
    if (f.height() != pair.visible.height() || f.width() != pair.visible.width())
      throw InputError(path.string() + ": fused image size differs from its source pair");
    rows.push_back(evaluate(f, pair.visible, pair.infrared, e.id));
  }
  if (rows.empty()) throw InputError("no fused images found in " + fused_dir.string());
  out.report = make_report(std::move(rows));
  return out;
}

}  // namespace fforge
