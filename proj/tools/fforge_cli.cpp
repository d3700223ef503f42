// fforge: train, grid-search, fuse, evaluate and synthesize fixtures.
// Exit codes: 0 success, 1 input/config error, 2 numeric failure.

#include <filesystem>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "fforge/train.hpp"

namespace fs = std::filesystem;
using namespace fforge;

namespace {

DatasetManifest load_manifest(const fs::path& root) {
  ManifestBuild b = build_manifest(root);
  for (const auto& w : b.warnings) std::cerr << "warning: skipping '" << w.id << "': " << w.message << '\n';
  return b.manifest;
}

std::map<std::string, std::string> config_map(const std::string& path) {
  return path.empty() ? std::map<std::string, std::string>{} : parse_key_values(read_text_file(path));
}

int run_train(const std::string& config_path, const fs::path& data, const fs::path& out) {
  const TrainConfig cfg = parse_train_config(config_map(config_path));
  const TrainResult r = train(cfg, load_manifest(data), out);
  const auto& last = r.log.rows.back().loss;
  std::cout << "trained " << r.log.rows.size() << " steps; final content " << last.content << ", disc "
            << last.disc << "\ncheckpoint: " << r.final_checkpoint.string() << '\n';
  return 0;
}

int run_grid(const std::string& config_path, const std::string& alphas, const std::string& betas,
             const fs::path& data, const fs::path& out) {
  const auto kv = config_map(config_path);
  const TrainConfig base = parse_train_config(kv);
  GridSpec grid = parse_grid_spec(kv, base);
  if (!alphas.empty()) grid.alphas = parse_real_list(alphas);
  if (!betas.empty()) grid.betas = parse_real_list(betas);
  const GridResult r = grid_search(grid, base, load_manifest(data), out);
  std::cout << grid_csv(r) << "best: alpha = " << r.best.alpha << ", beta = " << r.best.beta << '\n';
  return 0;
}

int run_fuse(const fs::path& checkpoint, const fs::path& vis, const fs::path& ir, const fs::path& out) {
  const FusionModel model = load_fusion_model(checkpoint);
  const ImagePair pair = make_image_pair(load_grayscale(vis), load_grayscale(ir), vis.stem().string());
  save_grayscale(fuse(model, pair), out);
  return 0;
}

int run_eval(const fs::path& fused, const fs::path& data, const fs::path& prefix) {
  const EvalOutcome e = evaluate_fused(fused, load_manifest(data));
  write_report(e.report, prefix);
  std::cout << report_markdown(e.report);
  for (const auto& id : e.missing) std::cerr << "missing fused image for '" << id << "'\n";
  return e.missing.empty() ? 0 : 1;
}

int run_synth(std::uint64_t seed, Index size, int count, const fs::path& out) {
  for (int k = 0; k < count; ++k) {
    const ImagePair p = synthesize_pair(seed + std::uint64_t(k), size);
    save_grayscale(p.visible, out / p.id / "vis.png");
    save_grayscale(p.infrared, out / p.id / "ir.png");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Visible/infrared image fusion with a residual autoencoder GAN"};
  app.require_subcommand(1);

  std::string config, alphas, betas;
  fs::path data, out, checkpoint, vis, ir, fused, report;
  std::uint64_t seed = 1;
  Index size = 64;
  int count = 1;

  auto* train_cmd = app.add_subcommand("train", "Adversarial training on a dataset root");
  train_cmd->add_option("--config", config, "key = value config file")->check(CLI::ExistingFile);
  train_cmd->add_option("--data", data, "dataset root (<id>/vis.*, <id>/ir.*)")->required();
  train_cmd->add_option("--out", out, "output directory")->required();

  auto* grid_cmd = app.add_subcommand("grid", "Alpha/beta grid search");
  grid_cmd->add_option("--config", config, "key = value config file")->check(CLI::ExistingFile);
  grid_cmd->add_option("--alphas", alphas, "comma-separated alpha candidates");
  grid_cmd->add_option("--betas", betas, "comma-separated beta candidates");
  grid_cmd->add_option("--data", data, "dataset root")->required();
  grid_cmd->add_option("--out", out, "directory receiving grid.csv");

  auto* fuse_cmd = app.add_subcommand("fuse", "Fuse one visible/infrared pair");
  fuse_cmd->add_option("--checkpoint", checkpoint, "trained checkpoint")->required();
  fuse_cmd->add_option("--vis", vis, "visible image")->required();
  fuse_cmd->add_option("--ir", ir, "infrared image")->required();
  fuse_cmd->add_option("--out", out, "output image (.png or .pgm)")->required();

  auto* eval_cmd = app.add_subcommand("eval", "Metric report for a directory of fused images");
  eval_cmd->add_option("--fused", fused, "directory of <id>.png fused images")->required();
  eval_cmd->add_option("--data", data, "dataset root")->required();
  eval_cmd->add_option("--report", report, "output prefix for .csv/.md/_breakdown.csv")->required();

  auto* synth_cmd = app.add_subcommand("synth", "Write synthetic visible/infrared pairs");
  synth_cmd->add_option("--seed", seed, "first seed");
  synth_cmd->add_option("--size", size, "side length, a multiple of 32");
  synth_cmd->add_option("--count", count, "number of pairs")->check(CLI::PositiveNumber);
  synth_cmd->add_option("--out", out, "dataset root to write")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*train_cmd) return run_train(config, data, out);
    if (*grid_cmd) return run_grid(config, alphas, betas, data, out);
    if (*fuse_cmd) return run_fuse(checkpoint, vis, ir, out);
    if (*eval_cmd) return run_eval(fused, data, report);
    if (*synth_cmd) return run_synth(seed, size, count, out);
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
