#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(FFORGE_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST(Cli, UsageErrorsExitOne) {
  EXPECT_EQ(run(""), 1);
  EXPECT_EQ(run("bogus"), 1);
  EXPECT_EQ(run("fuse --vis a.png"), 1);
  EXPECT_EQ(run("--help"), 0);
}

TEST(Cli, SynthTrainFuseEval) {
  const fs::path dir = scratch("fforge_cli_flow");
  ASSERT_EQ(run("synth --seed 3 --size 32 --count 2 --out " + (dir / "data").string()), 0);
  std::ofstream(dir / "cfg.txt") << "steps = 2\nbatch_size = 2\npatch_size = 32\npatch_stride = 32\n"
                                    "gen.stem_channels = 8\ngen.stage_widths = 8,8,8,8\n"
                                    "gen.blocks_per_stage = 1,1,1,1\ndisc.stage_widths = 8\n"
                                    "disc.blocks_per_stage = 1\ndisc.hidden = 8\n";
  ASSERT_EQ(run("train --config " + (dir / "cfg.txt").string() + " --data " + (dir / "data").string() + " --out " +
                (dir / "run").string()),
            0);
  const fs::path pair = dir / "data" / "synth_000003";
  ASSERT_EQ(run("fuse --checkpoint " + (dir / "run" / "checkpoint_final.ffc").string() + " --vis " +
                (pair / "vis.png").string() + " --ir " + (pair / "ir.png").string() + " --out " +
                (dir / "fused" / "synth_000003.png").string()),
            0);
  // One of two fused images is missing.
  EXPECT_EQ(run("eval --fused " + (dir / "fused").string() + " --data " + (dir / "data").string() + " --report " +
                (dir / "report").string()),
            1);
  fs::copy_file(dir / "fused" / "synth_000003.png", dir / "fused" / "synth_000004.png");
  EXPECT_EQ(run("eval --fused " + (dir / "fused").string() + " --data " + (dir / "data").string() + " --report " +
                (dir / "report").string()),
            0);
  EXPECT_TRUE(fs::exists(dir / "report.csv"));
  fs::remove_all(dir);
}

TEST(Cli, BadInputsExitOne) {
  const fs::path dir = scratch("fforge_cli_bad");
  std::ofstream(dir / "junk.ffc") << "not a checkpoint";
  EXPECT_EQ(run("fuse --checkpoint " + (dir / "junk.ffc").string() + " --vis x.png --ir y.png --out z.png"), 1);
  EXPECT_EQ(run("train --data " + (dir / "empty").string() + " --out " + (dir / "o").string()), 1);
  std::ofstream(dir / "cfg.txt") << "unknown_key = 1\n";
  EXPECT_EQ(run("train --config " + (dir / "cfg.txt").string() + " --data " + dir.string() + " --out " +
                (dir / "o").string()),
            1);
  fs::remove_all(dir);
}

TEST(Cli, NumericFailureExitsTwo) {
  const fs::path dir = scratch("fforge_cli_nan");
  ASSERT_EQ(run("synth --seed 1 --size 32 --count 2 --out " + (dir / "data").string()), 0);
  std::ofstream(dir / "cfg.txt") << "steps = 3\nbatch_size = 2\npatch_size = 32\ngen_lr = 1e30\ndisc_lr = 1e30\n"
                                    "gen.stem_channels = 8\ngen.stage_widths = 8,8,8,8\n"
                                    "gen.blocks_per_stage = 1,1,1,1\ndisc.stage_widths = 8\n"
                                    "disc.blocks_per_stage = 1\n";
  EXPECT_EQ(run("train --config " + (dir / "cfg.txt").string() + " --data " + (dir / "data").string() + " --out " +
                (dir / "run").string()),
            2);
  fs::remove_all(dir);
}
