#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "../support/oracles.hpp"
#include "fforge/data.hpp"
#include "fforge/metrics.hpp"

using namespace fforge;
namespace fs = std::filesystem;

namespace {

class TempDir {
 public:
  explicit TempDir(const std::string& name) : path_(fs::temp_directory_path() / name) {
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

void write_pair(const fs::path& root, const std::string& id, std::uint64_t seed, bool with_ir = true) {
  fs::create_directories(root / id);
  const ImagePair p = synthesize_pair(seed, 32);
  save_grayscale(p.visible, root / id / "vis.png");
  if (with_ir) save_grayscale(p.infrared, root / id / "ir.pgm");
}

}  // namespace

TEST(Images, LevelsMapToUnitInterval) {
  LevelArray l(1, 3);
  l << 0, 128, 255;
  const GrayImage g = GrayImage::from_levels(l);
  EXPECT_EQ(g(0, 2), 1.0);
  EXPECT_EQ(g(0, 0), 0.0);
  EXPECT_TRUE((g.levels() == l).all());
  EXPECT_THROW(GrayImage(ImageArray::Constant(2, 2, 1.5)), InputError);
  EXPECT_THROW(GrayImage(ImageArray(0, 0)), InputError);
}

TEST(Images, ReadsAsciiPgmFixture) {
  const GrayImage g = load_grayscale(fs::path(FFORGE_FIXTURE_DIR) / "tiny_3x2.pgm");
  ASSERT_EQ(g.height(), 2);
  ASSERT_EQ(g.width(), 3);
  LevelArray expect(2, 3);
  expect << 0, 128, 255, 64, 32, 16;
  EXPECT_TRUE((g.levels() == expect).all());
}

TEST(Images, PngAndPgmRoundTrip) {
  TempDir dir("fforge_io_test");
  std::mt19937_64 rng(1);
  const GrayImage g = oracle::random_image(7, 5, rng);
  for (const char* name : {"a.png", "a.pgm"}) {
    save_grayscale(g, dir.path() / name);
    EXPECT_TRUE((load_grayscale(dir.path() / name).levels() == g.levels()).all()) << name;
  }
  EXPECT_THROW(load_grayscale(dir.path() / "missing.png"), DecodeError);
  EXPECT_THROW(save_grayscale(g, dir.path() / "a.bmp"), InputError);
  std::ofstream(dir.path() / "bad.pgm") << "P5\n2 2\n65535\n";
  EXPECT_THROW(load_grayscale(dir.path() / "bad.pgm"), DecodeError);
}

TEST(Manifest, PairsOrphansAndSplits) {
  TempDir dir("fforge_manifest_test");
  write_pair(dir.path(), "b", 2);
  write_pair(dir.path(), "a", 1);
  write_pair(dir.path(), "orphan", 3, false);
  std::ofstream(dir.path() / "eval_ids.txt") << "b\n";
  const ManifestBuild b = build_manifest(dir.path());
  ASSERT_EQ(b.manifest.entries.size(), 2u);
  ASSERT_EQ(b.warnings.size(), 1u);
  EXPECT_EQ(b.warnings[0].id, "orphan");
  EXPECT_EQ(b.manifest.entries[0].id, "a");
  EXPECT_EQ(b.manifest.entries[0].split, "train");
  EXPECT_EQ(b.manifest.split("eval").size(), 1u);

  const DatasetManifest again = parse_manifest(manifest_text(b.manifest), dir.path());
  EXPECT_EQ(again.entries, b.manifest.entries);
  const ImagePair p = load_pair(again, again.entries[1]);
  EXPECT_TRUE((p.visible.levels() == synthesize_pair(2, 32).visible.levels()).all());
  EXPECT_EQ(p.id, "b");
}

TEST(Manifest, DeterministicOverFixtureTree) {
  TempDir dir("fforge_manifest_tree");
  for (int k = 0; k < 5; ++k) write_pair(dir.path(), "p" + std::to_string(k), k);
  EXPECT_EQ(manifest_text(build_manifest(dir.path()).manifest), manifest_text(build_manifest(dir.path()).manifest));
}

TEST(Manifest, EmptyOrMalformed) {
  TempDir dir("fforge_manifest_empty");
  EXPECT_THROW(build_manifest(dir.path()), DatasetError);
  EXPECT_THROW(build_manifest(dir.path() / "nope"), DatasetError);
  EXPECT_THROW(parse_manifest("", dir.path()), DatasetError);
  EXPECT_THROW(parse_manifest("a\tb\n", dir.path()), DatasetError);
  EXPECT_THROW(parse_manifest("a\tv\ti\ttrain\na\tv\ti\ttrain\n", dir.path()), DatasetError);
}

TEST(Patches, GridCountAndSlicing) {
  const ImagePair pair = synthesize_pair(4, 64);
  const auto ps = sample_patches(pair, PatchSpec{32, 32, 9});
  ASSERT_EQ(ps.size(), 4u);
  std::set<std::pair<Index, Index>> origins;
  for (const auto& p : ps) {
    origins.insert({p.row, p.col});
    for (Index r = 0; r < 32; ++r)
      for (Index c = 0; c < 32; ++c) {
        ASSERT_EQ(p.visible(r, c), pair.visible(p.row + r, p.col + c));
        ASSERT_EQ(p.infrared(r, c), pair.infrared(p.row + r, p.col + c));
      }
  }
  EXPECT_EQ(origins, (std::set<std::pair<Index, Index>>{{0, 0}, {0, 32}, {32, 0}, {32, 32}}));
  EXPECT_EQ(sample_patches(pair, PatchSpec{32, 16, 1}).size(), 9u);
  EXPECT_THROW(sample_patches(pair, PatchSpec{96, 32, 1}), InputError);
}

TEST(Patches, SeedControlsOrderOnly) {
  const ImagePair pair = synthesize_pair(5, 96);
  const auto a = sample_patches(pair, PatchSpec{32, 16, 1});
  const auto b = sample_patches(pair, PatchSpec{32, 16, 1});
  const auto c = sample_patches(pair, PatchSpec{32, 16, 2});
  std::vector<std::pair<Index, Index>> oa, ob, oc;
  for (const auto& p : a) oa.push_back({p.row, p.col});
  for (const auto& p : b) ob.push_back({p.row, p.col});
  for (const auto& p : c) oc.push_back({p.row, p.col});
  EXPECT_EQ(oa, ob);
  EXPECT_NE(oa, oc);
  EXPECT_EQ(std::set(oa.begin(), oa.end()), std::set(oc.begin(), oc.end()));
}

TEST(Synthetic, DeterministicAndPlausible) {
  EXPECT_EQ(synthesize_pair(3, 64).visible, synthesize_pair(3, 64).visible);
  EXPECT_EQ(synthesize_pair(3, 64).infrared, synthesize_pair(3, 64).infrared);
  EXPECT_FALSE(synthesize_pair(3, 64).visible == synthesize_pair(4, 64).visible);
  for (std::uint64_t s = 0; s < 20; ++s) {
    const ImagePair p = synthesize_pair(s, 64);
    EXPECT_GT(entropy(p.visible), entropy(p.infrared)) << s;
    EXPECT_GT(p.infrared.pixels().maxCoeff() - p.infrared.pixels().minCoeff(), 0.3) << s;
  }
  EXPECT_THROW(synthesize_pair(1, 48), InputError);
}

TEST(Synthetic, ReflectPadAndCrop) {
  LevelArray l(2, 3);
  l << 1, 2, 3, 4, 5, 6;
  const GrayImage g = GrayImage::from_levels(l);
  const GrayImage p = reflect_pad(g, 3, 5);
  EXPECT_EQ(p.height(), 3);
  EXPECT_EQ(crop(p, 0, 0, 2, 3), g);
  EXPECT_EQ(p.levels()(2, 0), 4);  // mirrors the bottom row back
  EXPECT_THROW(reflect_pad(g, 1, 3), InputError);
  EXPECT_THROW(crop(g, 1, 1, 2, 2), InputError);
  EXPECT_THROW(make_image_pair(g, GrayImage::constant(3, 2, 0), "x"), InputError);
}
