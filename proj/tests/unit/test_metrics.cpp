#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "../support/oracles.hpp"
#include "../support/suites.hpp"
#include "fforge/metrics.hpp"

using namespace fforge;

namespace {

/// Level k repeated so every one of the 256 levels appears equally often.
GrayImage ramp(bool along_rows) {
  LevelArray l(256, 256);
  for (Index r = 0; r < 256; ++r)
    for (Index c = 0; c < 256; ++c) l(r, c) = int(along_rows ? r : c);
  return GrayImage::from_levels(l);
}

GrayImage inverted(const GrayImage& x) { return GrayImage(1.0 - x.pixels()); }

MetricRow row(const std::string& id, double vif, double qabf, double ssim, double mi, double en) {
  MetricRow r;
  r.image_id = id;
  r.vif = vif;
  r.qabf = qabf;
  r.ssim = ssim;
  r.mi = mi;
  r.en = en;
  return r;
}

}  // namespace

TEST(Metrics, AgreeWithDirectOracles) {
  for (const auto& r : suites::metric_oracles(6, 17)) EXPECT_TRUE(r.pass()) << r.name << ": " << r.error;
}

TEST(Entropy, ClosedForms) {
  EXPECT_EQ(entropy(GrayImage::constant(8, 8, 0.4)), 0.0);
  LevelArray half(2, 4);
  half << 0, 0, 0, 0, 255, 255, 255, 255;
  EXPECT_NEAR(entropy(GrayImage::from_levels(half)), 1.0, 1e-12);
  EXPECT_NEAR(entropy(ramp(false)), 8.0, 1e-12);
}

TEST(MutualInformation, IndependentAndIdentical) {
  EXPECT_NEAR(mutual_information_pair(ramp(false), ramp(true)), 0.0, 1e-12);
  std::mt19937_64 rng(2);
  const GrayImage x = oracle::random_image(16, 16, rng);
  EXPECT_NEAR(mutual_information_pair(x, x), entropy(x), 1e-12);
  EXPECT_NEAR(mutual_information(x, x, x), 2 * entropy(x), 1e-10);
  EXPECT_THROW(mutual_information_pair(x, GrayImage::constant(8, 16, 0)), InputError);
}

TEST(Ssim, IdentityInversionSymmetry) {
  std::mt19937_64 rng(3);
  const GrayImage x = oracle::smooth_image(32, 32, rng), y = oracle::smooth_image(32, 32, rng);
  EXPECT_NEAR(ssim_pair(x, x), 1.0, 1e-12);
  EXPECT_LT(ssim_pair(x, inverted(x)), 0.0);
  EXPECT_NEAR(ssim_pair(x, y), ssim_pair(y, x), 1e-12);
  EXPECT_NEAR(ssim_fusion(x, x, y), (1.0 + ssim_pair(x, y)) / 2, 1e-12);
  EXPECT_THROW(ssim_pair(GrayImage::constant(8, 8, 0), GrayImage::constant(8, 8, 0)), InputError);
}

TEST(Vif, IdentityAndConstant) {
  std::mt19937_64 rng(4);
  const GrayImage x = oracle::smooth_image(48, 48, rng);
  EXPECT_NEAR(vif_pair(x, x), 1.0, 1e-6);
  EXPECT_NEAR(vif_pair(x, GrayImage::constant(48, 48, 0.5)), 0.0, 1e-6);
  EXPECT_THROW(vif_pair(GrayImage::constant(4, 4, 0), GrayImage::constant(4, 4, 0)), InputError);
  EXPECT_LE(vif_min_extent(), 32);
}

TEST(Qabf, LimitsSymmetryRange) {
  std::mt19937_64 rng(5);
  const GrayImage v = oracle::smooth_image(32, 32, rng), i = oracle::smooth_image(32, 32, rng);
  const GrayImage f = oracle::smooth_image(32, 32, rng);
  const GrayImage flat = GrayImage::constant(32, 32, 0.5);
  // A fused image equal to the only edge-bearing source transfers every edge.
  EXPECT_GT(qabf(v, flat, v), 0.95);
  EXPECT_NEAR(qabf(v, i, flat), 0.0, 1e-4);  // sigmoid floor at zero transfer
  EXPECT_NEAR(qabf(v, i, f), qabf(i, v, f), 1e-12);
  for (int k = 0; k < 5; ++k) {
    const double q = qabf(oracle::random_image(16, 16, rng), oracle::random_image(16, 16, rng),
                          oracle::random_image(16, 16, rng));
    EXPECT_GE(q, 0.0);
    EXPECT_LE(q, 1.0);
  }
}

TEST(Evaluate, BreakdownAndFusedScores) {
  std::mt19937_64 rng(6);
  const GrayImage v = oracle::smooth_image(40, 40, rng), i = oracle::smooth_image(40, 40, rng);
  const MetricRow r = evaluate(v, v, i, "x");
  EXPECT_EQ(r.image_id, "x");
  EXPECT_NEAR(r.breakdown.ssim_fv, 1.0, 1e-12);
  EXPECT_NEAR(r.ssim, (r.breakdown.ssim_fv + r.breakdown.ssim_fi) / 2, 1e-15);
  EXPECT_NEAR(r.mi, r.breakdown.mi_fv + r.breakdown.mi_fi, 1e-15);
  EXPECT_NEAR(r.vif, r.breakdown.vif_vf + r.breakdown.vif_if, 1e-15);
  EXPECT_NEAR(r.en, entropy(v), 1e-15);
}

TEST(Aggregate, MeansAndErrors) {
  const MetricRow a = row("a", 1, 0.2, 0.3, 4, 5);
  EXPECT_EQ(aggregate({a}).vif, 1);
  EXPECT_EQ(aggregate({a}).en, 5);
  EXPECT_EQ(aggregate({a}).image_id, "Average");
  const MetricRow m = aggregate({a, a, a});
  EXPECT_DOUBLE_EQ(m.qabf, 0.2);
  EXPECT_DOUBLE_EQ(m.mi, 4);
  const MetricRow h = aggregate({a, row("b", 3, 0.4, 0.5, 2, 7)});
  EXPECT_DOUBLE_EQ(h.vif, 2);
  EXPECT_DOUBLE_EQ(h.ssim, 0.4);
  EXPECT_THROW(aggregate({}), UsageError);
}

TEST(Report, CsvMarkdownAndFiles) {
  const MetricReport rep = make_report({row("a", 1, 0.25, 0.5, 3, 7), row("b", 2, 0.75, 0.5, 4, 6)});
  const std::string csv = report_csv(rep);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "image_id,VIF,QABF,SSIM,MI,EN");
  EXPECT_NE(csv.find("Average"), std::string::npos);
  EXPECT_NE(report_markdown(rep).find("| Average"), std::string::npos);

  const auto dir = std::filesystem::temp_directory_path() / "fforge_report_test";
  std::filesystem::create_directories(dir);
  write_report(rep, dir / "m");
  for (const char* f : {"m.csv", "m.md", "m_breakdown.csv"}) EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
  std::filesystem::remove_all(dir);
}
