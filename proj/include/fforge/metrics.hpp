#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "fforge/image.hpp"

namespace fforge {

/// Shannon entropy (bits) of the 256-bin histogram of 8-bit levels.
double entropy(const GrayImage& img);

/// I(A;B) in bits from the 256×256 joint level histogram.
double mutual_information_pair(const GrayImage& a, const GrayImage& b);

/// MI(F;V) + MI(F;I).
double mutual_information(const GrayImage& f, const GrayImage& v, const GrayImage& i);

/// Mean SSIM over all valid 11×11 Gaussian (sigma 1.5) window positions with
/// C1 = 0.01², C2 = 0.03² on the [0, 1] range.
double ssim_pair(const GrayImage& x, const GrayImage& y);

/// (SSIM(F, V) + SSIM(F, I)) / 2.
double ssim_fusion(const GrayImage& f, const GrayImage& v, const GrayImage& i);

/// Smallest extent every pixel-domain VIF scale accepts.
Index vif_min_extent();

/// Four-scale pixel-domain VIF on 255-scaled intensities with GSM noise
/// variance 2. Window size at scale s is 2^(5-s)+1 with sigma size/5.
/// Filtering keeps image size with half-sample symmetric extension and each
/// coarser scale is the previous one low-passed and decimated by two.
double vif_pair(const GrayImage& reference, const GrayImage& distorted);

/// VIF(V -> F) + VIF(I -> F).
double vif_fusion(const GrayImage& f, const GrayImage& v, const GrayImage& i);

/// Xydeas-Petrovic edge-transfer index Q^AB/F for sources A = v, B = i.
double qabf(const GrayImage& v, const GrayImage& i, const GrayImage& f);

/// Per-source terms behind the fused scores of one MetricRow.
struct MetricBreakdown {
  double ssim_fv = 0, ssim_fi = 0;
  double mi_fv = 0, mi_fi = 0;
  double vif_vf = 0, vif_if = 0;
};

struct MetricRow {
  std::string image_id;
  double vif = 0, qabf = 0, ssim = 0, mi = 0, en = 0;
  MetricBreakdown breakdown;
};

MetricRow evaluate(const GrayImage& f, const GrayImage& v, const GrayImage& i, const std::string& image_id);

/// Column-wise arithmetic mean labelled "Average".
MetricRow aggregate(const std::vector<MetricRow>& rows);

struct MetricReport {
  std::vector<MetricRow> rows;
  MetricRow average;
};

MetricReport make_report(std::vector<MetricRow> rows);

/// CSV with header image_id,VIF,QABF,SSIM,MI,EN; the last row is the average.
std::string report_csv(const MetricReport& report);

/// Aligned Markdown table in the same column order, with a conventions footer.
std::string report_markdown(const MetricReport& report);

/// Per-source breakdown CSV.
std::string report_breakdown_csv(const MetricReport& report);

/// Writes <prefix>.csv, <prefix>.md and <prefix>_breakdown.csv.
void write_report(const MetricReport& report, const std::filesystem::path& prefix);

}  // namespace fforge
