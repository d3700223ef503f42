#include "fforge/metrics.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <vector>

namespace fforge {
namespace {

constexpr int kLevels = 256;

void require_same_size(const GrayImage& a, const GrayImage& b, const char* what) {
  if (a.height() != b.height() || a.width() != b.width())
    throw InputError(std::string(what) + ": images differ in size (" + std::to_string(a.height()) + "x" +
                     std::to_string(a.width()) + " vs " + std::to_string(b.height()) + "x" +
                     std::to_string(b.width()) + ")");
}

double entropy_of_counts(const Eigen::ArrayXd& counts, double total) {
  double h = 0;
  for (Index k = 0; k < counts.size(); ++k)
    if (counts[k] > 0) {
      const double p = counts[k] / total;
      h -= p * std::log2(p);
    }
  return h;
}

Eigen::ArrayXd normalized_gaussian(int size, double sigma) {
  Eigen::ArrayXd g(size);
  const double c = (size - 1) / 2.0;
  for (int k = 0; k < size; ++k) g[k] = std::exp(-(k - c) * (k - c) / (2 * sigma * sigma));
  return g / g.sum();
}

/// Separable correlation keeping only windows fully inside the image.
ImageArray filter_valid(const ImageArray& img, const Eigen::ArrayXd& g) {
  const Index k = g.size();
  const Index h = img.rows(), w = img.cols();
  ImageArray tmp(h, w - k + 1);
  for (Index c = 0; c < tmp.cols(); ++c) {
    tmp.col(c) = img.col(c) * g[0];
    for (Index t = 1; t < k; ++t) tmp.col(c) += img.col(c + t) * g[t];
  }
  ImageArray out(h - k + 1, tmp.cols());
  for (Index r = 0; r < out.rows(); ++r) {
    out.row(r) = tmp.row(r) * g[0];
    for (Index t = 1; t < k; ++t) out.row(r) += tmp.row(r + t) * g[t];
  }
  return out;
}

Index mirror(Index i, Index n) {
  if (i < 0) return -i - 1;
  if (i >= n) return 2 * n - i - 1;
  return i;
}

/// Separable correlation, output the size of the input, half-sample
/// symmetric extension at the borders. Requires kernel radius < extent.
ImageArray filter_same_symmetric(const ImageArray& img, const Eigen::ArrayXd& g) {
  const Index k = g.size(), half = (k - 1) / 2;
  const Index h = img.rows(), w = img.cols();
  ImageArray tmp = ImageArray::Zero(h, w);
  for (Index c = 0; c < w; ++c)
    for (Index t = 0; t < k; ++t) tmp.col(c) += img.col(mirror(c + t - half, w)) * g[t];
  ImageArray out = ImageArray::Zero(h, w);
  for (Index r = 0; r < h; ++r)
    for (Index t = 0; t < k; ++t) out.row(r) += tmp.row(mirror(r + t - half, h)) * g[t];
  return out;
}

ImageArray decimate(const ImageArray& img) {
  const Index h = (img.rows() + 1) / 2, w = (img.cols() + 1) / 2;
  ImageArray out(h, w);
  for (Index r = 0; r < h; ++r)
    for (Index c = 0; c < w; ++c) out(r, c) = img(2 * r, 2 * c);
  return out;
}

constexpr int kVifScales = 4;
int vif_window(int scale) { return (1 << (kVifScales - scale + 1)) + 1; }  // scale is 1-based

struct Gradients {
  ImageArray strength, orientation;
};

/// Sobel magnitude and orientation atan(gy/gx) with replicated borders.
Gradients sobel(const GrayImage& img) {
  const Index h = img.height(), w = img.width();
  const ImageArray& p = img.pixels();
  auto at = [&](Index r, Index c) { return p(std::clamp<Index>(r, 0, h - 1), std::clamp<Index>(c, 0, w - 1)); };
  Gradients g{ImageArray(h, w), ImageArray(h, w)};
  for (Index r = 0; r < h; ++r)
    for (Index c = 0; c < w; ++c) {
      const double gx = (at(r - 1, c + 1) + 2 * at(r, c + 1) + at(r + 1, c + 1)) -
                        (at(r - 1, c - 1) + 2 * at(r, c - 1) + at(r + 1, c - 1));
      const double gy = (at(r + 1, c - 1) + 2 * at(r + 1, c) + at(r + 1, c + 1)) -
                        (at(r - 1, c - 1) + 2 * at(r - 1, c) + at(r - 1, c + 1));
      g.strength(r, c) = std::sqrt(gx * gx + gy * gy);
      g.orientation(r, c) = gx != 0 ? std::atan(gy / gx) : (gy != 0 ? std::numbers::pi / 2 : 0.0);
    }
  return g;
}

/// Edge preservation of source s in f, per pixel.
ImageArray edge_preservation(const Gradients& s, const Gradients& f) {
  constexpr double gamma_g = 0.9994, kappa_g = -15, sigma_g = 0.5;
  constexpr double gamma_a = 0.9879, kappa_a = -22, sigma_a = 0.8;
  const Index h = s.strength.rows(), w = s.strength.cols();
  ImageArray q(h, w);
  for (Index r = 0; r < h; ++r)
    for (Index c = 0; c < w; ++c) {
      const double gs = s.strength(r, c), gf = f.strength(r, c);
      const double big = std::max(gs, gf);
      const double strength = big > 0 ? std::min(gs, gf) / big : 0.0;
      // Orientation is modulo pi: 1 when parallel, 0 when perpendicular.
      const double orient =
          std::abs(std::abs(s.orientation(r, c) - f.orientation(r, c)) - std::numbers::pi / 2) /
          (std::numbers::pi / 2);
      const double qg = gamma_g / (1 + std::exp(kappa_g * (strength - sigma_g)));
      const double qa = gamma_a / (1 + std::exp(kappa_a * (orient - sigma_a)));
      q(r, c) = qg * qa;
    }
  return q;
}

}  // namespace

double entropy(const GrayImage& img) {
  Eigen::ArrayXd counts = Eigen::ArrayXd::Zero(kLevels);
  const LevelArray lv = img.levels();
  for (Index k = 0; k < lv.size(); ++k) counts[lv.data()[k]] += 1;
  return entropy_of_counts(counts, double(lv.size()));
}

double mutual_information_pair(const GrayImage& a, const GrayImage& b) {
  require_same_size(a, b, "mutual_information");
  const LevelArray la = a.levels(), lb = b.levels();
  Eigen::ArrayXXd joint = Eigen::ArrayXXd::Zero(kLevels, kLevels);
  for (Index k = 0; k < la.size(); ++k) joint(la.data()[k], lb.data()[k]) += 1;
  const double total = double(la.size());
  joint /= total;
  const Eigen::ArrayXd pa = joint.rowwise().sum(), pb = joint.colwise().sum().transpose();
  double mi = 0;
  for (int x = 0; x < kLevels; ++x)
    for (int y = 0; y < kLevels; ++y) {
      const double p = joint(x, y);
      if (p > 0) mi += p * std::log2(p / (pa[x] * pb[y]));
    }
  return std::max(mi, 0.0);
}

double mutual_information(const GrayImage& f, const GrayImage& v, const GrayImage& i) {
  return mutual_information_pair(f, v) + mutual_information_pair(f, i);
}

double ssim_pair(const GrayImage& x, const GrayImage& y) {
  require_same_size(x, y, "ssim");
  constexpr int kWindow = 11;
  if (x.height() < kWindow || x.width() < kWindow)
    throw InputError("ssim: images must be at least 11x11");
  constexpr double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  const Eigen::ArrayXd g = normalized_gaussian(kWindow, 1.5);
  const ImageArray& a = x.pixels();
  const ImageArray& b = y.pixels();
  const ImageArray mu_a = filter_valid(a, g), mu_b = filter_valid(b, g);
  const ImageArray var_a = filter_valid(a * a, g) - mu_a * mu_a;
  const ImageArray var_b = filter_valid(b * b, g) - mu_b * mu_b;
  const ImageArray cov = filter_valid(a * b, g) - mu_a * mu_b;
  const ImageArray map = ((2 * mu_a * mu_b + c1) * (2 * cov + c2)) /
                         ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2));
  return map.mean();
}

double ssim_fusion(const GrayImage& f, const GrayImage& v, const GrayImage& i) {
  return (ssim_pair(f, v) + ssim_pair(f, i)) / 2;
}

Index vif_min_extent() {
  // Extent at scale s is ceil(n / 2^(s-1)); it must cover that scale's window.
  for (Index n = 1;; ++n) {
    bool ok = true;
    Index e = n;
    for (int s = 1; s <= kVifScales; ++s, e = (e + 1) / 2) ok = ok && e >= vif_window(s);
    if (ok) return n;
  }
}

double vif_pair(const GrayImage& reference, const GrayImage& distorted) {
  require_same_size(reference, distorted, "vif");
  const Index min_extent = vif_min_extent();
  if (reference.height() < min_extent || reference.width() < min_extent)
    throw InputError("vif: images must be at least " + std::to_string(min_extent) + "x" +
                     std::to_string(min_extent));
  constexpr double sigma_n_sq = 2.0;
  constexpr double tiny = 1e-10;
  ImageArray ref = reference.pixels() * 255.0;
  ImageArray dist = distorted.pixels() * 255.0;
  double num = 0, den = 0;
  for (int s = 1; s <= kVifScales; ++s) {
    const int n = vif_window(s);
    const Eigen::ArrayXd g = normalized_gaussian(n, n / 5.0);
    if (s > 1) {
      ref = decimate(filter_same_symmetric(ref, g));
      dist = decimate(filter_same_symmetric(dist, g));
    }
    const ImageArray mu1 = filter_same_symmetric(ref, g), mu2 = filter_same_symmetric(dist, g);
    ImageArray s1 = (filter_same_symmetric(ref * ref, g) - mu1 * mu1).max(0.0);
    const ImageArray s2 = (filter_same_symmetric(dist * dist, g) - mu2 * mu2).max(0.0);
    const ImageArray s12 = filter_same_symmetric(ref * dist, g) - mu1 * mu2;
    for (Index k = 0; k < s1.size(); ++k) {
      double var1 = s1.data()[k];
      const double var2 = s2.data()[k], cov = s12.data()[k];
      double gain = cov / (var1 + tiny);
      double sv_sq = var2 - gain * cov;
      if (var1 < tiny) {
        gain = 0;
        sv_sq = var2;
        var1 = 0;
      }
      if (var2 < tiny) {
        gain = 0;
        sv_sq = 0;
      }
      if (gain < 0) {
        sv_sq = var2;
        gain = 0;
      }
      sv_sq = std::max(sv_sq, tiny);
      num += std::log10(1 + gain * gain * var1 / (sv_sq + sigma_n_sq));
      den += std::log10(1 + var1 / sigma_n_sq);
    }
  }
  return den > 0 ? num / den : 0.0;
}

double vif_fusion(const GrayImage& f, const GrayImage& v, const GrayImage& i) {
  return vif_pair(v, f) + vif_pair(i, f);
}

double qabf(const GrayImage& v, const GrayImage& i, const GrayImage& f) {
  require_same_size(v, f, "qabf");
  require_same_size(i, f, "qabf");
  if (f.height() < 3 || f.width() < 3) throw InputError("qabf: images must be at least 3x3");
  const Gradients ga = sobel(v), gb = sobel(i), gf = sobel(f);
  const ImageArray qa = edge_preservation(ga, gf), qb = edge_preservation(gb, gf);
  const double weight = (ga.strength + gb.strength).sum();
  if (weight <= 0) return 0.0;
  return (qa * ga.strength + qb * gb.strength).sum() / weight;
}

MetricRow evaluate(const GrayImage& f, const GrayImage& v, const GrayImage& i, const std::string& image_id) {
  MetricRow row;
  row.image_id = image_id;
  auto& b = row.breakdown;
  b.vif_vf = vif_pair(v, f);
  b.vif_if = vif_pair(i, f);
  b.ssim_fv = ssim_pair(f, v);
  b.ssim_fi = ssim_pair(f, i);
  b.mi_fv = mutual_information_pair(f, v);
  b.mi_fi = mutual_information_pair(f, i);
  row.vif = b.vif_vf + b.vif_if;
  row.ssim = (b.ssim_fv + b.ssim_fi) / 2;
  row.mi = b.mi_fv + b.mi_fi;
  row.qabf = qabf(v, i, f);
  row.en = entropy(f);
  return row;
}

MetricRow aggregate(const std::vector<MetricRow>& rows) {
  if (rows.empty()) throw UsageError("aggregate: no metric rows");
  MetricRow avg;
  avg.image_id = "Average";
  for (const auto& r : rows) {
    avg.vif += r.vif;
    avg.qabf += r.qabf;
    avg.ssim += r.ssim;
    avg.mi += r.mi;
    avg.en += r.en;
    avg.breakdown.vif_vf += r.breakdown.vif_vf;
    avg.breakdown.vif_if += r.breakdown.vif_if;
    avg.breakdown.ssim_fv += r.breakdown.ssim_fv;
    avg.breakdown.ssim_fi += r.breakdown.ssim_fi;
    avg.breakdown.mi_fv += r.breakdown.mi_fv;
    avg.breakdown.mi_fi += r.breakdown.mi_fi;
  }
  const double n = double(rows.size());
  avg.vif /= n;
  avg.qabf /= n;
  avg.ssim /= n;
  avg.mi /= n;
  avg.en /= n;
  avg.breakdown.vif_vf /= n;
  avg.breakdown.vif_if /= n;
  avg.breakdown.ssim_fv /= n;
  avg.breakdown.ssim_fi /= n;
  avg.breakdown.mi_fv /= n;
  avg.breakdown.mi_fi /= n;
  return avg;
}

MetricReport make_report(std::vector<MetricRow> rows) {
  MetricReport r;
  r.average = aggregate(rows);
  r.rows = std::move(rows);
  return r;
}

}  // namespace fforge
