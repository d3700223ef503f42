#include <array>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "fforge/metrics.hpp"

namespace fforge {
namespace {

std::string fixed4(double v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(4) << v;
  return os.str();
}

std::string full(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write report file " + path.string());
  out << text;
}

}  // namespace

std::string report_csv(const MetricReport& report) {
  std::ostringstream os;
  os << "image_id,VIF,QABF,SSIM,MI,EN\n";
  auto line = [&](const MetricRow& r) {
    os << r.image_id << ',' << full(r.vif) << ',' << full(r.qabf) << ',' << full(r.ssim) << ','
       << full(r.mi) << ',' << full(r.en) << '\n';
  };
  for (const auto& r : report.rows) line(r);
  line(report.average);
  return os.str();
}

std::string report_breakdown_csv(const MetricReport& report) {
  std::ostringstream os;
  os << "image_id,VIF_V_to_F,VIF_I_to_F,SSIM_F_V,SSIM_F_I,MI_F_V,MI_F_I\n";
  auto line = [&](const MetricRow& r) {
    const auto& b = r.breakdown;
    os << r.image_id << ',' << full(b.vif_vf) << ',' << full(b.vif_if) << ',' << full(b.ssim_fv) << ','
       << full(b.ssim_fi) << ',' << full(b.mi_fv) << ',' << full(b.mi_fi) << '\n';
  };
  for (const auto& r : report.rows) line(r);
  line(report.average);
  return os.str();
}

std::string report_markdown(const MetricReport& report) {
  std::vector<std::array<std::string, 6>> cells;
  cells.push_back({"Image", "VIF", "Q^AB/F", "SSIM", "MI", "EN"});
  auto add = [&](const MetricRow& r, bool bold) {
    auto f = [&](double v) { return bold ? "**" + fixed4(v) + "**" : fixed4(v); };
    cells.push_back({r.image_id, f(r.vif), f(r.qabf), f(r.ssim), f(r.mi), f(r.en)});
  };
  for (const auto& r : report.rows) add(r, false);
  add(report.average, true);

  std::array<std::size_t, 6> width{};
  for (const auto& row : cells)
    for (std::size_t c = 0; c < 6; ++c) width[c] = std::max(width[c], row[c].size());

  std::ostringstream os;
  auto emit = [&](const std::array<std::string, 6>& row) {
    os << '|';
    for (std::size_t c = 0; c < 6; ++c) {
      if (c == 0)
        os << ' ' << std::left << std::setw(int(width[c])) << row[c] << " |";
      else
        os << ' ' << std::right << std::setw(int(width[c])) << row[c] << " |";
    }
    os << '\n';
  };
  emit(cells[0]);
  os << '|';
  for (std::size_t c = 0; c < 6; ++c)
    os << (c == 0 ? ":" : "") << std::string(width[c] + 1, '-') << (c == 0 ? "" : ":") << '|';
  os << '\n';
  for (std::size_t k = 1; k < cells.size(); ++k) emit(cells[k]);
  os << "\nConventions: VIF and MI sum the V->F and I->F terms; SSIM averages SSIM(F,V) and SSIM(F,I);"
        " VIF is the four-scale pixel-domain variant; EN and MI use 256-bin histograms (log base 2);"
        " Q^AB/F uses Sobel gradients with replicated borders.\n";
  return os.str();
}

void write_report(const MetricReport& report, const std::filesystem::path& prefix) {
  if (prefix.has_parent_path()) std::filesystem::create_directories(prefix.parent_path());
  write_file(prefix.string() + ".csv", report_csv(report));
  write_file(prefix.string() + ".md", report_markdown(report));
  write_file(prefix.string() + "_breakdown.csv", report_breakdown_csv(report));
}

}  // namespace fforge
