#include "fforge/data.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

namespace fforge {
namespace fs = std::filesystem;

ImagePair make_image_pair(GrayImage visible, GrayImage infrared, std::string id) {
  if (visible.height() != infrared.height() || visible.width() != infrared.width())
    throw InputError("pair '" + id + "': visible and infrared images differ in size");
  return {std::move(visible), std::move(infrared), std::move(id)};
}

// ---------------------------------------------------------------------------
// Image files
// ---------------------------------------------------------------------------

namespace {

std::string lower_extension(const fs::path& p) {
  std::string e = p.extension().string();
  std::transform(e.begin(), e.end(), e.begin(), [](unsigned char c) { return char(std::tolower(c)); });
  return e;
}

GrayImage load_png(const fs::path& path) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.string().c_str()))
    throw DecodeError(path.string() + ": " + img.message);
  if (img.format != PNG_FORMAT_GRAY || (img.flags & PNG_IMAGE_FLAG_16BIT_sRGB)) {
    png_image_free(&img);
    throw DecodeError(path.string() + ": not an 8-bit grayscale PNG");
  }
  std::vector<png_byte> buf(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, buf.data(), 0, nullptr))
    throw DecodeError(path.string() + ": " + img.message);
  LevelArray lv(img.height, img.width);
  for (Index k = 0; k < lv.size(); ++k) lv.data()[k] = buf[k];
  return GrayImage::from_levels(lv);
}

void save_png(const LevelArray& lv, const fs::path& path) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(lv.cols());
  img.height = static_cast<png_uint_32>(lv.rows());
  img.format = PNG_FORMAT_GRAY;
  std::vector<png_byte> buf(lv.size());
  for (Index k = 0; k < lv.size(); ++k) buf[k] = static_cast<png_byte>(lv.data()[k]);
  if (!png_image_write_to_file(&img, path.string().c_str(), 0, buf.data(), 0, nullptr))
    throw InputError(path.string() + ": " + img.message);
}

// Reads the next whitespace-delimited header token, skipping '#' comments.
std::string pnm_token(std::istream& in) {
  std::string tok;
  int ch;
  while ((ch = in.get()) != EOF) {
    if (ch == '#') {
      while ((ch = in.get()) != EOF && ch != '\n') {
      }
      continue;
    }
    if (std::isspace(ch)) {
      if (!tok.empty()) return tok;
      continue;
    }
    tok.push_back(char(ch));
  }
  return tok;
}

long pnm_number(std::istream& in, const fs::path& path) {
  const std::string t = pnm_token(in);
  if (t.empty() || !std::all_of(t.begin(), t.end(), [](unsigned char c) { return std::isdigit(c); }))
    throw DecodeError(path.string() + ": malformed PGM header");
  return std::stol(t);
}

GrayImage load_pgm(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DecodeError(path.string() + ": cannot open");
  const std::string magic = pnm_token(in);
  if (magic != "P5" && magic != "P2") throw DecodeError(path.string() + ": not a grayscale PGM");
  const long w = pnm_number(in, path), h = pnm_number(in, path), maxval = pnm_number(in, path);
  if (w < 1 || h < 1) throw DecodeError(path.string() + ": empty PGM");
  if (maxval != 255) throw DecodeError(path.string() + ": unsupported PGM depth (maxval " + std::to_string(maxval) + ")");
  LevelArray lv(h, w);
  if (magic == "P5") {
    std::vector<unsigned char> buf(std::size_t(w * h));
    in.read(reinterpret_cast<char*>(buf.data()), std::streamsize(buf.size()));
    if (std::size_t(in.gcount()) != buf.size()) throw DecodeError(path.string() + ": truncated PGM");
    for (Index k = 0; k < lv.size(); ++k) lv.data()[k] = buf[k];
  } else {
    for (Index k = 0; k < lv.size(); ++k) {
      const long v = pnm_number(in, path);
      if (v > 255) throw DecodeError(path.string() + ": PGM sample exceeds maxval");
      lv.data()[k] = int(v);
    }
  }
  return GrayImage::from_levels(lv);
}

void save_pgm(const LevelArray& lv, const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError(path.string() + ": cannot open for writing");
  out << "P5\n" << lv.cols() << ' ' << lv.rows() << "\n255\n";
  for (Index k = 0; k < lv.size(); ++k) out.put(static_cast<char>(lv.data()[k]));
  if (!out) throw InputError(path.string() + ": write failed");
}

}  // namespace

GrayImage load_grayscale(const fs::path& path) {
  if (!fs::is_regular_file(path)) throw DecodeError(path.string() + ": no such file");
  const std::string ext = lower_extension(path);
  if (ext == ".png") return load_png(path);
  if (ext == ".pgm") return load_pgm(path);
  throw DecodeError(path.string() + ": unsupported image format (expected .png or .pgm)");
}

void save_grayscale(const GrayImage& image, const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const std::string ext = lower_extension(path);
  if (ext == ".png")
    save_png(image.levels(), path);
  else if (ext == ".pgm")
    save_pgm(image.levels(), path);
  else
    throw InputError(path.string() + ": unsupported image format (expected .png or .pgm)");
}

// ---------------------------------------------------------------------------
// Manifest
// ---------------------------------------------------------------------------

std::vector<ManifestEntry> DatasetManifest::split(const std::string& tag) const {
  std::vector<ManifestEntry> out;
  for (const auto& e : entries)
    if (e.split == tag) out.push_back(e);
  return out;
}

namespace {

std::string find_half(const fs::path& dir, const std::string& stem) {
  for (const char* ext : {".png", ".pgm"})
    if (fs::is_regular_file(dir / (stem + ext))) return stem + ext;
  return {};
}

}  // namespace

ManifestBuild build_manifest(const fs::path& root) {
  if (!fs::is_directory(root)) throw DatasetError(root.string() + ": dataset root is not a directory");
  std::set<std::string> eval_ids;
  if (std::ifstream ev(root / "eval_ids.txt"); ev) {
    std::string line;
    while (std::getline(ev, line)) {
      while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back()))) line.pop_back();
      if (!line.empty()) eval_ids.insert(line);
    }
  }

  std::vector<std::string> ids;
  for (const auto& d : fs::directory_iterator(root))
    if (d.is_directory()) ids.push_back(d.path().filename().string());
  std::sort(ids.begin(), ids.end());

  ManifestBuild out;
  out.manifest.root = root;
  for (const auto& id : ids) {
    const std::string vis = find_half(root / id, "vis");
    const std::string ir = find_half(root / id, "ir");
    if (vis.empty() || ir.empty()) {
      if (!vis.empty() || !ir.empty())
        out.warnings.push_back({id, vis.empty() ? "missing visible image" : "missing infrared image"});
      else
        out.warnings.push_back({id, "no vis/ir images"});
      continue;
    }
    out.manifest.entries.push_back({id, id + "/" + vis, id + "/" + ir, eval_ids.count(id) ? "eval" : "train"});
  }
  if (out.manifest.entries.empty()) throw DatasetError(root.string() + ": no complete visible/infrared pairs");
  return out;
}

std::string manifest_text(const DatasetManifest& manifest) {
  std::string s;
  for (const auto& e : manifest.entries) s += e.id + '\t' + e.visible + '\t' + e.infrared + '\t' + e.split + '\n';
  return s;
}

DatasetManifest parse_manifest(const std::string& text, const fs::path& root) {
  DatasetManifest m;
  m.root = root;
  std::istringstream in(text);
  std::string line;
  std::set<std::string> seen;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::istringstream ls(line);
    std::string field;
    while (std::getline(ls, field, '\t')) f.push_back(field);
    if (f.size() != 4) throw DatasetError("manifest line must have 4 tab-separated fields: " + line);
    if (!seen.insert(f[0]).second) throw DatasetError("duplicate manifest id '" + f[0] + "'");
    m.entries.push_back({f[0], f[1], f[2], f[3]});
  }
  if (m.entries.empty()) throw DatasetError("empty manifest");
  return m;
}

ImagePair load_pair(const DatasetManifest& manifest, const ManifestEntry& entry) {
  return make_image_pair(load_grayscale(manifest.root / entry.visible),
                         load_grayscale(manifest.root / entry.infrared), entry.id);
}

// ---------------------------------------------------------------------------
// Patches, padding
// ---------------------------------------------------------------------------

GrayImage crop(const GrayImage& image, Index row, Index col, Index height, Index width) {
  if (row < 0 || col < 0 || row + height > image.height() || col + width > image.width())
    throw InputError("crop window exceeds image bounds");
  return GrayImage(image.pixels().block(row, col, height, width));
}

std::vector<PatchPair> sample_patches(const ImagePair& pair, const PatchSpec& spec) {
  spec.validate();
  const Index h = pair.visible.height(), w = pair.visible.width();
  if (spec.size > h || spec.size > w)
    throw InputError("patch size " + std::to_string(spec.size) + " exceeds image '" + pair.id + "' (" +
                     std::to_string(h) + "x" + std::to_string(w) + ")");
  std::vector<PatchPair> out;
  for (Index r = 0; r + spec.size <= h; r += spec.stride)
    for (Index c = 0; c + spec.size <= w; c += spec.stride)
      out.push_back({crop(pair.visible, r, c, spec.size, spec.size),
                     crop(pair.infrared, r, c, spec.size, spec.size), pair.id, r, c});
  std::mt19937_64 rng(spec.seed);
  std::shuffle(out.begin(), out.end(), rng);
  return out;
}

GrayImage reflect_pad(const GrayImage& image, Index height, Index width) {
  const Index h = image.height(), w = image.width();
  if (height < h || width < w) throw InputError("reflect_pad: target smaller than image");
  auto mirror = [](Index i, Index n) {
    const Index m = i % (2 * n);
    return m < n ? m : 2 * n - m - 1;
  };
  ImageArray out(height, width);
  for (Index r = 0; r < height; ++r)
    for (Index c = 0; c < width; ++c) out(r, c) = image(mirror(r, h), mirror(c, w));
  return GrayImage(std::move(out));
}

// ---------------------------------------------------------------------------
// Synthetic pairs
// ---------------------------------------------------------------------------

namespace {

struct Shape2D {
  bool circle;
  double cy, cx, ry, rx;  // center and radii (half-extents for rectangles)
  double shade;           // visible fill
  double heat;            // infrared peak

  // Signed distance-like value: negative inside, positive outside (pixels).
  double distance(double y, double x) const {
    if (circle) {
      const double dy = (y - cy) / ry, dx = (x - cx) / rx;
      return (std::sqrt(dy * dy + dx * dx) - 1.0) * std::min(ry, rx);
    }
    return std::max(std::abs(y - cy) - ry, std::abs(x - cx) - rx);
  }
};

}  // namespace

ImagePair synthesize_pair(std::uint64_t seed, Index size) {
  if (size < 32 || size % 32 != 0) throw InputError("synthesize_pair: size must be a positive multiple of 32");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double n = double(size);

  // Band-limited background: a few random plane waves.
  struct Wave {
    double fy, fx, phase, amp;
  };
  std::vector<Wave> waves;
  for (int k = 0; k < 14; ++k)
    waves.push_back({(u(rng) * 2 - 1) * (2 + 10 * u(rng)), (u(rng) * 2 - 1) * (2 + 10 * u(rng)),
                     2 * std::numbers::pi * u(rng), 0.5 + u(rng)});
  double amp_total = 0;
  for (const auto& w : waves) amp_total += w.amp;

  std::vector<Shape2D> shapes;
  const int count = 3 + int(u(rng) * 4);
  for (int k = 0; k < count; ++k) {
    Shape2D s;
    s.circle = u(rng) < 0.5;
    s.cy = n * (0.15 + 0.7 * u(rng));
    s.cx = n * (0.15 + 0.7 * u(rng));
    s.ry = n * (0.06 + 0.12 * u(rng));
    s.rx = n * (0.06 + 0.12 * u(rng));
    s.shade = 0.2 + 0.6 * u(rng);
    s.heat = 0.65 + 0.3 * u(rng);
    shapes.push_back(s);
  }

  ImageArray vis(size, size), ir(size, size);
  for (Index r = 0; r < size; ++r)
    for (Index c = 0; c < size; ++c) {
      const double y = r / n, x = c / n;
      double bg = 0;
      for (const auto& w : waves) bg += w.amp * std::sin(2 * std::numbers::pi * (w.fy * y + w.fx * x) + w.phase);
      bg /= amp_total;  // roughly in [-1, 1]
      double v = 0.5 + 0.3 * bg;
      double t = 0.12 + 0.03 * bg;
      for (const auto& s : shapes) {
        const double d = s.distance(r + 0.5, c + 0.5);
        if (d <= 0) v = s.shade + 0.08 * bg;
        if (std::abs(d) <= 1.0) v = 0.04;  // outline
        const double falloff = 1.0 / (1.0 + std::exp(d / 2.5));
        t = std::max(t, s.heat * falloff);
      }
      vis(r, c) = std::clamp(v + 0.06 * (u(rng) - 0.5), 0.0, 1.0);  // fine visible grain
      ir(r, c) = std::clamp(t, 0.0, 1.0);
    }
  std::ostringstream id;
  id << "synth_" << std::setw(6) << std::setfill('0') << seed;
  return make_image_pair(GrayImage(std::move(vis)), GrayImage(std::move(ir)), id.str());
}

}  // namespace fforge
