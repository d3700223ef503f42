#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fforge/image.hpp"

namespace fforge {

/// Registered visible/infrared pair; both images share dimensions.
struct ImagePair {
  GrayImage visible;
  GrayImage infrared;
  std::string id;
};

ImagePair make_image_pair(GrayImage visible, GrayImage infrared, std::string id);

/// Reads an 8-bit grayscale PNG or PGM (P2/P5, maxval 255); values are level / 255.
GrayImage load_grayscale(const std::filesystem::path& path);

/// Writes 8-bit levels (nearest) as PNG or binary PGM, chosen by extension.
void save_grayscale(const GrayImage& image, const std::filesystem::path& path);

struct ManifestEntry {
  std::string id;
  std::string visible;   // relative to the manifest root, '/' separated
  std::string infrared;
  std::string split;     // "train" or "eval"

  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

struct DatasetManifest {
  std::filesystem::path root;
  std::vector<ManifestEntry> entries;

  std::vector<ManifestEntry> split(const std::string& tag) const;
};

struct ManifestWarning {
  std::string id;
  std::string message;
};

struct ManifestBuild {
  DatasetManifest manifest;
  std::vector<ManifestWarning> warnings;
};

/// Scans root/<id>/{vis,ir}.{png,pgm}. Ids are sorted; a directory missing
/// either half is skipped with a warning. Ids listed one per line in
/// root/eval_ids.txt are tagged "eval", all others "train".
ManifestBuild build_manifest(const std::filesystem::path& root);

/// One line per entry: id<TAB>vis_path<TAB>ir_path<TAB>split.
std::string manifest_text(const DatasetManifest& manifest);
DatasetManifest parse_manifest(const std::string& text, const std::filesystem::path& root);

ImagePair load_pair(const DatasetManifest& manifest, const ManifestEntry& entry);

struct PatchSpec {
  Index size = 64;
  Index stride = 32;
  std::uint64_t seed = 0;

  void validate() const {
    if (size < 1 || stride < 1) throw ConfigError("patch size and stride must be positive");
  }
};

struct PatchPair {
  GrayImage visible;
  GrayImage infrared;
  std::string id;
  Index row = 0, col = 0;
};

GrayImage crop(const GrayImage& image, Index row, Index col, Index height, Index width);

/// Co-located crops on the stride grid (offsets 0, stride, ... up to extent - size),
/// returned in a seeded shuffled order.
std::vector<PatchPair> sample_patches(const ImagePair& pair, const PatchSpec& spec);

/// Deterministic stand-in pair of size×size: the visible image is textured
/// background plus outlined shapes, the infrared image renders the same
/// shapes as smooth hot blobs over a cool, weakly textured background.
ImagePair synthesize_pair(std::uint64_t seed, Index size);

/// Extends to height×width by mirroring across the bottom/right borders.
GrayImage reflect_pad(const GrayImage& image, Index height, Index width);

}  // namespace fforge
