#pragma once

#include <Eigen/Core>

#include <cmath>
#include <string>

#include "fforge/tensor.hpp"

namespace fforge {

using ImageArray = Eigen::Array<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using LevelArray = Eigen::Array<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Single-channel image with every value in [0, 1].
class GrayImage {
 public:
  GrayImage() = default;

  explicit GrayImage(ImageArray pixels) : pixels_(std::move(pixels)) {
    if (pixels_.size() == 0) throw InputError("image must be non-empty");
    if (!pixels_.allFinite() || (pixels_ < 0.0).any() || (pixels_ > 1.0).any())
      throw InputError("image values must be finite and lie in [0, 1]");
  }

  static GrayImage constant(Index height, Index width, double v) {
    return GrayImage(ImageArray::Constant(height, width, v));
  }

  /// Builds from 8-bit levels, value = level / 255.
  static GrayImage from_levels(const LevelArray& levels) {
    return GrayImage(levels.cast<double>() / 255.0);
  }

  Index height() const { return pixels_.rows(); }
  Index width() const { return pixels_.cols(); }
  const ImageArray& pixels() const { return pixels_; }
  double operator()(Index r, Index c) const { return pixels_(r, c); }

  /// Nearest 8-bit level of each pixel.
  LevelArray levels() const {
    return pixels_.unaryExpr([](double v) { return static_cast<int>(std::lround(v * 255.0)); });
  }

  friend bool operator==(const GrayImage& a, const GrayImage& b) {
    return a.height() == b.height() && a.width() == b.width() && (a.pixels_ == b.pixels_).all();
  }

 private:
  ImageArray pixels_;
};

/// Stacks images into an (N, 1, H, W) tensor.
template <typename Scalar>
Tensor<Scalar> to_tensor(const std::vector<GrayImage>& images) {
  if (images.empty()) throw InputError("to_tensor: no images");
  const Index h = images.front().height(), w = images.front().width();
  Buffer<Scalar> b(Index(images.size()) * h * w);
  for (std::size_t n = 0; n < images.size(); ++n) {
    if (images[n].height() != h || images[n].width() != w)
      throw DimensionError("to_tensor: images differ in size");
    for (Index r = 0; r < h; ++r)
      for (Index c = 0; c < w; ++c) b[(Index(n) * h + r) * w + c] = static_cast<Scalar>(images[n](r, c));
  }
  return Tensor<Scalar>({Index(images.size()), 1, h, w}, std::move(b));
}

template <typename Scalar>
Tensor<Scalar> to_tensor(const GrayImage& image) {
  return to_tensor<Scalar>(std::vector<GrayImage>{image});
}

/// Batch item `n` of a single-channel tensor as an image.
template <typename Scalar>
GrayImage to_image(const Tensor<Scalar>& t, Index n = 0) {
  if (t.channels() != 1) throw DimensionError("to_image: tensor must be single-channel");
  const Index h = t.height(), w = t.width();
  ImageArray a(h, w);
  for (Index r = 0; r < h; ++r)
    for (Index c = 0; c < w; ++c) a(r, c) = static_cast<double>(t(n, 0, r, c));
  return GrayImage(std::move(a));
}

}  // namespace fforge
