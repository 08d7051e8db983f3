/*
 * Copyright 2026 The bcond Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace bcond {

/// Row-major luminance image with values in [0, 1].
class GrayImage {
 public:
  GrayImage() = default;
  GrayImage(int width, int height, double fill = 0.0);
  /// Throws SizeError on bad dimensions, InvalidArgument on values outside [0,1].
  GrayImage(int width, int height, std::vector<double> pixels);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  bool empty() const noexcept { return pixels_.empty(); }

  double operator()(int x, int y) const noexcept {
    return pixels_[static_cast<std::size_t>(y) * width_ + x];
  }
  double& operator()(int x, int y) noexcept {
    return pixels_[static_cast<std::size_t>(y) * width_ + x];
  }

  std::span<const double> pixels() const noexcept { return pixels_; }
  std::span<double> pixels() noexcept { return pixels_; }

  bool operator==(const GrayImage&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<double> pixels_;
};

/// Per-pixel gradient magnitude and orientation in [0, 2*pi).
struct GradientField {
  int width = 0;
  int height = 0;
  std::vector<double> magnitude;
  std::vector<double> orientation;

  double magnitude_at(int x, int y) const { return magnitude[static_cast<std::size_t>(y) * width + x]; }
  double orientation_at(int x, int y) const { return orientation[static_cast<std::size_t>(y) * width + x]; }
};

/// Square patch located in a named image.
struct PatchSpec {
  std::string image_id;
  int x = 0;
  int y = 0;
  int side = 0;

  bool operator==(const PatchSpec&) const = default;
  auto operator<=>(const PatchSpec&) const = default;
};

// --- I/O -------------------------------------------------------------------

/// Decodes a PNG or baseline JPEG (detected from the file signature) and
/// converts it to luminance 0.299 R + 0.587 G + 0.114 B. Throws IoError.
GrayImage load_gray(const std::filesystem::path& path);

/// Writes an 8-bit grayscale PNG.
void save_png(const std::filesystem::path& path, const GrayImage& image);

/// Writes an 8-bit RGB PNG from interleaved samples (3 per pixel).
void save_png_rgb(const std::filesystem::path& path, int width, int height,
                  std::span<const std::uint8_t> rgb);

// --- geometry --------------------------------------------------------------

GrayImage resize_bilinear(const GrayImage& image, int width, int height);

/// Downscales (bilinear, aspect preserved) so that the long side is at most
/// max_side. Returns the input unchanged when it already fits.
GrayImage limit_long_side(const GrayImage& image, int max_side);

/// Central differences in the interior, one-sided at the border.
/// Requires at least 3x3 pixels (SizeError otherwise).
GradientField compute_gradients(const GrayImage& image);

/// Regular multi-scale grid. For each scale s (in the given order) the step
/// is round(s * stride_fraction) and positions run row-major over patches
/// that fit entirely inside the image. Scales larger than the image are
/// skipped.
std::vector<PatchSpec> dense_grid(int width, int height, std::span<const int> scales,
                                  double stride_fraction, const std::string& image_id = {});

/// Number of patches dense_grid emits for one scale.
std::size_t grid_count(int width, int height, int scale, double stride_fraction);

/// Copies the region of spec. Throws BoundsError when it is not contained.
GrayImage crop(const GrayImage& image, const PatchSpec& spec);

}  // namespace bcond
