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

#include "bcond/image.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "bcond/error.hpp"

namespace bcond {

GrayImage::GrayImage(int width, int height, double fill)
    : GrayImage(width, height,
                std::vector<double>(width > 0 && height > 0 ? static_cast<std::size_t>(width) * height : 0,
                                    fill)) {}

GrayImage::GrayImage(int width, int height, std::vector<double> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
  if (width < 1 || height < 1) {
    throw SizeError("imaging", "image dimensions must be positive, got " + std::to_string(width) +
                                   "x" + std::to_string(height));
  }
  if (pixels_.size() != static_cast<std::size_t>(width) * height) {
    throw SizeError("imaging", "pixel buffer does not match image dimensions");
  }
  for (const double v : pixels_) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw InvalidArgument("imaging", "luminance outside [0,1]");
    }
  }
}

GrayImage resize_bilinear(const GrayImage& image, int width, int height) {
  if (width < 1 || height < 1) throw SizeError("imaging", "resize target must be positive");
  if (width == image.width() && height == image.height()) return image;
  const double sx = static_cast<double>(image.width()) / width;
  const double sy = static_cast<double>(image.height()) / height;
  std::vector<double> out(static_cast<std::size_t>(width) * height);
  for (int y = 0; y < height; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, image.height() - 1.0);
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, image.height() - 1);
    const double wy = fy - y0;
    for (int x = 0; x < width; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, image.width() - 1.0);
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, image.width() - 1);
      const double wx = fx - x0;
      const double top = (1 - wx) * image(x0, y0) + wx * image(x1, y0);
      const double bottom = (1 - wx) * image(x0, y1) + wx * image(x1, y1);
      out[static_cast<std::size_t>(y) * width + x] = std::clamp((1 - wy) * top + wy * bottom, 0.0, 1.0);
    }
  }
  return GrayImage(width, height, std::move(out));
}

GrayImage limit_long_side(const GrayImage& image, int max_side) {
  const int long_side = std::max(image.width(), image.height());
  if (long_side <= max_side) return image;
  const double scale = static_cast<double>(max_side) / long_side;
  const int w = std::max(1, static_cast<int>(std::lround(image.width() * scale)));
  const int h = std::max(1, static_cast<int>(std::lround(image.height() * scale)));
  return resize_bilinear(image, w, h);
}

GradientField compute_gradients(const GrayImage& image) {
  const int w = image.width();
  const int h = image.height();
  if (w < 3 || h < 3) {
    throw SizeError("imaging", "gradients need at least 3x3 pixels, got " + std::to_string(w) + "x" +
                                   std::to_string(h));
  }
  GradientField field{w, h, std::vector<double>(static_cast<std::size_t>(w) * h),
                      std::vector<double>(static_cast<std::size_t>(w) * h)};
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double dx;
      if (x == 0) {
        dx = image(1, y) - image(0, y);
      } else if (x == w - 1) {
        dx = image(w - 1, y) - image(w - 2, y);
      } else {
        dx = (image(x + 1, y) - image(x - 1, y)) / 2.0;
      }
      double dy;
      if (y == 0) {
        dy = image(x, 1) - image(x, 0);
      } else if (y == h - 1) {
        dy = image(x, h - 1) - image(x, h - 2);
      } else {
        dy = (image(x, y + 1) - image(x, y - 1)) / 2.0;
      }
      double theta = std::atan2(dy, dx);
      if (theta < 0.0) theta += kTwoPi;
      if (theta >= kTwoPi) theta = 0.0;
      const auto i = static_cast<std::size_t>(y) * w + x;
      field.magnitude[i] = std::sqrt(dx * dx + dy * dy);
      field.orientation[i] = theta;
    }
  }
  return field;
}

namespace {

int grid_step(int scale, double stride_fraction) {
  return std::max(1, static_cast<int>(std::lround(scale * stride_fraction)));
}

}  // namespace

std::size_t grid_count(int width, int height, int scale, double stride_fraction) {
  if (scale < 1 || scale > width || scale > height) return 0;
  const int step = grid_step(scale, stride_fraction);
  return static_cast<std::size_t>((width - scale) / step + 1) *
         static_cast<std::size_t>((height - scale) / step + 1);
}

std::vector<PatchSpec> dense_grid(int width, int height, std::span<const int> scales,
                                  double stride_fraction, const std::string& image_id) {
  if (!(stride_fraction > 0.0 && stride_fraction <= 1.0)) {
    throw InvalidArgument("imaging", "stride fraction must lie in (0, 1]");
  }
  std::vector<PatchSpec> specs;
  for (const int scale : scales) {
    if (scale < 1) throw InvalidArgument("imaging", "patch scales must be positive");
    if (scale > width || scale > height) continue;
    const int step = grid_step(scale, stride_fraction);
    for (int y = 0; y + scale <= height; y += step) {
      for (int x = 0; x + scale <= width; x += step) {
        specs.push_back({image_id, x, y, scale});
      }
    }
  }
  return specs;
}

GrayImage crop(const GrayImage& image, const PatchSpec& spec) {
  if (spec.side < 1 || spec.x < 0 || spec.y < 0 || spec.x + spec.side > image.width() ||
      spec.y + spec.side > image.height()) {
    throw BoundsError("imaging", "patch (" + std::to_string(spec.x) + "," + std::to_string(spec.y) +
                                     "," + std::to_string(spec.side) + ") exceeds " +
                                     std::to_string(image.width()) + "x" +
                                     std::to_string(image.height()) + " image");
  }
  std::vector<double> out(static_cast<std::size_t>(spec.side) * spec.side);
  for (int y = 0; y < spec.side; ++y) {
    const auto row = image.pixels().subspan(
        static_cast<std::size_t>(spec.y + y) * image.width() + spec.x, spec.side);
    std::copy(row.begin(), row.end(), out.begin() + static_cast<std::ptrdiff_t>(y) * spec.side);
  }
  return GrayImage(spec.side, spec.side, std::move(out));
}

}  // namespace bcond
