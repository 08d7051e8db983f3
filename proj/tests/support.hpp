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

// Helpers shared by the unit, property and acceptance tests.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <string>
#include <system_error>
#include <unistd.h>
#include <vector>

#include "bcond/classifier.hpp"
#include "bcond/image.hpp"
#include "bcond/rng.hpp"

namespace bcond::testing {

/// Directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("bcond_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline GrayImage random_image(int width, int height, Rng& rng) {
  std::vector<double> px(static_cast<std::size_t>(width) * height);
  for (auto& p : px) p = rng.uniform();
  return GrayImage(width, height, std::move(px));
}

/// Smooth blobs plus noise: enough structure for clustering to matter.
inline GrayImage textured_image(int width, int height, Rng& rng) {
  GrayImage img(width, height, 0.5);
  const int blobs = 3 + static_cast<int>(rng.below(6));
  for (int b = 0; b < blobs; ++b) {
    const double cx = rng.uniform(0, width);
    const double cy = rng.uniform(0, height);
    const double r = rng.uniform(8, 40);
    const double a = rng.uniform(-0.4, 0.4);
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        const double d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
        img(x, y) += a * std::exp(-d2 / (2 * r * r));
      }
    }
  }
  const double noise = rng.uniform(0.0, 0.1);
  for (auto& p : img.pixels()) p = std::clamp(p + rng.normal(0.0, noise), 0.0, 1.0);
  return img;
}

/// Three well-separated unit-norm descriptor blobs, one per class, in
/// class-interleaved order.
inline std::vector<LabeledPatch> blob_patches(std::size_t per_class, std::uint64_t seed, double noise = 0.05) {
  Rng rng(seed);
  std::vector<LabeledPatch> out;
  for (std::size_t i = 0; i < per_class; ++i) {
    for (const auto cls : kAllClasses) {
      PatchRecord p;
      p.spec = PatchSpec{"blob", static_cast<int>(out.size()), 0, 16};
      std::array<double, kDescriptorSize> h{};
      for (auto& v : h) v = std::abs(rng.normal(0.0, noise));
      for (std::size_t j = 0; j < 6; ++j) h[index(cls) * 40 + j] += 0.4;
      p.descriptor = Descriptor::from_histogram(h);
      out.push_back({std::move(p), cls});
    }
  }
  return out;
}

}  // namespace bcond::testing
