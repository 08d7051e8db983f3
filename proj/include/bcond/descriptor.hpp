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

#include <array>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "bcond/image.hpp"

namespace bcond {

inline constexpr std::size_t kSpatialCells = 4;
inline constexpr std::size_t kOrientationBins = 8;
inline constexpr std::size_t kDescriptorSize = kSpatialCells * kSpatialCells * kOrientationBins;

/// Gradient-orientation histogram over a 4x4 cell grid with 8 signed
/// orientation bins. `values` holds the L2-normalized histogram (all zeros
/// when the patch has no gradient); `raw_norm` is the norm of the histogram
/// before normalization and serves as the contrast indicator.
///
/// Layout: values[(cell_row * 4 + cell_col) * 8 + bin].
struct Descriptor {
  std::array<double, kDescriptorSize> values{};
  double raw_norm = 0.0;

  /// Normalizes an accumulated histogram, keeping its norm in raw_norm.
  static Descriptor from_histogram(const std::array<double, kDescriptorSize>& histogram);
};

/// The unit of all downstream processing: a located patch and its descriptor.
struct PatchRecord {
  PatchSpec spec;
  Descriptor descriptor;
  std::optional<GrayImage> pixels;
};

/// Hard-assignment histogram of the patch region. Cells are side/4 pixels
/// wide; remainder pixels belong to the last cell row/column. Each pixel adds
/// its magnitude to bin floor(orientation / (2*pi/8)).
///
/// Throws SizeError when side < 4 and BoundsError when the patch leaves the field.
Descriptor describe(const GradientField& gradients, const PatchSpec& spec);

inline double raw_norm(const Descriptor& d) { return d.raw_norm; }

/// Describes every spec against one gradient field.
std::vector<PatchRecord> describe_all(const GradientField& gradients, std::span<const PatchSpec> specs);

/// Descriptor of a whole standalone patch image (spec covers the full image).
Descriptor describe_image(const GrayImage& patch);

/// CSV with header "image_id,x,y,side,raw_norm,v0..v127". Lines starting with
/// '#' are comments and skipped by the reader.
void write_descriptor_csv(std::ostream& out, std::span<const PatchRecord> patches);
std::vector<PatchRecord> read_descriptor_csv(std::istream& in);

}  // namespace bcond
