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

#include "bcond/descriptor.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <string>

#include "bcond/error.hpp"
#include "csv.hpp"

namespace bcond {

Descriptor Descriptor::from_histogram(const std::array<double, kDescriptorSize>& histogram) {
  Descriptor d;
  double sum_sq = 0.0;
  for (const double v : histogram) sum_sq += v * v;
  d.raw_norm = std::sqrt(sum_sq);
  if (d.raw_norm > 1e-12) {
    for (std::size_t i = 0; i < kDescriptorSize; ++i) d.values[i] = histogram[i] / d.raw_norm;
  }
  return d;
}

Descriptor describe(const GradientField& gradients, const PatchSpec& spec) {
  if (spec.side < static_cast<int>(kSpatialCells)) {
    throw SizeError("descriptor", "patch side " + std::to_string(spec.side) + " is below 4 pixels");
  }
  if (spec.x < 0 || spec.y < 0 || spec.x + spec.side > gradients.width ||
      spec.y + spec.side > gradients.height) {
    throw BoundsError("descriptor", "patch exceeds gradient field");
  }
  const int cell = spec.side / static_cast<int>(kSpatialCells);
  const int last = static_cast<int>(kSpatialCells) - 1;
  constexpr double kBinWidth = 2.0 * std::numbers::pi / kOrientationBins;

  std::array<double, kDescriptorSize> histogram{};
  for (int dy = 0; dy < spec.side; ++dy) {
    const int row = std::min(dy / cell, last);
    for (int dx = 0; dx < spec.side; ++dx) {
      const int col = std::min(dx / cell, last);
      const double magnitude = gradients.magnitude_at(spec.x + dx, spec.y + dy);
      auto bin = static_cast<std::size_t>(gradients.orientation_at(spec.x + dx, spec.y + dy) / kBinWidth);
      bin = std::min(bin, kOrientationBins - 1);
      histogram[(static_cast<std::size_t>(row) * kSpatialCells + col) * kOrientationBins + bin] += magnitude;
    }
  }
  return Descriptor::from_histogram(histogram);
}

std::vector<PatchRecord> describe_all(const GradientField& gradients, std::span<const PatchSpec> specs) {
  std::vector<PatchRecord> out;
  out.reserve(specs.size());
  for (const auto& spec : specs) out.push_back({spec, describe(gradients, spec), std::nullopt});
  return out;
}

Descriptor describe_image(const GrayImage& patch) {
  const int side = std::min(patch.width(), patch.height());
  return describe(compute_gradients(patch), PatchSpec{{}, 0, 0, side});
}

void write_descriptor_csv(std::ostream& out, std::span<const PatchRecord> patches) {
  out << "image_id,x,y,side,raw_norm";
  for (std::size_t i = 0; i < kDescriptorSize; ++i) out << ",v" << i;
  out << '\n';
  for (const auto& p : patches) {
    out << p.spec.image_id << ',' << p.spec.x << ',' << p.spec.y << ',' << p.spec.side << ','
        << csv::format_double(p.descriptor.raw_norm);
    for (const double v : p.descriptor.values) out << ',' << csv::format_double(v);
    out << '\n';
  }
}

std::vector<PatchRecord> read_descriptor_csv(std::istream& in) {
  std::vector<PatchRecord> patches;
  const auto rows = csv::read_rows(in, "descriptor");
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (r == 0 && !row.empty() && row[0] == "image_id") continue;
    if (row.size() != 5 + kDescriptorSize) {
      throw FormatError("descriptor", "descriptor CSV row " + std::to_string(r + 1) + " has " +
                                          std::to_string(row.size()) + " fields, expected " +
                                          std::to_string(5 + kDescriptorSize));
    }
    PatchRecord p;
    p.spec.image_id = row[0];
    p.spec.x = csv::parse_int(row[1], "descriptor");
    p.spec.y = csv::parse_int(row[2], "descriptor");
    p.spec.side = csv::parse_int(row[3], "descriptor");
    p.descriptor.raw_norm = csv::parse_double(row[4], "descriptor");
    for (std::size_t i = 0; i < kDescriptorSize; ++i) {
      p.descriptor.values[i] = csv::parse_double(row[5 + i], "descriptor");
    }
    patches.push_back(std::move(p));
  }
  return patches;
}

}  // namespace bcond
