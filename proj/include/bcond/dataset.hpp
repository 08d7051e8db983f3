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
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bcond/types.hpp"

namespace bcond {

enum class Split { training, validation, test };

std::string_view to_string(Split split);
std::optional<Split> parse_split(std::string_view text);

/// One house from a dataset manifest.
struct BuildingRecord {
  std::string house_id;
  /// Paths as written in the manifest (relative ones resolve against the
  /// manifest directory).
  std::vector<std::string> image_paths;
  ConditionCategory category = ConditionCategory::c1;
  int year_built = 0;
  /// Share of replacement cost remaining, in [0, 1].
  std::optional<double> retained_value;
  std::optional<Split> split;

  ConditionClass condition_class() const { return map_category(category); }
  /// Identifier of the i-th image: "{house_id}_{i}".
  std::string image_id(std::size_t i) const { return house_id + "_" + std::to_string(i); }
};

/// Parses a manifest: a JSON array of objects with "house_id", "images",
/// "category" ("c1".."c9"), "year_built", optional "retained_value" and
/// optional "split". Throws ManifestError naming the record index for a
/// missing field and the house id for an invariant violation.
std::vector<BuildingRecord> parse_manifest_text(std::string_view text);
std::vector<BuildingRecord> parse_manifest(const std::filesystem::path& path);

/// Serializes records (with "split" when set) as an indented JSON array.
std::string manifest_to_json(std::span<const BuildingRecord> records);
void write_manifest(const std::filesystem::path& path, std::span<const BuildingRecord> records);

struct SplitRatios {
  double training = 0.6;
  double validation = 0.15;
  double test = 0.25;
};

struct DatasetSplit {
  std::vector<BuildingRecord> training;
  std::vector<BuildingRecord> validation;
  std::vector<BuildingRecord> test;

  /// All records tagged with their split, in training/validation/test order.
  std::vector<BuildingRecord> tagged() const;
};

/// Target split sizes for n items: largest-remainder apportionment.
std::array<std::size_t, 3> apportion(std::size_t n, const SplitRatios& ratios);

/// Stratified random house-level split. Within each condition class the
/// houses are shuffled with the seed; per-class split sizes are floor or ceil
/// of ratio x class count and the overall sizes match apportion(). Throws
/// InvalidArgument on bad ratios or empty input, and ManifestError when a
/// class holds fewer houses than there are non-empty splits.
DatasetSplit partition(std::span<const BuildingRecord> records, const SplitRatios& ratios, std::uint64_t seed);

/// Resolves an image path of a manifest located in manifest_dir.
std::filesystem::path resolve_image(const std::filesystem::path& manifest_dir, const std::string& image_path);

}  // namespace bcond
