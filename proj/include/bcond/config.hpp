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
#include <string>
#include <string_view>

#include "bcond/aggregation.hpp"
#include "bcond/classifier.hpp"
#include "bcond/dataset.hpp"
#include "bcond/selection.hpp"
#include "bcond/softmax_regression.hpp"

namespace bcond {

/// Everything that influences a pipeline run.
struct PipelineConfig {
  SelectionConfig selection;
  double ambiguity_threshold = kDefaultAmbiguityThreshold;
  AggregationMethod method = AggregationMethod::MV;
  TrainConfig train;
  std::size_t augment_factor = 1;
  FeatureMode feature_mode = FeatureMode::descriptor;
  SplitRatios ratios;
  /// Year that building age is measured against.
  int reference_year = 2018;
  std::uint64_t seed = 0;

  /// Pushes `seed` into the selection and training settings.
  void apply_seed(std::uint64_t value);
  /// Throws InvalidArgument when a field is out of range.
  void validate() const;
};

/// Applies one "key=value" setting. Throws InvalidArgument for an unknown key
/// or a malformed value.
void set_config_value(PipelineConfig& config, std::string_view key, std::string_view value);

/// key=value lines; blank lines and lines starting with '#' are ignored.
PipelineConfig parse_config_text(std::string_view text, PipelineConfig base = {});
PipelineConfig load_config(const std::filesystem::path& path, PipelineConfig base = {});

/// Canonical serialization: every key in a fixed order, one per line.
std::string serialize_config(const PipelineConfig& config);

/// 16 hex digits of FNV-1a over the canonical serialization.
std::string config_hash(const PipelineConfig& config);

}  // namespace bcond
