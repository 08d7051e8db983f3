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
#include <vector>

#include "bcond/dataset.hpp"
#include "bcond/image.hpp"
#include "bcond/regression.hpp"
#include "bcond/rng.hpp"

namespace bcond {

struct SynthSpec {
  /// Houses per class A, B, C.
  std::array<std::size_t, kNumClasses> counts{};
  int image_size = 256;
  std::uint64_t seed = 0;
  std::size_t images_per_house = 1;
};

/// Degradation level of a class before per-house jitter: 0, 0.5, 1.
double class_degradation(ConditionClass cls);

/// Renders one facade-like image: sky band, smooth wall, regular window grid,
/// then cracks, stains and pixel noise scaled by `degradation`.
GrayImage render_facade(int size, double degradation, Rng& rng);

/// Draws a year of construction for a class (older houses are worse).
int draw_year_built(ConditionClass cls, Rng& rng);

/// Writes out_dir/images/*.png and out_dir/manifest.json and returns the
/// records. House ids are "h0001", "h0002", ... in class order. Throws
/// InvalidArgument when image_size < 256 or images_per_house == 0 and
/// IoError when out_dir is not writable. All-zero counts write nothing.
std::vector<BuildingRecord> synth_generate(const SynthSpec& spec, const std::filesystem::path& out_dir);

/// Regression observations from the appraiser value model: class shares
/// 0.30/0.44/0.26, class-dependent years and Gaussian noise (unclamped).
std::vector<RegressionObservation> synth_regression_observations(std::size_t n, std::uint64_t seed);

struct RelevanceSample {
  GrayImage patch;
  std::size_t label = 0;
};

/// Square texture patches for the 13 relevance classes (default labels); the
/// last class is cut from rendered facades.
std::vector<RelevanceSample> synth_relevance_patches(std::size_t per_class, int side, std::uint64_t seed);

}  // namespace bcond
