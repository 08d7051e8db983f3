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
#include <vector>

#include "bcond/descriptor.hpp"
#include "bcond/image.hpp"
#include "bcond/rng.hpp"
#include "bcond/softmax_regression.hpp"
#include "bcond/types.hpp"

namespace bcond {

// --- augmentation ----------------------------------------------------------

/// One draw of the augmentation pipeline. Each transform is enabled
/// independently; disabled transforms leave the patch untouched.
struct AugmentParams {
  bool flip = false;
  bool crop = false;
  int crop_x = 0;  ///< offset of the 90% crop window
  int crop_y = 0;
  bool contrast = false;
  double contrast_scale = 1.0;  ///< in [0.9, 1.1], about the patch mean
  bool brightness = false;
  double brightness_offset = 0.0;  ///< in [-0.1, 0.1]
};

/// Each transform is enabled with probability 0.5. The number of draws is
/// fixed so the generator stream does not depend on the outcome.
AugmentParams sample_augment(int width, int height, Rng& rng);

/// flip -> crop to 90% and rescale back -> contrast -> brightness -> clamp.
/// Output has the input dimensions. Throws SizeError below 8 pixels.
GrayImage apply_augment(const GrayImage& patch, const AugmentParams& params);

GrayImage augment(const GrayImage& patch, Rng& rng);

// --- models ----------------------------------------------------------------

enum class FeatureMode : std::uint8_t { descriptor = 0, pixels = 1 };

/// Feature length per mode: 128 descriptor values, or 16x16 resampled pixels.
std::size_t feature_dim(FeatureMode mode);

/// Throws InvalidArgument when the mode needs pixels the patch does not carry.
std::vector<double> extract_features(const PatchRecord& patch, FeatureMode mode);

/// Pluggable patch-level condition classifier.
class PatchClassifier {
 public:
  virtual ~PatchClassifier() = default;
  virtual ClassLikelihoods predict(const PatchRecord& patch) const = 0;
};

/// Reference classifier: softmax regression over the patch features.
class ConditionModel final : public PatchClassifier {
 public:
  ConditionModel(FeatureMode mode, SoftmaxRegression regression);

  ClassLikelihoods predict(const PatchRecord& patch) const override;

  FeatureMode mode() const noexcept { return mode_; }
  const SoftmaxRegression& regression() const noexcept { return regression_; }
  /// Class scores before the softmax.
  std::vector<double> scores(const PatchRecord& patch) const;

 private:
  FeatureMode mode_;
  SoftmaxRegression regression_;
};

struct LabeledPatch {
  PatchRecord patch;
  ConditionClass label;
};

struct ConditionTraining {
  ConditionModel model;
  std::vector<double> loss_trace;
};

/// Trains the reference model with mini-batch SGD (see train_softmax).
/// augment_factor - 1 augmented copies are added per patch (requires pixels).
/// Throws TrainingError when a class is missing.
ConditionTraining train_condition(std::span<const LabeledPatch> patches, const TrainConfig& config,
                                  std::size_t augment_factor = 1, FeatureMode mode = FeatureMode::descriptor);

inline ClassLikelihoods predict(const ConditionModel& model, const PatchRecord& patch) {
  return model.predict(patch);
}

void save_model(const ConditionModel& model, const std::filesystem::path& path);
/// Throws FormatError on a wrong magic, version, class count or size.
ConditionModel load_model(const std::filesystem::path& path);

}  // namespace bcond
