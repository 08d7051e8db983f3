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

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bcond/classifier.hpp"
#include "bcond/selection.hpp"
#include "bcond/types.hpp"

namespace bcond {

enum class AggregationMethod { MV, LH };

std::string_view to_string(AggregationMethod method);
std::optional<AggregationMethod> parse_method(std::string_view text);

inline constexpr double kDefaultAmbiguityThreshold = 0.25;

struct PatchPrediction {
  PatchSpec spec;
  ClassLikelihoods likelihoods;
};

/// Building verdict for one image. An empty verdict means undecidable, which
/// happens exactly when no patch survived selection and ambiguity filtering.
struct BuildingPrediction {
  std::string image_id;
  std::optional<ConditionClass> verdict;
  AggregationMethod method = AggregationMethod::MV;
  std::size_t n_patches_used = 0;
  /// Mean likelihoods; present for LH with a verdict.
  std::optional<ClassLikelihoods> aggregate_likelihoods;
  /// Highest top-class likelihood over all classified patches (0 if none).
  double max_patch_likelihood = 0.0;
};

/// Keeps vectors whose top-two difference is >= threshold.
std::vector<ClassLikelihoods> ambiguity_filter(std::span<const ClassLikelihoods> predictions,
                                               double threshold = kDefaultAmbiguityThreshold);

/// Most frequent per-patch argmax. Ties go to the larger likelihood sum, then
/// to the worse class. Empty input yields nullopt (undecidable).
std::optional<ConditionClass> majority_vote(std::span<const ClassLikelihoods> predictions);

/// Elementwise mean and its argmax (ties to the worse class).
std::optional<std::pair<ConditionClass, ClassLikelihoods>> average_likelihood(
    std::span<const ClassLikelihoods> predictions);

std::vector<PatchPrediction> classify_patches(std::span<const PatchRecord> patches, const PatchClassifier& model);

/// Ambiguity filtering followed by the chosen aggregation.
BuildingPrediction aggregate(const std::string& image_id, std::span<const PatchPrediction> patches,
                             AggregationMethod method, double threshold = kDefaultAmbiguityThreshold);

/// Full second stage on one image: selection, per-patch prediction, filtering
/// and aggregation.
BuildingPrediction predict_building(const GrayImage& image, const std::string& image_id,
                                    const SelectionConfig& selection, const RelevanceModel* relevance,
                                    const PatchClassifier& model, AggregationMethod method,
                                    double threshold = kDefaultAmbiguityThreshold);

/// CSV "image_id,method,verdict,n_patches_used,p_A,p_B,p_C,max_patch_likelihood".
/// Undecidable verdicts are written as "undecidable"; p_* are empty unless present.
void write_predictions_csv(std::ostream& out, std::span<const BuildingPrediction> predictions);
std::vector<BuildingPrediction> read_predictions_csv(std::istream& in);

/// CSV "image_id,x,y,side,p_A,p_B,p_C" of per-patch likelihoods.
void write_patch_predictions_csv(std::ostream& out, std::span<const PatchPrediction> patches);
std::vector<PatchPrediction> read_patch_predictions_csv(std::istream& in);

}  // namespace bcond
