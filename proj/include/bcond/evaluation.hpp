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
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "bcond/image.hpp"
#include "bcond/types.hpp"

namespace bcond {

/// Rows are true classes, columns predicted classes, both ordered A, B, C.
struct ConfusionMatrix {
  std::array<std::array<std::size_t, kNumClasses>, kNumClasses> counts{};

  std::size_t total() const;
  std::size_t trace() const;
  std::size_t row_sum(ConditionClass truth) const;

  bool operator==(const ConfusionMatrix&) const = default;
};

/// Throws InvalidArgument on a length mismatch.
ConfusionMatrix confuse(std::span<const ConditionClass> truth, std::span<const ConditionClass> predicted);

/// trace / total. Throws InvalidArgument on an empty matrix.
double accuracy(const ConfusionMatrix& matrix);

/// Accuracy of always predicting the most frequent class.
double zero_rule(std::span<const ConditionClass> labels);

/// Sample Pearson correlation. Throws InvalidArgument on fewer than two
/// points, unequal lengths or a constant input.
double pearson(std::span<const double> x, std::span<const double> y);

/// A classified patch together with the true class of its building.
struct PatchObservation {
  PatchSpec spec;
  ConditionClass truth = ConditionClass::A;
  ClassLikelihoods likelihoods;
};

struct Exemplars {
  /// Per class: correctly predicted patches with top likelihood > threshold,
  /// most confident first.
  std::array<std::vector<PatchObservation>, kNumClasses> confident;
  /// Patches whose top-two difference is below the ambiguity threshold,
  /// smallest difference first.
  std::vector<PatchObservation> ambiguous;
  /// Confident (> threshold) confusions between A and C, most confident first.
  std::vector<PatchObservation> non_neighbor;
};

Exemplars confidence_rank(std::span<const PatchObservation> patches, double threshold = 0.99,
                          double ambiguity_threshold = 0.25,
                          std::size_t max_per_list = std::numeric_limits<std::size_t>::max());

}  // namespace bcond
