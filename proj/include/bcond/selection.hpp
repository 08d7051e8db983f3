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
#include <string>
#include <vector>

#include "bcond/descriptor.hpp"
#include "bcond/image.hpp"
#include "bcond/softmax_regression.hpp"

namespace bcond {

// --- clustering ------------------------------------------------------------

struct ClusterResult {
  std::size_t requested_k = 0;
  /// Effective cluster count; below requested_k when the input has fewer
  /// distinct points.
  std::size_t k = 0;
  std::vector<std::vector<double>> centroids;
  std::vector<std::size_t> assignment;
  /// Sum of squared distances to the assigned centroids.
  double inertia = 0.0;
  /// Inertia of the first assignment against the k-means++ seeds.
  double initial_inertia = 0.0;
  /// Inertia after each assignment step.
  std::vector<double> inertia_trace;
  std::size_t iterations = 0;
};

/// Lloyd's algorithm with k-means++ seeding, squared Euclidean distance and a
/// cap of max_iterations assignment rounds. An empty cluster is re-seeded at
/// the point farthest from its own centroid. Throws InvalidArgument on empty
/// input or k == 0.
ClusterResult kmeans(std::span<const std::vector<double>> points, std::size_t k, std::uint64_t seed,
                     std::size_t max_iterations = 300);

std::vector<std::vector<double>> descriptor_features(std::span<const PatchRecord> patches);

// --- representative and contrast selection ---------------------------------

/// One patch per non-empty cluster: the member nearest to the centroid (ties
/// to the lowest patch index), in cluster-id order.
std::vector<PatchRecord> select_representatives(std::span<const PatchRecord> patches,
                                                const ClusterResult& clustering);

/// Number of patches the contrast filter keeps from n candidates.
std::size_t contrast_keep_count(std::size_t n, double t);

/// Keeps the ceil(t*n) patches with the largest raw norm (ties to the lower
/// index), drops zero-norm patches, and preserves the input order.
std::vector<PatchRecord> contrast_filter(std::span<const PatchRecord> reps, double t);

// --- relevance -------------------------------------------------------------

/// Default labels of the relevance classifier; the last one is the
/// building-related class.
const std::vector<std::string>& default_relevance_labels();

/// Pluggable patch relevance model: likelihoods over irrelevant object
/// classes plus one building-related class.
class RelevanceModel {
 public:
  virtual ~RelevanceModel() = default;
  virtual std::size_t class_count() const = 0;
  virtual std::size_t building_class() const = 0;
  virtual std::vector<double> likelihoods(const PatchRecord& patch) const = 0;
};

/// Reference relevance model: softmax regression over normalized descriptors.
/// The building-related class is the last class.
class LogisticRelevanceModel final : public RelevanceModel {
 public:
  explicit LogisticRelevanceModel(SoftmaxRegression regression);

  std::size_t class_count() const override { return regression_.classes(); }
  std::size_t building_class() const override { return regression_.classes() - 1; }
  std::vector<double> likelihoods(const PatchRecord& patch) const override;

  const SoftmaxRegression& regression() const noexcept { return regression_; }

 private:
  SoftmaxRegression regression_;
};

struct LabeledDescriptor {
  Descriptor descriptor;
  std::size_t label = 0;
};

struct RelevanceTraining {
  LogisticRelevanceModel model;
  std::vector<double> loss_trace;
};

/// Throws InvalidArgument on empty input or labels outside [0, classes), and
/// TrainingError when fewer than two classes are present.
RelevanceTraining train_relevance(std::span<const LabeledDescriptor> samples, const TrainConfig& config,
                                  std::size_t classes = 13);

/// Keeps patches whose most likely class is the building-related class.
std::vector<PatchRecord> relevance_filter(std::span<const PatchRecord> patches, const RelevanceModel& model);

void save_relevance_model(const LogisticRelevanceModel& model, const std::filesystem::path& path);
LogisticRelevanceModel load_relevance_model(const std::filesystem::path& path);

// --- composed pipeline -----------------------------------------------------

struct SelectionConfig {
  std::vector<int> scales{64, 96, 128, 192};
  double stride_fraction = 0.5;
  std::size_t k = 50;
  double t = 0.21;
  /// Longer images are downscaled to this many pixels before gridding.
  int max_side = 1024;
  std::uint64_t seed = 0;
  /// Attach patch pixels to the emitted records.
  bool keep_pixels = false;
};

/// Output of every stage, each a subset of the previous one.
struct SelectionTrace {
  std::vector<PatchRecord> dense;
  ClusterResult clustering;
  std::vector<PatchRecord> representatives;
  std::vector<PatchRecord> contrasted;
  std::vector<PatchRecord> selected;
};

/// dense grid -> describe -> k-means -> representatives -> contrast filter ->
/// relevance filter (skipped when relevance is null). Coordinates refer to
/// the image after limit_long_side. The k-means seed is derived from
/// config.seed and image_id.
SelectionTrace select_pipeline_traced(const GrayImage& image, const std::string& image_id,
                                      const SelectionConfig& config, const RelevanceModel* relevance = nullptr);

std::vector<PatchRecord> select_pipeline(const GrayImage& image, const std::string& image_id,
                                         const SelectionConfig& config, const RelevanceModel* relevance = nullptr);

}  // namespace bcond
