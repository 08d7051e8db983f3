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

#include "bcond/selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "bcond/error.hpp"
#include "bcond/rng.hpp"
#include "model_file.hpp"

namespace bcond {

namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  return sum;
}

std::size_t count_distinct(std::span<const std::vector<double>> points) {
  std::vector<const std::vector<double>*> refs;
  refs.reserve(points.size());
  for (const auto& p : points) refs.push_back(&p);
  std::sort(refs.begin(), refs.end(), [](auto* a, auto* b) { return *a < *b; });
  const auto last = std::unique(refs.begin(), refs.end(), [](auto* a, auto* b) { return *a == *b; });
  return static_cast<std::size_t>(last - refs.begin());
}

std::vector<std::vector<double>> seed_plus_plus(std::span<const std::vector<double>> points, std::size_t k,
                                                Rng& rng) {
  std::vector<std::vector<double>> centroids;
  centroids.push_back(points[rng.below(points.size())]);
  std::vector<double> nearest(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) nearest[i] = squared_distance(points[i], centroids[0]);
  while (centroids.size() < k) {
    const double total = std::accumulate(nearest.begin(), nearest.end(), 0.0);
    const double target = rng.uniform() * total;
    std::size_t pick = points.size();
    double cumulative = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (nearest[i] <= 0.0) continue;
      cumulative += nearest[i];
      pick = i;
      if (cumulative > target) break;
    }
    centroids.push_back(points[pick]);
    for (std::size_t i = 0; i < points.size(); ++i) {
      nearest[i] = std::min(nearest[i], squared_distance(points[i], centroids.back()));
    }
  }
  return centroids;
}

}  // namespace

ClusterResult kmeans(std::span<const std::vector<double>> points, std::size_t k, std::uint64_t seed,
                     std::size_t max_iterations) {
  if (points.empty()) throw InvalidArgument("selection", "k-means needs at least one point");
  if (k == 0) throw InvalidArgument("selection", "k must be >= 1");
  const std::size_t dim = points.front().size();
  for (const auto& p : points) {
    if (p.size() != dim) throw InvalidArgument("selection", "k-means points differ in dimension");
  }

  ClusterResult result;
  result.requested_k = k;
  result.k = std::min(k, count_distinct(points));
  Rng rng(seed);
  result.centroids = seed_plus_plus(points, result.k, rng);

  const std::size_t n = points.size();
  result.assignment.assign(n, std::numeric_limits<std::size_t>::max());
  std::vector<double> distance(n);
  for (std::size_t iter = 0; iter < std::max<std::size_t>(max_iterations, 1); ++iter) {
    bool changed = false;
    double inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t best = 0;
      double best_d = squared_distance(points[i], result.centroids[0]);
      for (std::size_t c = 1; c < result.k; ++c) {
        const double d = squared_distance(points[i], result.centroids[c]);
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      changed |= result.assignment[i] != best;
      result.assignment[i] = best;
      distance[i] = best_d;
      inertia += best_d;
    }
    result.inertia_trace.push_back(inertia);
    if (iter == 0) result.initial_inertia = inertia;
    result.iterations = iter + 1;
    if (!changed) break;

    std::vector<std::vector<double>> sums(result.k, std::vector<double>(dim, 0.0));
    std::vector<std::size_t> counts(result.k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      auto& s = sums[result.assignment[i]];
      for (std::size_t j = 0; j < dim; ++j) s[j] += points[i][j];
      ++counts[result.assignment[i]];
    }
    std::vector<bool> reseeded(n, false);
    for (std::size_t c = 0; c < result.k; ++c) {
      if (counts[c] > 0) {
        for (std::size_t j = 0; j < dim; ++j) result.centroids[c][j] = sums[c][j] / static_cast<double>(counts[c]);
        continue;
      }
      // Empty cluster: move it onto the worst-served point.
      std::size_t far = 0;
      double far_d = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (!reseeded[i] && distance[i] > far_d) {
          far_d = distance[i];
          far = i;
        }
      }
      reseeded[far] = true;
      result.centroids[c] = points[far];
    }
  }

  result.inertia = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    result.inertia += squared_distance(points[i], result.centroids[result.assignment[i]]);
  }
  return result;
}

std::vector<std::vector<double>> descriptor_features(std::span<const PatchRecord> patches) {
  std::vector<std::vector<double>> features;
  features.reserve(patches.size());
  for (const auto& p : patches) features.emplace_back(p.descriptor.values.begin(), p.descriptor.values.end());
  return features;
}

std::vector<PatchRecord> select_representatives(std::span<const PatchRecord> patches,
                                                const ClusterResult& clustering) {
  if (clustering.assignment.size() != patches.size()) {
    throw InvalidArgument("selection", "clustering covers " + std::to_string(clustering.assignment.size()) +
                                           " patches but " + std::to_string(patches.size()) + " were given");
  }
  std::vector<PatchRecord> reps;
  for (std::size_t c = 0; c < clustering.k; ++c) {
    std::size_t best = patches.size();
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < patches.size(); ++i) {
      if (clustering.assignment[i] != c) continue;
      const auto& v = patches[i].descriptor.values;
      const double d = squared_distance(v, clustering.centroids[c]);
      if (d < best_d) {
        best_d = d;
        best = i;
      }
    }
    if (best < patches.size()) reps.push_back(patches[best]);
  }
  return reps;
}

std::size_t contrast_keep_count(std::size_t n, double t) {
  if (!(t > 0.0 && t <= 1.0)) throw InvalidArgument("selection", "contrast fraction t must lie in (0, 1]");
  // The small slack keeps products such as 0.4 * 5 from rounding up to 3.
  const auto keep = static_cast<std::size_t>(std::ceil(t * static_cast<double>(n) - 1e-9));
  return std::min(keep, n);
}

std::vector<PatchRecord> contrast_filter(std::span<const PatchRecord> reps, double t) {
  const std::size_t keep = contrast_keep_count(reps.size(), t);
  std::vector<std::size_t> order(reps.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return reps[a].descriptor.raw_norm > reps[b].descriptor.raw_norm;
  });
  std::vector<bool> kept(reps.size(), false);
  for (std::size_t i = 0; i < keep; ++i) kept[order[i]] = true;
  std::vector<PatchRecord> out;
  for (std::size_t i = 0; i < reps.size(); ++i) {
    if (kept[i] && reps[i].descriptor.raw_norm > 0.0) out.push_back(reps[i]);
  }
  return out;
}

const std::vector<std::string>& default_relevance_labels() {
  static const std::vector<std::string> labels = {
      "car", "tree", "person", "asphalt", "pole", "sky", "grass",
      "fence", "sign", "shadow", "bush", "cable", "building"};
  return labels;
}

LogisticRelevanceModel::LogisticRelevanceModel(SoftmaxRegression regression)
    : regression_(std::move(regression)) {
  if (regression_.classes() < 2 || regression_.dim() != kDescriptorSize) {
    throw InvalidArgument("selection", "relevance model needs >= 2 classes over descriptor features");
  }
}

std::vector<double> LogisticRelevanceModel::likelihoods(const PatchRecord& patch) const {
  return regression_.probabilities(patch.descriptor.values);
}

RelevanceTraining train_relevance(std::span<const LabeledDescriptor> samples, const TrainConfig& config,
                                  std::size_t classes) {
  if (samples.empty()) throw InvalidArgument("selection", "no labeled relevance patches");
  if (classes < 2) throw InvalidArgument("selection", "relevance model needs >= 2 classes");
  std::vector<std::vector<double>> features;
  std::vector<std::size_t> labels;
  std::vector<bool> present(classes, false);
  for (const auto& s : samples) {
    if (s.label >= classes) {
      throw InvalidArgument("selection", "relevance label " + std::to_string(s.label) + " outside 0.." +
                                             std::to_string(classes - 1));
    }
    present[s.label] = true;
    features.emplace_back(s.descriptor.values.begin(), s.descriptor.values.end());
    labels.push_back(s.label);
  }
  if (std::count(present.begin(), present.end(), true) < 2) {
    throw TrainingError("selection", "relevance training data holds a single class");
  }
  auto trained = train_softmax(features, labels, classes, config);
  return {LogisticRelevanceModel(std::move(trained.model)), std::move(trained.loss_trace)};
}

std::vector<PatchRecord> relevance_filter(std::span<const PatchRecord> patches, const RelevanceModel& model) {
  std::vector<PatchRecord> out;
  for (const auto& p : patches) {
    const auto l = model.likelihoods(p);
    const auto top = static_cast<std::size_t>(std::max_element(l.begin(), l.end()) - l.begin());
    if (top == model.building_class()) out.push_back(p);
  }
  return out;
}

namespace {

std::size_t relevance_dim(std::uint8_t mode) { return mode == 0 ? kDescriptorSize : 0; }

}  // namespace

void save_relevance_model(const LogisticRelevanceModel& model, const std::filesystem::path& path) {
  const auto params = model.regression().parameters();
  model_file::write(path, {0, static_cast<std::uint8_t>(model.class_count()), {params.begin(), params.end()}});
}

LogisticRelevanceModel load_relevance_model(const std::filesystem::path& path) {
  auto contents = model_file::read(path, relevance_dim);
  return LogisticRelevanceModel(
      SoftmaxRegression(contents.class_count, kDescriptorSize, std::move(contents.parameters)));
}

SelectionTrace select_pipeline_traced(const GrayImage& input, const std::string& image_id,
                                      const SelectionConfig& config, const RelevanceModel* relevance) {
  SelectionTrace trace;
  const GrayImage image = limit_long_side(input, config.max_side);
  const auto specs = dense_grid(image.width(), image.height(), config.scales, config.stride_fraction, image_id);
  if (specs.empty()) return trace;

  const auto gradients = compute_gradients(image);
  trace.dense = describe_all(gradients, specs);
  const auto features = descriptor_features(trace.dense);
  trace.clustering = kmeans(features, config.k, mix_seed(config.seed, fnv1a(image_id)));
  trace.representatives = select_representatives(trace.dense, trace.clustering);
  trace.contrasted = contrast_filter(trace.representatives, config.t);
  trace.selected = relevance ? relevance_filter(trace.contrasted, *relevance) : trace.contrasted;
  if (config.keep_pixels) {
    for (auto& p : trace.selected) p.pixels = crop(image, p.spec);
  }
  return trace;
}

std::vector<PatchRecord> select_pipeline(const GrayImage& image, const std::string& image_id,
                                         const SelectionConfig& config, const RelevanceModel* relevance) {
  return std::move(select_pipeline_traced(image, image_id, config, relevance).selected);
}

}  // namespace bcond
