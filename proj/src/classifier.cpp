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

#include "bcond/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "bcond/error.hpp"
#include "model_file.hpp"

namespace bcond {

namespace {

constexpr int kPixelGrid = 16;
constexpr int kMinAugmentSide = 8;

}  // namespace

AugmentParams sample_augment(int width, int height, Rng& rng) {
  AugmentParams p;
  p.flip = rng.bernoulli(0.5);
  p.crop = rng.bernoulli(0.5);
  const int cw = static_cast<int>(std::lround(0.9 * width));
  const int ch = static_cast<int>(std::lround(0.9 * height));
  p.crop_x = static_cast<int>(rng.below(static_cast<std::uint64_t>(std::max(1, width - cw + 1))));
  p.crop_y = static_cast<int>(rng.below(static_cast<std::uint64_t>(std::max(1, height - ch + 1))));
  p.contrast = rng.bernoulli(0.5);
  p.contrast_scale = rng.uniform(0.9, 1.1);
  p.brightness = rng.bernoulli(0.5);
  p.brightness_offset = rng.uniform(-0.1, 0.1);
  return p;
}

GrayImage apply_augment(const GrayImage& patch, const AugmentParams& params) {
  const int w = patch.width();
  const int h = patch.height();
  if (w < kMinAugmentSide || h < kMinAugmentSide) {
    throw SizeError("classifier", "augmentation needs patches of at least 8x8 pixels");
  }
  GrayImage out = patch;
  if (params.flip) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w / 2; ++x) std::swap(out(x, y), out(w - 1 - x, y));
    }
  }
  if (params.crop) {
    const int cw = static_cast<int>(std::lround(0.9 * w));
    const int ch = static_cast<int>(std::lround(0.9 * h));
    const int x0 = std::clamp(params.crop_x, 0, w - cw);
    const int y0 = std::clamp(params.crop_y, 0, h - ch);
    std::vector<double> window(static_cast<std::size_t>(cw) * ch);
    for (int y = 0; y < ch; ++y) {
      for (int x = 0; x < cw; ++x) window[static_cast<std::size_t>(y) * cw + x] = out(x0 + x, y0 + y);
    }
    out = resize_bilinear(GrayImage(cw, ch, std::move(window)), w, h);
  }
  auto pixels = out.pixels();
  if (params.contrast) {
    const double mean = std::accumulate(pixels.begin(), pixels.end(), 0.0) / static_cast<double>(pixels.size());
    for (auto& v : pixels) v = mean + params.contrast_scale * (v - mean);
  }
  if (params.brightness) {
    for (auto& v : pixels) v += params.brightness_offset;
  }
  for (auto& v : pixels) v = std::clamp(v, 0.0, 1.0);
  return out;
}

GrayImage augment(const GrayImage& patch, Rng& rng) {
  return apply_augment(patch, sample_augment(patch.width(), patch.height(), rng));
}

std::size_t feature_dim(FeatureMode mode) {
  return mode == FeatureMode::descriptor ? kDescriptorSize : static_cast<std::size_t>(kPixelGrid * kPixelGrid);
}

std::vector<double> extract_features(const PatchRecord& patch, FeatureMode mode) {
  if (mode == FeatureMode::descriptor) {
    return {patch.descriptor.values.begin(), patch.descriptor.values.end()};
  }
  if (!patch.pixels) {
    throw InvalidArgument("classifier", "pixel-mode model needs patch pixels for " + patch.spec.image_id);
  }
  const auto small = resize_bilinear(*patch.pixels, kPixelGrid, kPixelGrid);
  std::vector<double> x(small.pixels().begin(), small.pixels().end());
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
  for (auto& v : x) v -= mean;
  return x;
}

ConditionModel::ConditionModel(FeatureMode mode, SoftmaxRegression regression)
    : mode_(mode), regression_(std::move(regression)) {
  if (regression_.classes() != kNumClasses || regression_.dim() != feature_dim(mode_)) {
    throw InvalidArgument("classifier", "condition model shape does not match its feature mode");
  }
}

std::vector<double> ConditionModel::scores(const PatchRecord& patch) const {
  return regression_.scores(extract_features(patch, mode_));
}

ClassLikelihoods ConditionModel::predict(const PatchRecord& patch) const {
  const auto p = softmax(scores(patch));
  return ClassLikelihoods({p[0], p[1], p[2]});
}

ConditionTraining train_condition(std::span<const LabeledPatch> patches, const TrainConfig& config,
                                  std::size_t augment_factor, FeatureMode mode) {
  config.validate();
  if (augment_factor < 1) throw InvalidArgument("classifier", "augment factor must be >= 1");
  std::array<bool, kNumClasses> present{};
  for (const auto& p : patches) present[index(p.label)] = true;
  for (const auto c : kAllClasses) {
    if (!present[index(c)]) {
      throw TrainingError("classifier", "training patches contain no class " + std::string(to_string(c)));
    }
  }

  std::vector<std::vector<double>> features;
  std::vector<std::size_t> labels;
  features.reserve(patches.size() * augment_factor);
  Rng rng(mix_seed(config.seed, 0xa7));
  for (const auto& p : patches) {
    features.push_back(extract_features(p.patch, mode));
    labels.push_back(index(p.label));
    if (augment_factor == 1) continue;
    if (!p.patch.pixels) {
      throw InvalidArgument("classifier", "augmentation needs patch pixels for " + p.patch.spec.image_id);
    }
    for (std::size_t copy = 1; copy < augment_factor; ++copy) {
      PatchRecord variant{p.patch.spec, {}, augment(*p.patch.pixels, rng)};
      if (mode == FeatureMode::descriptor) variant.descriptor = describe_image(*variant.pixels);
      features.push_back(extract_features(variant, mode));
      labels.push_back(index(p.label));
    }
  }
  auto trained = train_softmax(features, labels, kNumClasses, config);
  return {ConditionModel(mode, std::move(trained.model)), std::move(trained.loss_trace)};
}

namespace {

std::size_t condition_dim(std::uint8_t mode) {
  return mode <= static_cast<std::uint8_t>(FeatureMode::pixels) ? feature_dim(static_cast<FeatureMode>(mode)) : 0;
}

}  // namespace

void save_model(const ConditionModel& model, const std::filesystem::path& path) {
  const auto params = model.regression().parameters();
  model_file::write(path, {static_cast<std::uint8_t>(model.mode()), static_cast<std::uint8_t>(kNumClasses),
                           {params.begin(), params.end()}});
}

ConditionModel load_model(const std::filesystem::path& path) {
  auto contents = model_file::read(path, condition_dim);
  if (contents.class_count != kNumClasses) {
    throw FormatError("classifier", "model " + path.string() + " has " + std::to_string(contents.class_count) +
                                        " classes, a condition model has 3");
  }
  const auto mode = static_cast<FeatureMode>(contents.feature_mode);
  return ConditionModel(mode, SoftmaxRegression(kNumClasses, feature_dim(mode), std::move(contents.parameters)));
}

}  // namespace bcond
