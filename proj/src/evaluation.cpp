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

#include "bcond/evaluation.hpp"

#include <algorithm>
#include <cmath>

#include "bcond/error.hpp"

namespace bcond {

std::size_t ConfusionMatrix::total() const {
  std::size_t sum = 0;
  for (const auto& row : counts) {
    for (const auto v : row) sum += v;
  }
  return sum;
}

std::size_t ConfusionMatrix::trace() const {
  std::size_t sum = 0;
  for (std::size_t i = 0; i < kNumClasses; ++i) sum += counts[i][i];
  return sum;
}

std::size_t ConfusionMatrix::row_sum(ConditionClass truth) const {
  std::size_t sum = 0;
  for (const auto v : counts[index(truth)]) sum += v;
  return sum;
}

ConfusionMatrix confuse(std::span<const ConditionClass> truth, std::span<const ConditionClass> predicted) {
  if (truth.size() != predicted.size()) {
    throw InvalidArgument("evaluation", "truth and prediction lists differ in length (" +
                                            std::to_string(truth.size()) + " vs " +
                                            std::to_string(predicted.size()) + ")");
  }
  ConfusionMatrix m;
  for (std::size_t i = 0; i < truth.size(); ++i) ++m.counts[index(truth[i])][index(predicted[i])];
  return m;
}

double accuracy(const ConfusionMatrix& matrix) {
  const auto total = matrix.total();
  if (total == 0) throw InvalidArgument("evaluation", "accuracy of an empty confusion matrix");
  return static_cast<double>(matrix.trace()) / static_cast<double>(total);
}

double zero_rule(std::span<const ConditionClass> labels) {
  if (labels.empty()) throw InvalidArgument("evaluation", "zero rule of an empty label list");
  std::array<std::size_t, kNumClasses> counts{};
  for (const auto c : labels) ++counts[index(c)];
  return static_cast<double>(*std::max_element(counts.begin(), counts.end())) /
         static_cast<double>(labels.size());
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw InvalidArgument("evaluation", "pearson inputs differ in length");
  if (x.size() < 2) throw InvalidArgument("evaluation", "pearson needs at least two points");
  const auto n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw InvalidArgument("evaluation", "pearson correlation of a constant input");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

Exemplars confidence_rank(std::span<const PatchObservation> patches, double threshold,
                          double ambiguity_threshold, std::size_t max_per_list) {
  Exemplars out;
  for (const auto& p : patches) {
    const auto predicted = p.likelihoods.argmax();
    const double top = p.likelihoods.top();
    if (predicted == p.truth && top > threshold) out.confident[index(p.truth)].push_back(p);
    if (p.likelihoods.margin() < ambiguity_threshold) out.ambiguous.push_back(p);
    const bool far_apart = (p.truth == ConditionClass::A && predicted == ConditionClass::C) ||
                           (p.truth == ConditionClass::C && predicted == ConditionClass::A);
    if (far_apart && top > threshold) out.non_neighbor.push_back(p);
  }
  const auto by_confidence = [](const PatchObservation& a, const PatchObservation& b) {
    return a.likelihoods.top() > b.likelihoods.top();
  };
  for (auto& list : out.confident) std::stable_sort(list.begin(), list.end(), by_confidence);
  std::stable_sort(out.non_neighbor.begin(), out.non_neighbor.end(), by_confidence);
  std::stable_sort(out.ambiguous.begin(), out.ambiguous.end(), [](const auto& a, const auto& b) {
    return a.likelihoods.margin() < b.likelihoods.margin();
  });
  const auto cap = [max_per_list](std::vector<PatchObservation>& list) {
    if (list.size() > max_per_list) list.resize(max_per_list);
  };
  for (auto& list : out.confident) cap(list);
  cap(out.ambiguous);
  cap(out.non_neighbor);
  return out;
}

}  // namespace bcond
