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

#include "bcond/types.hpp"

#include <algorithm>
#include <cmath>

#include "bcond/error.hpp"

namespace bcond {

namespace {

// Likelihoods closer than this are treated as tied.
constexpr double kTieTolerance = 1e-12;

}  // namespace

std::string_view to_string(ConditionClass c) {
  switch (c) {
    case ConditionClass::A: return "A";
    case ConditionClass::B: return "B";
    case ConditionClass::C: return "C";
  }
  return "?";
}

std::string to_string(ConditionCategory c) {
  return "c" + std::to_string(static_cast<int>(c));
}

std::optional<ConditionClass> parse_class(std::string_view text) {
  if (text == "A") return ConditionClass::A;
  if (text == "B") return ConditionClass::B;
  if (text == "C") return ConditionClass::C;
  return std::nullopt;
}

std::optional<ConditionCategory> parse_category(std::string_view text) {
  if (text.size() != 2 || text[0] != 'c' || text[1] < '1' || text[1] > '9') {
    return std::nullopt;
  }
  return static_cast<ConditionCategory>(text[1] - '0');
}

ClassLikelihoods::ClassLikelihoods(std::array<double, kNumClasses> values)
    : values_(values) {
  double sum = 0.0;
  for (const double v : values_) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw InvalidArgument("classifier", "class likelihood must be finite and non-negative");
    }
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-6) {
    throw InvalidArgument("classifier", "class likelihoods must sum to 1, got " + std::to_string(sum));
  }
}

ConditionClass ClassLikelihoods::argmax() const noexcept {
  // Scan from the worst class so that a better class must win strictly.
  std::size_t best = kNumClasses - 1;
  for (std::size_t i = kNumClasses - 1; i-- > 0;) {
    if (values_[i] > values_[best] + kTieTolerance) best = i;
  }
  return class_at(best);
}

double ClassLikelihoods::top() const noexcept {
  return *std::max_element(values_.begin(), values_.end());
}

double ClassLikelihoods::margin() const noexcept {
  auto sorted = values_;
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  return sorted[0] - sorted[1];
}

}  // namespace bcond
