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
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace bcond {

/// Appraiser condition score, c1 (best) to c9 (worst).
enum class ConditionCategory : std::uint8_t { c1 = 1, c2, c3, c4, c5, c6, c7, c8, c9 };

/// Coarse target class: A good, B normal, C needs repairs.
enum class ConditionClass : std::uint8_t { A = 0, B = 1, C = 2 };

inline constexpr std::size_t kNumClasses = 3;
inline constexpr std::array<ConditionClass, kNumClasses> kAllClasses = {
    ConditionClass::A, ConditionClass::B, ConditionClass::C};

constexpr std::size_t index(ConditionClass c) { return static_cast<std::size_t>(c); }
constexpr ConditionClass class_at(std::size_t i) { return static_cast<ConditionClass>(i); }

/// Ordinal encoding A=1, B=2, C=3 used for correlation statistics.
constexpr int ordinal(ConditionClass c) { return static_cast<int>(c) + 1; }

/// c1,c2 -> A; c3,c4 -> B; c5..c9 -> C.
constexpr ConditionClass map_category(ConditionCategory category) {
  const auto code = static_cast<int>(category);
  if (code <= 2) return ConditionClass::A;
  if (code <= 4) return ConditionClass::B;
  return ConditionClass::C;
}

std::string_view to_string(ConditionClass c);
std::string to_string(ConditionCategory c);
std::optional<ConditionClass> parse_class(std::string_view text);
std::optional<ConditionCategory> parse_category(std::string_view text);

/// Probability vector over the condition classes, ordered A, B, C.
class ClassLikelihoods {
 public:
  ClassLikelihoods() : values_{1.0 / 3, 1.0 / 3, 1.0 / 3} {}

  /// Throws InvalidArgument unless every entry is >= 0 and the sum is 1 +- 1e-6.
  explicit ClassLikelihoods(std::array<double, kNumClasses> values);

  const std::array<double, kNumClasses>& values() const noexcept { return values_; }
  double operator[](ConditionClass c) const noexcept { return values_[index(c)]; }
  double operator[](std::size_t i) const noexcept { return values_[i]; }

  /// Most likely class; exact ties go to the worse class.
  ConditionClass argmax() const noexcept;
  double top() const noexcept;
  /// Highest minus second highest likelihood.
  double margin() const noexcept;

  bool operator==(const ClassLikelihoods&) const = default;

 private:
  std::array<double, kNumClasses> values_;
};

}  // namespace bcond
