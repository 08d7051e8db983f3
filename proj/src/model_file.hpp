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

// Little-endian model container shared by the condition and relevance
// models: magic "BCND", u16 version, u8 feature mode, u8 class count, then
// the flat parameters as IEEE-754 binary64.

#include <cstdint>
#include <filesystem>
#include <vector>

namespace bcond::model_file {

inline constexpr char kMagic[4] = {'B', 'C', 'N', 'D'};
inline constexpr std::uint16_t kVersion = 1;

struct Contents {
  std::uint8_t feature_mode = 0;
  std::uint8_t class_count = 0;
  std::vector<double> parameters;
};

void write(const std::filesystem::path& path, const Contents& contents);

/// Reads a model whose parameter count is classes * (dim_for_mode + 1).
/// Throws FormatError on bad magic, version, truncation or trailing bytes.
Contents read(const std::filesystem::path& path, std::size_t (*dim_for_mode)(std::uint8_t));

}  // namespace bcond::model_file
