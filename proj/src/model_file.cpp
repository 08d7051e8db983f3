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

#include "model_file.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <string>
#include <type_traits>

#include "bcond/error.hpp"

namespace bcond::model_file {

namespace {

static_assert(sizeof(double) == 8 && std::numeric_limits<double>::is_iec559);

template <typename T>
void put_le(std::vector<unsigned char>& out, T value) {
  const auto bits = std::bit_cast<std::conditional_t<sizeof(T) == 8, std::uint64_t, T>>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<unsigned char>((static_cast<std::uint64_t>(bits) >> (8 * i)) & 0xFF));
  }
}

std::uint64_t get_le(const unsigned char* p, std::size_t bytes) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

}  // namespace

void write(const std::filesystem::path& path, const Contents& contents) {
  std::vector<unsigned char> bytes(std::begin(kMagic), std::end(kMagic));
  put_le<std::uint16_t>(bytes, kVersion);
  bytes.push_back(contents.feature_mode);
  bytes.push_back(contents.class_count);
  for (const double p : contents.parameters) put_le<double>(bytes, p);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("classifier", "cannot write model " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("classifier", "cannot write model " + path.string());
}

Contents read(const std::filesystem::path& path, std::size_t (*dim_for_mode)(std::uint8_t)) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("classifier", "cannot open model " + path.string());
  const std::vector<unsigned char> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  const std::string where = "model " + path.string();
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw FormatError("classifier", where + ": bad magic bytes, not a BCND model");
  }
  const auto version = static_cast<std::uint16_t>(get_le(bytes.data() + 4, 2));
  if (version != kVersion) {
    throw FormatError("classifier", where + ": unsupported format version " + std::to_string(version) +
                                        " (expected " + std::to_string(kVersion) + ")");
  }
  Contents contents;
  contents.feature_mode = bytes[6];
  contents.class_count = bytes[7];
  const std::size_t dim = dim_for_mode(contents.feature_mode);
  if (dim == 0) throw FormatError("classifier", where + ": unknown feature mode");
  if (contents.class_count < 2) throw FormatError("classifier", where + ": class count below 2");
  const std::size_t count = static_cast<std::size_t>(contents.class_count) * (dim + 1);
  if (bytes.size() != 8 + 8 * count) {
    throw FormatError("classifier", where + ": expected " + std::to_string(8 + 8 * count) + " bytes, found " +
                                        std::to_string(bytes.size()) + " (truncated or corrupt)");
  }
  contents.parameters.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    contents.parameters[i] = std::bit_cast<double>(get_le(bytes.data() + 8 + 8 * i, 8));
  }
  return contents;
}

}  // namespace bcond::model_file
