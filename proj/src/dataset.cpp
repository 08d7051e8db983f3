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

#include "bcond/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <ctime>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "bcond/error.hpp"
#include "bcond/rng.hpp"

namespace bcond {

namespace {

constexpr int kEarliestYear = 1500;

int current_year() {
  const std::time_t now = std::time(nullptr);
  std::tm parts{};
  gmtime_r(&now, &parts);
  return parts.tm_year + 1900;
}

BuildingRecord parse_record(const nlohmann::json& item, std::size_t index, int max_year) {
  const std::string where = "manifest record " + std::to_string(index);
  if (!item.is_object()) throw ManifestError("dataset", where + " is not an object");
  const auto require = [&](const char* key) -> const nlohmann::json& {
    const auto it = item.find(key);
    if (it == item.end()) throw ManifestError("dataset", where + ": missing required field '" + key + "'");
    return *it;
  };

  BuildingRecord r;
  const auto& id = require("house_id");
  if (!id.is_string() || id.get<std::string>().empty()) {
    throw ManifestError("dataset", where + ": 'house_id' must be a non-empty string");
  }
  r.house_id = id.get<std::string>();
  if (r.house_id.find_first_of(",\n\r") != std::string::npos) {
    throw ManifestError("dataset", "house " + r.house_id + ": house_id must not contain commas or newlines");
  }
  const std::string house = "house " + r.house_id;

  const auto& images = require("images");
  if (!images.is_array()) throw ManifestError("dataset", house + ": 'images' must be an array");
  for (const auto& img : images) {
    if (!img.is_string() || img.get<std::string>().empty()) {
      throw ManifestError("dataset", house + ": image paths must be non-empty strings");
    }
    r.image_paths.push_back(img.get<std::string>());
  }
  if (r.image_paths.empty()) throw ManifestError("dataset", house + ": 'images' is empty");

  const auto& category = require("category");
  const auto parsed = category.is_string() ? parse_category(category.get<std::string>()) : std::nullopt;
  if (!parsed) {
    throw ManifestError("dataset", house + ": unrecognized condition category " + category.dump());
  }
  r.category = *parsed;

  const auto& year = require("year_built");
  if (!year.is_number_integer()) throw ManifestError("dataset", house + ": 'year_built' must be an integer");
  const auto y = year.get<long long>();
  if (y < kEarliestYear || y > max_year) {
    throw ManifestError("dataset", house + ": year_built " + std::to_string(y) + " outside [" +
                                       std::to_string(kEarliestYear) + ", " + std::to_string(max_year) + "]");
  }
  r.year_built = static_cast<int>(y);

  if (const auto it = item.find("retained_value"); it != item.end() && !it->is_null()) {
    if (!it->is_number()) throw ManifestError("dataset", house + ": 'retained_value' must be a number");
    const double v = it->get<double>();
    if (!(v >= 0.0 && v <= 1.0)) {
      throw ManifestError("dataset", house + ": retained_value " + it->dump() + " outside [0, 1]");
    }
    r.retained_value = v;
  }
  if (const auto it = item.find("split"); it != item.end() && !it->is_null()) {
    const auto split = it->is_string() ? parse_split(it->get<std::string>()) : std::nullopt;
    if (!split) throw ManifestError("dataset", house + ": unknown split " + it->dump());
    r.split = split;
  }
  return r;
}

}  // namespace

std::string_view to_string(Split split) {
  switch (split) {
    case Split::training: return "training";
    case Split::validation: return "validation";
    case Split::test: return "test";
  }
  return "?";
}

std::optional<Split> parse_split(std::string_view text) {
  if (text == "training") return Split::training;
  if (text == "validation") return Split::validation;
  if (text == "test") return Split::test;
  return std::nullopt;
}

std::vector<BuildingRecord> parse_manifest_text(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ManifestError("dataset", std::string("manifest is not valid JSON: ") + e.what());
  }
  if (!doc.is_array()) throw ManifestError("dataset", "manifest must be a JSON array");
  const int max_year = current_year();
  std::vector<BuildingRecord> records;
  std::set<std::string> seen;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    auto record = parse_record(doc[i], i, max_year);
    if (!seen.insert(record.house_id).second) {
      throw ManifestError("dataset", "house " + record.house_id + ": duplicate house_id");
    }
    records.push_back(std::move(record));
  }
  return records;
}

std::vector<BuildingRecord> parse_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("dataset", "cannot open manifest " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_manifest_text(text.str());
}

std::string manifest_to_json(std::span<const BuildingRecord> records) {
  nlohmann::ordered_json doc = nlohmann::ordered_json::array();
  for (const auto& r : records) {
    nlohmann::ordered_json item;
    item["house_id"] = r.house_id;
    item["images"] = r.image_paths;
    item["category"] = to_string(r.category);
    item["year_built"] = r.year_built;
    if (r.retained_value) item["retained_value"] = *r.retained_value;
    if (r.split) item["split"] = std::string(to_string(*r.split));
    doc.push_back(std::move(item));
  }
  return doc.dump(2) + "\n";
}

void write_manifest(const std::filesystem::path& path, std::span<const BuildingRecord> records) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("dataset", "cannot write manifest " + path.string());
  out << manifest_to_json(records);
  if (!out) throw IoError("dataset", "cannot write manifest " + path.string());
}

std::vector<BuildingRecord> DatasetSplit::tagged() const {
  std::vector<BuildingRecord> out;
  const auto append = [&out](const std::vector<BuildingRecord>& part, Split split) {
    for (auto r : part) {
      r.split = split;
      out.push_back(std::move(r));
    }
  };
  append(training, Split::training);
  append(validation, Split::validation);
  append(test, Split::test);
  return out;
}

namespace {

std::array<double, 3> ratio_array(const SplitRatios& r) { return {r.training, r.validation, r.test}; }

void validate_ratios(const SplitRatios& ratios) {
  const auto r = ratio_array(ratios);
  for (const double v : r) {
    if (!(v > 0.0)) throw InvalidArgument("dataset", "split ratios must be positive");
  }
  if (std::abs(r[0] + r[1] + r[2] - 1.0) > 1e-9) throw InvalidArgument("dataset", "split ratios must sum to 1");
}

}  // namespace

std::array<std::size_t, 3> apportion(std::size_t n, const SplitRatios& ratios) {
  const auto r = ratio_array(ratios);
  std::array<std::size_t, 3> sizes{};
  std::array<double, 3> remainder{};
  std::size_t assigned = 0;
  for (std::size_t s = 0; s < 3; ++s) {
    const double exact = r[s] * static_cast<double>(n);
    sizes[s] = static_cast<std::size_t>(std::floor(exact + 1e-9));
    remainder[s] = exact - static_cast<double>(sizes[s]);
    assigned += sizes[s];
  }
  while (assigned < n) {
    std::size_t best = 0;
    for (std::size_t s = 1; s < 3; ++s) {
      if (remainder[s] > remainder[best] + 1e-12) best = s;
    }
    ++sizes[best];
    remainder[best] = -1.0;
    ++assigned;
  }
  return sizes;
}

DatasetSplit partition(std::span<const BuildingRecord> records, const SplitRatios& ratios, std::uint64_t seed) {
  validate_ratios(ratios);
  if (records.empty()) throw InvalidArgument("dataset", "cannot partition an empty dataset");
  const auto r = ratio_array(ratios);

  std::array<std::vector<std::size_t>, kNumClasses> by_class;
  for (std::size_t i = 0; i < records.size(); ++i) by_class[index(records[i].condition_class())].push_back(i);
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    const auto n = by_class[c].size();
    if (n > 0 && n < 3) {
      throw ManifestError("dataset", "class " + std::string(to_string(class_at(c))) + " has only " +
                                         std::to_string(n) +
                                         " houses; a stratified three-way split needs at least 3 per class. "
                                         "Use a two-way split or add houses of that class");
    }
    Rng rng(mix_seed(seed, c));
    rng.shuffle(std::span<std::size_t>(by_class[c]));
  }

  // Per-class sizes: floor of ratio x count, plus one in a subset of cells
  // chosen so that row sums are the class counts and column sums the overall
  // apportioned split sizes. With three classes and three splits all 2^9
  // choices are enumerated, preferring cells with larger fractional parts.
  const auto totals = apportion(records.size(), ratios);
  std::array<std::array<std::size_t, 3>, kNumClasses> base{};
  std::array<std::array<double, 3>, kNumClasses> frac{};
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    for (std::size_t s = 0; s < 3; ++s) {
      const double exact = r[s] * static_cast<double>(by_class[c].size());
      base[c][s] = static_cast<std::size_t>(std::floor(exact + 1e-9));
      frac[c][s] = std::max(0.0, exact - static_cast<double>(base[c][s]));
    }
  }
  int best_mask = -1;
  double best_score = -1.0;
  for (int mask = 0; mask < (1 << 9); ++mask) {
    bool ok = true;
    double score = 0.0;
    std::array<std::size_t, 3> col{};
    for (std::size_t c = 0; c < kNumClasses && ok; ++c) {
      std::size_t row = 0;
      for (std::size_t s = 0; s < 3; ++s) {
        const std::size_t cell = base[c][s] + ((mask >> (3 * c + s)) & 1);
        row += cell;
        col[s] += cell;
        if ((mask >> (3 * c + s)) & 1) score += frac[c][s];
      }
      ok = row == by_class[c].size();
    }
    ok = ok && col == totals;
    if (ok && score > best_score + 1e-12) {
      best_score = score;
      best_mask = mask;
    }
  }
  if (best_mask < 0) throw InvalidArgument("dataset", "no stratified allocation matches the split sizes");

  std::array<std::vector<std::size_t>, 3> members;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    std::size_t pos = 0;
    for (std::size_t s = 0; s < 3; ++s) {
      const std::size_t count = base[c][s] + ((best_mask >> (3 * c + s)) & 1);
      for (std::size_t k = 0; k < count; ++k) members[s].push_back(by_class[c][pos++]);
    }
  }
  DatasetSplit split;
  std::array<std::vector<BuildingRecord>*, 3> parts = {&split.training, &split.validation, &split.test};
  for (std::size_t s = 0; s < 3; ++s) {
    std::sort(members[s].begin(), members[s].end());
    for (const auto i : members[s]) parts[s]->push_back(records[i]);
  }
  return split;
}

std::filesystem::path resolve_image(const std::filesystem::path& manifest_dir, const std::string& image_path) {
  const std::filesystem::path p(image_path);
  return p.is_absolute() ? p : manifest_dir / p;
}

}  // namespace bcond
