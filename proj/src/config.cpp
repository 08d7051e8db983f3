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

#include "bcond/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "bcond/error.hpp"
#include "bcond/rng.hpp"
#include "csv.hpp"

namespace bcond {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value) {
  throw InvalidArgument("cli", "invalid value '" + std::string(value) + "' for config key '" + std::string(key) + "'");
}

double to_double(std::string_view key, std::string_view value) {
  double v = 0.0;
  const auto r = std::from_chars(value.data(), value.data() + value.size(), v);
  if (r.ec != std::errc() || r.ptr != value.data() + value.size() || !std::isfinite(v)) bad_value(key, value);
  return v;
}

template <typename Int>
Int to_int(std::string_view key, std::string_view value) {
  Int v{};
  const auto r = std::from_chars(value.data(), value.data() + value.size(), v);
  if (r.ec != std::errc() || r.ptr != value.data() + value.size()) bad_value(key, value);
  return v;
}

std::string join_ints(const std::vector<int>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) out += (i ? "," : "") + std::to_string(values[i]);
  return out;
}

}  // namespace

void PipelineConfig::apply_seed(std::uint64_t value) {
  seed = value;
  selection.seed = value;
  train.seed = value;
}

void PipelineConfig::validate() const {
  if (selection.scales.empty()) throw InvalidArgument("cli", "at least one patch scale is required");
  for (const int s : selection.scales) {
    if (s < 4) throw InvalidArgument("cli", "patch scales must be >= 4 pixels");
  }
  if (!(selection.stride_fraction > 0.0 && selection.stride_fraction <= 1.0)) {
    throw InvalidArgument("cli", "stride_fraction must lie in (0, 1]");
  }
  if (selection.k < 1) throw InvalidArgument("cli", "k must be >= 1");
  if (!(selection.t > 0.0 && selection.t <= 1.0)) throw InvalidArgument("cli", "t must lie in (0, 1]");
  if (selection.max_side < 16) throw InvalidArgument("cli", "max_side must be >= 16");
  if (!(ambiguity_threshold >= 0.0 && ambiguity_threshold <= 1.0)) {
    throw InvalidArgument("cli", "ambiguity_threshold must lie in [0, 1]");
  }
  if (augment_factor < 1) throw InvalidArgument("cli", "augment_factor must be >= 1");
  train.validate();
  for (const double r : {ratios.training, ratios.validation, ratios.test}) {
    if (!(r > 0.0)) throw InvalidArgument("cli", "split ratios must be positive");
  }
  if (std::abs(ratios.training + ratios.validation + ratios.test - 1.0) > 1e-9) {
    throw InvalidArgument("cli", "split ratios must sum to 1");
  }
}

void set_config_value(PipelineConfig& c, std::string_view key, std::string_view value) {
  if (key == "scales") {
    std::vector<int> scales;
    for (const auto& part : csv::split(value)) scales.push_back(to_int<int>(key, trim(part)));
    c.selection.scales = std::move(scales);
  } else if (key == "stride_fraction") {
    c.selection.stride_fraction = to_double(key, value);
  } else if (key == "k") {
    c.selection.k = to_int<std::size_t>(key, value);
  } else if (key == "t") {
    c.selection.t = to_double(key, value);
  } else if (key == "max_side") {
    c.selection.max_side = to_int<int>(key, value);
  } else if (key == "ambiguity_threshold") {
    c.ambiguity_threshold = to_double(key, value);
  } else if (key == "method") {
    const auto m = parse_method(value);
    if (!m) bad_value(key, value);
    c.method = *m;
  } else if (key == "epochs") {
    c.train.epochs = to_int<std::size_t>(key, value);
  } else if (key == "learning_rate") {
    c.train.learning_rate = to_double(key, value);
  } else if (key == "momentum") {
    c.train.momentum = to_double(key, value);
  } else if (key == "weight_decay") {
    c.train.weight_decay = to_double(key, value);
  } else if (key == "lr_decay") {
    c.train.lr_decay = to_double(key, value);
  } else if (key == "batch_size") {
    c.train.batch_size = to_int<std::size_t>(key, value);
  } else if (key == "augment_factor") {
    c.augment_factor = to_int<std::size_t>(key, value);
  } else if (key == "feature_mode") {
    if (value == "descriptor") {
      c.feature_mode = FeatureMode::descriptor;
    } else if (value == "pixels") {
      c.feature_mode = FeatureMode::pixels;
    } else {
      bad_value(key, value);
    }
  } else if (key == "split") {
    const auto parts = csv::split(value);
    if (parts.size() != 3) bad_value(key, value);
    c.ratios = {to_double(key, trim(parts[0])), to_double(key, trim(parts[1])), to_double(key, trim(parts[2]))};
  } else if (key == "reference_year") {
    c.reference_year = to_int<int>(key, value);
  } else if (key == "seed") {
    c.apply_seed(to_int<std::uint64_t>(key, value));
  } else {
    throw InvalidArgument("cli", "unknown config key '" + std::string(key) + "'");
  }
}

PipelineConfig parse_config_text(std::string_view text, PipelineConfig base) {
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto end = text.find('\n');
    const auto line = trim(text.substr(0, end));
    text = end == std::string_view::npos ? std::string_view{} : text.substr(end + 1);
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw InvalidArgument("cli", "config line " + std::to_string(line_no) + " is not key=value");
    }
    set_config_value(base, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  base.validate();
  return base;
}

PipelineConfig load_config(const std::filesystem::path& path, PipelineConfig base) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cli", "cannot open config " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config_text(text.str(), std::move(base));
}

std::string serialize_config(const PipelineConfig& c) {
  using csv::format_double;
  std::ostringstream out;
  out << "scales=" << join_ints(c.selection.scales) << '\n'
      << "stride_fraction=" << format_double(c.selection.stride_fraction) << '\n'
      << "k=" << c.selection.k << '\n'
      << "t=" << format_double(c.selection.t) << '\n'
      << "max_side=" << c.selection.max_side << '\n'
      << "ambiguity_threshold=" << format_double(c.ambiguity_threshold) << '\n'
      << "method=" << to_string(c.method) << '\n'
      << "epochs=" << c.train.epochs << '\n'
      << "learning_rate=" << format_double(c.train.learning_rate) << '\n'
      << "momentum=" << format_double(c.train.momentum) << '\n'
      << "weight_decay=" << format_double(c.train.weight_decay) << '\n'
      << "lr_decay=" << format_double(c.train.lr_decay) << '\n'
      << "batch_size=" << c.train.batch_size << '\n'
      << "augment_factor=" << c.augment_factor << '\n'
      << "feature_mode=" << (c.feature_mode == FeatureMode::pixels ? "pixels" : "descriptor") << '\n'
      << "split=" << format_double(c.ratios.training) << ',' << format_double(c.ratios.validation) << ','
      << format_double(c.ratios.test) << '\n'
      << "reference_year=" << c.reference_year << '\n'
      << "seed=" << c.seed << '\n';
  return out.str();
}

std::string config_hash(const PipelineConfig& config) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(serialize_config(config))));
  return buf;
}

}  // namespace bcond
