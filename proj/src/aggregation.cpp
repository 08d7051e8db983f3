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

#include "bcond/aggregation.hpp"

#include <algorithm>
#include <istream>
#include <ostream>

#include "bcond/error.hpp"
#include "csv.hpp"

namespace bcond {

namespace {

constexpr double kTieTolerance = 1e-12;

}  // namespace

std::string_view to_string(AggregationMethod method) {
  return method == AggregationMethod::MV ? "MV" : "LH";
}

std::optional<AggregationMethod> parse_method(std::string_view text) {
  if (text == "MV" || text == "mv") return AggregationMethod::MV;
  if (text == "LH" || text == "lh") return AggregationMethod::LH;
  return std::nullopt;
}

std::vector<ClassLikelihoods> ambiguity_filter(std::span<const ClassLikelihoods> predictions, double threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw InvalidArgument("aggregation", "ambiguity threshold must lie in [0, 1]");
  }
  std::vector<ClassLikelihoods> kept;
  for (const auto& p : predictions) {
    if (p.margin() >= threshold) kept.push_back(p);
  }
  return kept;
}

std::optional<ConditionClass> majority_vote(std::span<const ClassLikelihoods> predictions) {
  if (predictions.empty()) return std::nullopt;
  std::array<std::size_t, kNumClasses> votes{};
  std::array<double, kNumClasses> sums{};
  for (const auto& p : predictions) {
    ++votes[index(p.argmax())];
    for (std::size_t c = 0; c < kNumClasses; ++c) sums[c] += p[c];
  }
  // Worst class first, so a better class has to win outright.
  std::size_t best = kNumClasses - 1;
  for (std::size_t c = kNumClasses - 1; c-- > 0;) {
    if (votes[c] > votes[best] || (votes[c] == votes[best] && sums[c] > sums[best] + kTieTolerance)) best = c;
  }
  return class_at(best);
}

std::optional<std::pair<ConditionClass, ClassLikelihoods>> average_likelihood(
    std::span<const ClassLikelihoods> predictions) {
  if (predictions.empty()) return std::nullopt;
  std::array<double, kNumClasses> mean{};
  for (const auto& p : predictions) {
    for (std::size_t c = 0; c < kNumClasses; ++c) mean[c] += p[c];
  }
  for (auto& v : mean) v /= static_cast<double>(predictions.size());
  const ClassLikelihoods averaged(mean);
  return std::make_pair(averaged.argmax(), averaged);
}

std::vector<PatchPrediction> classify_patches(std::span<const PatchRecord> patches, const PatchClassifier& model) {
  std::vector<PatchPrediction> out;
  out.reserve(patches.size());
  for (const auto& p : patches) out.push_back({p.spec, model.predict(p)});
  return out;
}

BuildingPrediction aggregate(const std::string& image_id, std::span<const PatchPrediction> patches,
                             AggregationMethod method, double threshold) {
  BuildingPrediction result;
  result.image_id = image_id;
  result.method = method;
  std::vector<ClassLikelihoods> all;
  for (const auto& p : patches) {
    all.push_back(p.likelihoods);
    result.max_patch_likelihood = std::max(result.max_patch_likelihood, p.likelihoods.top());
  }
  const auto kept = ambiguity_filter(all, threshold);
  result.n_patches_used = kept.size();
  if (method == AggregationMethod::MV) {
    result.verdict = majority_vote(kept);
  } else if (auto averaged = average_likelihood(kept)) {
    result.verdict = averaged->first;
    result.aggregate_likelihoods = averaged->second;
  }
  return result;
}

BuildingPrediction predict_building(const GrayImage& image, const std::string& image_id,
                                    const SelectionConfig& selection, const RelevanceModel* relevance,
                                    const PatchClassifier& model, AggregationMethod method, double threshold) {
  const auto patches = select_pipeline(image, image_id, selection, relevance);
  return aggregate(image_id, classify_patches(patches, model), method, threshold);
}

void write_predictions_csv(std::ostream& out, std::span<const BuildingPrediction> predictions) {
  out << "image_id,method,verdict,n_patches_used,p_A,p_B,p_C,max_patch_likelihood\n";
  for (const auto& p : predictions) {
    out << p.image_id << ',' << to_string(p.method) << ','
        << (p.verdict ? std::string(to_string(*p.verdict)) : std::string("undecidable")) << ','
        << p.n_patches_used;
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      out << ',';
      if (p.aggregate_likelihoods) out << csv::format_double((*p.aggregate_likelihoods)[c]);
    }
    out << ',' << csv::format_double(p.max_patch_likelihood) << '\n';
  }
}

std::vector<BuildingPrediction> read_predictions_csv(std::istream& in) {
  std::vector<BuildingPrediction> out;
  const auto rows = csv::read_rows(in, "aggregation");
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (r == 0 && !row.empty() && row[0] == "image_id") continue;
    if (row.size() != 8) {
      throw FormatError("aggregation", "prediction CSV row " + std::to_string(r + 1) + " needs 8 fields");
    }
    BuildingPrediction p;
    p.image_id = row[0];
    const auto method = parse_method(row[1]);
    if (!method) throw FormatError("aggregation", "unknown aggregation method '" + row[1] + "'");
    p.method = *method;
    if (row[2] != "undecidable") {
      p.verdict = parse_class(row[2]);
      if (!p.verdict) throw FormatError("aggregation", "unknown verdict '" + row[2] + "'");
    }
    p.n_patches_used = static_cast<std::size_t>(csv::parse_int(row[3], "aggregation"));
    if (!row[4].empty()) {
      p.aggregate_likelihoods = ClassLikelihoods({csv::parse_double(row[4], "aggregation"),
                                                  csv::parse_double(row[5], "aggregation"),
                                                  csv::parse_double(row[6], "aggregation")});
    }
    p.max_patch_likelihood = csv::parse_double(row[7], "aggregation");
    if (p.verdict.has_value() != (p.n_patches_used > 0)) {
      throw FormatError("aggregation", "row " + std::to_string(r + 1) +
                                           ": verdict must be undecidable exactly when no patch was used");
    }
    out.push_back(std::move(p));
  }
  return out;
}

void write_patch_predictions_csv(std::ostream& out, std::span<const PatchPrediction> patches) {
  out << "image_id,x,y,side,p_A,p_B,p_C\n";
  for (const auto& p : patches) {
    out << p.spec.image_id << ',' << p.spec.x << ',' << p.spec.y << ',' << p.spec.side;
    for (const double v : p.likelihoods.values()) out << ',' << csv::format_double(v);
    out << '\n';
  }
}

std::vector<PatchPrediction> read_patch_predictions_csv(std::istream& in) {
  std::vector<PatchPrediction> out;
  const auto rows = csv::read_rows(in, "aggregation");
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (r == 0 && !row.empty() && row[0] == "image_id") continue;
    if (row.size() != 7) {
      throw FormatError("aggregation", "patch prediction CSV row " + std::to_string(r + 1) + " needs 7 fields");
    }
    PatchPrediction p{{row[0], csv::parse_int(row[1], "aggregation"), csv::parse_int(row[2], "aggregation"),
                       csv::parse_int(row[3], "aggregation")},
                      ClassLikelihoods({csv::parse_double(row[4], "aggregation"),
                                        csv::parse_double(row[5], "aggregation"),
                                        csv::parse_double(row[6], "aggregation")})};
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace bcond
