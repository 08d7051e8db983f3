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

#include "bcond/commands.hpp"

#include <CLI11.hpp>
#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "bcond/aggregation.hpp"
#include "bcond/config.hpp"
#include "bcond/dataset.hpp"
#include "bcond/error.hpp"
#include "bcond/evaluation.hpp"
#include "bcond/regression.hpp"
#include "bcond/synth.hpp"
#include "csv.hpp"

namespace bcond {

void parallel_for(std::size_t count, std::size_t workers, const std::function<void(std::size_t)>& job) {
  std::vector<std::exception_ptr> errors(count);
  const auto guarded = [&](std::size_t i) {
    try {
      job(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(count, 1));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) guarded(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < count; i = next++) guarded(i);
      });
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

namespace {

using ojson = nlohmann::ordered_json;
namespace fs = std::filesystem;

struct Context {
  std::string command;
  PipelineConfig config;
  std::string hash;
  fs::path out_dir;
  std::size_t workers = 1;
  std::shared_ptr<spdlog::logger> log;
  std::ostream* out = nullptr;

  std::string comment_block() const {
    std::ostringstream s;
    s << "# bcond " << command << '\n' << "# config_hash=" << hash << '\n' << "# seed=" << config.seed << '\n';
    std::istringstream lines(serialize_config(config));
    for (std::string line; std::getline(lines, line);) s << "# config: " << line << '\n';
    return s.str();
  }

  ojson provenance() const {
    ojson cfg = ojson::object();
    std::istringstream lines(serialize_config(config));
    for (std::string line; std::getline(lines, line);) {
      const auto eq = line.find('=');
      cfg[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return {{"command", command}, {"config_hash", hash}, {"seed", config.seed}, {"config", cfg}};
  }

  fs::path output(const std::string& name) const { return out_dir / name; }
};

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cli", "cannot create output directory " + dir.string() + ": " + ec.message());
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cli", "cannot write " + path.string());
  f << text;
  if (!f) throw IoError("cli", "cannot write " + path.string());
}

std::ifstream open_input(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cli", "cannot open " + path.string());
  return f;
}

std::string one_line(std::string text) {
  std::replace(text.begin(), text.end(), '\n', ' ');
  std::replace(text.begin(), text.end(), '\r', ' ');
  return text;
}

// --- dataset plumbing --------------------------------------------------------

struct Dataset {
  std::vector<BuildingRecord> records;
  fs::path dir;
  /// image_id -> (record index, image index)
  std::map<std::string, std::pair<std::size_t, std::size_t>> images;

  const BuildingRecord& owner(const std::string& image_id) const {
    const auto it = images.find(image_id);
    if (it == images.end()) throw ManifestError("dataset", "image " + image_id + " is not in the manifest");
    return records[it->second.first];
  }
};

/// Loads a manifest. With needs_split, untagged houses are tagged with the
/// configured split.
Dataset load_dataset(const fs::path& manifest, const Context& ctx, bool needs_split) {
  Dataset d;
  d.records = parse_manifest(manifest);
  d.dir = manifest.parent_path();
  const bool tagged = std::all_of(d.records.begin(), d.records.end(), [](const auto& r) { return r.split.has_value(); });
  if (needs_split && !tagged && !d.records.empty()) {
    ctx.log->info("manifest has no complete split; partitioning {} houses with seed {}", d.records.size(),
                  ctx.config.seed);
    const auto split = partition(d.records, ctx.config.ratios, ctx.config.seed);
    std::map<std::string, Split> by_house;
    for (const auto& r : split.tagged()) by_house[r.house_id] = *r.split;
    for (auto& r : d.records) r.split = by_house.at(r.house_id);
  }
  for (std::size_t i = 0; i < d.records.size(); ++i) {
    for (std::size_t j = 0; j < d.records[i].image_paths.size(); ++j) {
      if (!d.images.emplace(d.records[i].image_id(j), std::make_pair(i, j)).second) {
        throw ManifestError("dataset", "house " + d.records[i].house_id + ": image id " + d.records[i].image_id(j) +
                                           " is not unique");
      }
    }
  }
  return d;
}

struct ImageRef {
  std::size_t record = 0;
  std::size_t image = 0;
  std::string id;
};

std::vector<ImageRef> images_of(const Dataset& d, std::optional<Split> split) {
  std::vector<ImageRef> out;
  for (std::size_t i = 0; i < d.records.size(); ++i) {
    if (split && d.records[i].split != split) continue;
    for (std::size_t j = 0; j < d.records[i].image_paths.size(); ++j) out.push_back({i, j, d.records[i].image_id(j)});
  }
  return out;
}

GrayImage load_image(const Dataset& d, const ImageRef& ref, int max_side) {
  const auto path = resolve_image(d.dir, d.records[ref.record].image_paths[ref.image]);
  return limit_long_side(load_gray(path), max_side);
}

void attach_pixels(std::vector<PatchRecord>& patches, const GrayImage& image) {
  for (auto& p : patches) p.pixels = crop(image, p.spec);
}

std::map<std::string, std::vector<PatchRecord>> group_by_image(std::vector<PatchRecord> patches) {
  std::map<std::string, std::vector<PatchRecord>> out;
  for (auto& p : patches) out[p.spec.image_id].push_back(std::move(p));
  return out;
}

std::vector<PatchRecord> read_patches(const fs::path& path) {
  auto in = open_input(path);
  return read_descriptor_csv(in);
}

std::optional<Split> parse_split_filter(const std::string& text) {
  if (text == "all") return std::nullopt;
  const auto s = parse_split(text);
  if (!s) throw InvalidArgument("cli", "unknown split '" + text + "' (training, validation, test or all)");
  return s;
}

// --- commands --------------------------------------------------------------

struct SynthOptions {
  std::string counts = "100,100,100";
  int image_size = 256;
  std::size_t images_per_house = 1;
};

int cmd_synth(const Context& ctx, const SynthOptions& o) {
  SynthSpec spec;
  const auto parts = csv::split(o.counts);
  if (parts.size() != kNumClasses) throw InvalidArgument("cli", "--counts needs three comma-separated values");
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    const int v = csv::parse_int(parts[c], "cli");
    if (v < 0) throw InvalidArgument("cli", "--counts values must be >= 0");
    spec.counts[c] = static_cast<std::size_t>(v);
  }
  spec.image_size = o.image_size;
  spec.images_per_house = o.images_per_house;
  spec.seed = ctx.config.seed;

  auto records = synth_generate(spec, ctx.out_dir);
  if (records.empty()) {
    ctx.log->info("no houses requested; nothing written");
    *ctx.out << "synth: 0 houses\n";
    return 0;
  }
  const auto split = partition(records, ctx.config.ratios, ctx.config.seed);
  std::map<std::string, Split> by_house;
  for (const auto& r : split.tagged()) by_house[r.house_id] = *r.split;
  for (auto& r : records) r.split = by_house.at(r.house_id);
  write_manifest(ctx.output("manifest.json"), records);

  auto meta = ctx.provenance();
  meta["counts"] = spec.counts;
  meta["image_size"] = spec.image_size;
  meta["images_per_house"] = spec.images_per_house;
  meta["split_sizes"] = {split.training.size(), split.validation.size(), split.test.size()};
  write_text(ctx.output("manifest.meta.json"), meta.dump(2) + "\n");
  *ctx.out << "synth: " << records.size() << " houses -> " << ctx.output("manifest.json").string() << '\n';
  return 0;
}

/// Writes crops/{image_id}_{x}_{y}_{side}.png and crops/index.csv.
void dump_crops(const Context& ctx, const std::vector<PatchRecord>& patches) {
  const auto dir = ctx.output("crops");
  ensure_dir(dir);
  std::ostringstream index;
  index << ctx.comment_block() << "file,image_id,x,y,side,raw_norm\n";
  for (const auto& p : patches) {
    const std::string name = p.spec.image_id + "_" + std::to_string(p.spec.x) + "_" + std::to_string(p.spec.y) + "_" +
                             std::to_string(p.spec.side) + ".png";
    save_png(dir / name, *p.pixels);
    index << name << ',' << p.spec.image_id << ',' << p.spec.x << ',' << p.spec.y << ',' << p.spec.side << ','
          << csv::format_double(p.descriptor.raw_norm) << '\n';
  }
  write_text(dir / "index.csv", index.str());
}

int cmd_extract(const Context& ctx, const fs::path& manifest, const std::string& relevance_path, bool crops) {
  const auto data = load_dataset(manifest, ctx, false);
  std::optional<LogisticRelevanceModel> relevance;
  if (!relevance_path.empty()) relevance = load_relevance_model(relevance_path);
  const auto refs = images_of(data, std::nullopt);
  std::vector<std::vector<PatchRecord>> per_image(refs.size());
  auto selection = ctx.config.selection;
  selection.keep_pixels = crops;
  parallel_for(refs.size(), ctx.workers, [&](std::size_t i) {
    const auto image = load_image(data, refs[i], selection.max_side);
    per_image[i] = select_pipeline(image, refs[i].id, selection, relevance ? &*relevance : nullptr);
  });
  std::vector<PatchRecord> all;
  for (std::size_t i = 0; i < refs.size(); ++i) {
    ctx.log->debug("{}: {} patches", refs[i].id, per_image[i].size());
    for (auto& p : per_image[i]) all.push_back(std::move(p));
  }
  std::ostringstream text;
  text << ctx.comment_block();
  write_descriptor_csv(text, all);
  write_text(ctx.output("patches.csv"), text.str());
  if (crops) dump_crops(ctx, all);
  *ctx.out << "extract: " << all.size() << " patches from " << refs.size() << " images\n";
  return 0;
}

struct RelevanceOptions {
  std::string samples_dir;
  std::size_t synthetic_per_class = 40;
  int patch_side = 64;
};

int cmd_train_relevance(const Context& ctx, const RelevanceOptions& o) {
  const auto& labels = default_relevance_labels();
  std::vector<LabeledDescriptor> samples;
  if (!o.samples_dir.empty()) {
    for (std::size_t label = 0; label < labels.size(); ++label) {
      const fs::path dir = fs::path(o.samples_dir) / labels[label];
      if (!fs::is_directory(dir)) continue;
      std::vector<fs::path> files;
      for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file()) files.push_back(entry.path());
      }
      std::sort(files.begin(), files.end());
      for (const auto& f : files) samples.push_back({describe_image(load_gray(f)), label});
    }
  } else {
    for (const auto& s : synth_relevance_patches(o.synthetic_per_class, o.patch_side, ctx.config.seed)) {
      samples.push_back({describe_image(s.patch), s.label});
    }
  }
  const auto trained = train_relevance(samples, ctx.config.train, labels.size());
  std::size_t correct = 0;
  for (const auto& s : samples) {
    const auto p = trained.model.likelihoods(PatchRecord{{}, s.descriptor, std::nullopt});
    correct += static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin()) == s.label;
  }
  const auto path = ctx.output("relevance.bin");
  save_relevance_model(trained.model, path);
  auto meta = ctx.provenance();
  meta["labels"] = labels;
  meta["n_samples"] = samples.size();
  meta["training_accuracy"] = static_cast<double>(correct) / static_cast<double>(samples.size());
  meta["loss_trace"] = trained.loss_trace;
  write_text(path.string() + ".meta.json", meta.dump(2) + "\n");
  *ctx.out << "train-relevance: " << samples.size() << " samples, training accuracy "
           << meta["training_accuracy"].get<double>() << '\n';
  return 0;
}

/// Patches of the given split, labeled with their house's class; pixels are
/// re-cut from the images when the configuration needs them.
std::vector<LabeledPatch> labeled_patches(const Context& ctx, const Dataset& data,
                                          std::map<std::string, std::vector<PatchRecord>>& by_image, Split split,
                                          bool need_pixels) {
  std::vector<LabeledPatch> out;
  for (const auto& ref : images_of(data, split)) {
    const auto it = by_image.find(ref.id);
    if (it == by_image.end() || it->second.empty()) continue;
    if (need_pixels) attach_pixels(it->second, load_image(data, ref, ctx.config.selection.max_side));
    const auto label = data.records[ref.record].condition_class();
    for (const auto& p : it->second) out.push_back({p, label});
  }
  return out;
}

double patch_accuracy(const ConditionModel& model, std::span<const LabeledPatch> patches) {
  if (patches.empty()) return 0.0;
  std::size_t correct = 0;
  for (const auto& p : patches) correct += model.predict(p.patch).argmax() == p.label;
  return static_cast<double>(correct) / static_cast<double>(patches.size());
}

int cmd_train_condition(const Context& ctx, const fs::path& manifest, const fs::path& patches_path) {
  const auto data = load_dataset(manifest, ctx, true);
  auto by_image = group_by_image(read_patches(patches_path));
  for (const auto& [id, _] : by_image) data.owner(id);
  const bool need_pixels = ctx.config.augment_factor > 1 || ctx.config.feature_mode == FeatureMode::pixels;
  const auto training = labeled_patches(ctx, data, by_image, Split::training, need_pixels);
  const auto validation = labeled_patches(ctx, data, by_image, Split::validation, need_pixels);
  ctx.log->info("training on {} patches ({} validation)", training.size(), validation.size());

  const auto trained = train_condition(training, ctx.config.train, ctx.config.augment_factor, ctx.config.feature_mode);
  const auto path = ctx.output("model.bin");
  save_model(trained.model, path);

  std::ostringstream loss;
  loss << ctx.comment_block() << "epoch,loss\n";
  for (std::size_t e = 0; e < trained.loss_trace.size(); ++e) {
    loss << e + 1 << ',' << csv::format_double(trained.loss_trace[e]) << '\n';
  }
  write_text(ctx.output("loss.csv"), loss.str());

  auto meta = ctx.provenance();
  std::array<std::size_t, kNumClasses> counts{};
  for (const auto& p : training) ++counts[index(p.label)];
  meta["n_training_patches"] = counts;
  meta["n_validation_patches"] = validation.size();
  meta["training_accuracy"] = patch_accuracy(trained.model, training);
  meta["validation_accuracy"] = validation.empty() ? ojson(nullptr) : ojson(patch_accuracy(trained.model, validation));
  meta["final_loss"] = trained.loss_trace.back();
  write_text(path.string() + ".meta.json", meta.dump(2) + "\n");
  *ctx.out << "train-condition: " << training.size() << " patches, training accuracy "
           << meta["training_accuracy"].get<double>() << '\n';
  return 0;
}

struct PredictOptions {
  std::string model;
  std::string patches;
  std::string relevance;
  std::string split = "test";
};

int cmd_predict(const Context& ctx, const fs::path& manifest, const PredictOptions& o) {
  const auto data = load_dataset(manifest, ctx, o.split != "all");
  const auto model = load_model(o.model);
  const bool need_pixels = model.mode() == FeatureMode::pixels;
  std::optional<LogisticRelevanceModel> relevance;
  if (!o.relevance.empty()) {
    if (!o.patches.empty()) throw InvalidArgument("cli", "--relevance applies only when patches are recomputed");
    relevance = load_relevance_model(o.relevance);
  }
  std::map<std::string, std::vector<PatchRecord>> stored;
  if (!o.patches.empty()) stored = group_by_image(read_patches(o.patches));

  const auto refs = images_of(data, parse_split_filter(o.split));
  std::vector<std::vector<PatchPrediction>> patch_preds(refs.size());
  std::vector<std::array<BuildingPrediction, 2>> verdicts(refs.size());
  parallel_for(refs.size(), ctx.workers, [&](std::size_t i) {
    std::vector<PatchRecord> patches;
    if (!o.patches.empty()) {
      if (const auto it = stored.find(refs[i].id); it != stored.end()) patches = it->second;
      if (need_pixels && !patches.empty()) {
        attach_pixels(patches, load_image(data, refs[i], ctx.config.selection.max_side));
      }
    } else {
      auto selection = ctx.config.selection;
      selection.keep_pixels = need_pixels;
      patches = select_pipeline(load_image(data, refs[i], selection.max_side), refs[i].id, selection,
                                relevance ? &*relevance : nullptr);
    }
    patch_preds[i] = classify_patches(patches, model);
    verdicts[i] = {aggregate(refs[i].id, patch_preds[i], AggregationMethod::MV, ctx.config.ambiguity_threshold),
                   aggregate(refs[i].id, patch_preds[i], AggregationMethod::LH, ctx.config.ambiguity_threshold)};
  });

  std::vector<BuildingPrediction> rows;
  std::vector<PatchPrediction> all_patches;
  std::size_t undecidable = 0;
  for (std::size_t i = 0; i < refs.size(); ++i) {
    rows.push_back(verdicts[i][0]);
    rows.push_back(verdicts[i][1]);
    undecidable += !verdicts[i][0].verdict;
    all_patches.insert(all_patches.end(), patch_preds[i].begin(), patch_preds[i].end());
  }
  std::ostringstream text;
  text << ctx.comment_block();
  write_predictions_csv(text, rows);
  write_text(ctx.output("predictions.csv"), text.str());
  std::ostringstream patch_text;
  patch_text << ctx.comment_block();
  write_patch_predictions_csv(patch_text, all_patches);
  write_text(ctx.output("patch_predictions.csv"), patch_text.str());
  *ctx.out << "predict: " << refs.size() << " images, " << undecidable << " undecidable\n";
  return 0;
}

ojson matrix_json(const ConfusionMatrix& m) {
  ojson rows = ojson::array();
  for (const auto& r : m.counts) rows.push_back(r);
  return rows;
}

ojson optional_number(std::optional<double> v) { return v ? ojson(*v) : ojson(nullptr); }

int cmd_evaluate(const Context& ctx, const fs::path& manifest, const fs::path& predictions_path,
                 const std::string& patch_predictions_path, std::size_t max_exemplars) {
  const auto data = load_dataset(manifest, ctx, false);
  auto in = open_input(predictions_path);
  const auto predictions = read_predictions_csv(in);
  if (predictions.empty()) throw InvalidArgument("evaluation", "predictions file has no rows");

  std::vector<std::string> image_order;
  std::map<std::string, std::array<std::optional<BuildingPrediction>, 2>> by_image;
  for (const auto& p : predictions) {
    data.owner(p.image_id);
    auto& slot = by_image[p.image_id];
    if (!slot[0] && !slot[1]) image_order.push_back(p.image_id);
    slot[p.method == AggregationMethod::MV ? 0 : 1] = p;
  }

  std::vector<ConditionClass> all_truth;
  std::array<std::vector<ConditionClass>, 2> truth, predicted;
  std::vector<double> ages, predicted_ordinal;
  std::size_t undecidable = 0;
  // source (true, MV, LH) x class: sum and count of retained values
  std::array<std::array<std::pair<double, std::size_t>, kNumClasses>, 3> value_sums{};
  for (const auto& id : image_order) {
    const auto& house = data.owner(id);
    const auto cls = house.condition_class();
    all_truth.push_back(cls);
    if (house.retained_value) {
      value_sums[0][index(cls)].first += *house.retained_value;
      ++value_sums[0][index(cls)].second;
    }
    bool decided = true;
    for (std::size_t m = 0; m < 2; ++m) {
      const auto& p = by_image[id][m];
      if (!p) continue;
      if (!p->verdict) {
        decided = false;
        continue;
      }
      truth[m].push_back(cls);
      predicted[m].push_back(*p->verdict);
      if (house.retained_value) {
        value_sums[m + 1][index(*p->verdict)].first += *house.retained_value;
        ++value_sums[m + 1][index(*p->verdict)].second;
      }
      if (m == 0) {
        ages.push_back(static_cast<double>(ctx.config.reference_year - house.year_built));
        predicted_ordinal.push_back(ordinal(*p->verdict));
      }
    }
    undecidable += !decided;
  }

  const auto mv = confuse(truth[0], predicted[0]);
  const auto lh = confuse(truth[1], predicted[1]);
  const auto safe_accuracy = [](const ConfusionMatrix& m) -> std::optional<double> {
    if (m.total() == 0) return std::nullopt;
    return accuracy(m);
  };
  std::optional<double> correlation;
  try {
    correlation = pearson(ages, predicted_ordinal);
  } catch (const InvalidArgument& e) {
    ctx.log->warn("age/condition correlation undefined: {}", e.what());
  }

  auto metrics = ctx.provenance();
  metrics["n_images"] = image_order.size();
  metrics["confusion_mv"] = matrix_json(mv);
  metrics["confusion_lh"] = matrix_json(lh);
  metrics["accuracy_mv"] = optional_number(safe_accuracy(mv));
  metrics["accuracy_lh"] = optional_number(safe_accuracy(lh));
  metrics["zero_rule"] = zero_rule(all_truth);
  metrics["n_undecidable"] = undecidable;
  metrics["pearson_age_condition"] = optional_number(correlation);
  write_text(ctx.output("metrics.json"), metrics.dump(2) + "\n");

  std::ostringstream bars;
  bars << ctx.comment_block() << "source,class,n,mean_retained_value\n";
  const std::array<const char*, 3> sources = {"true", "MV", "LH"};
  for (std::size_t s = 0; s < 3; ++s) {
    for (const auto c : kAllClasses) {
      const auto [sum, n] = value_sums[s][index(c)];
      bars << sources[s] << ',' << to_string(c) << ',' << n << ','
           << (n ? csv::format_double(sum / static_cast<double>(n)) : std::string()) << '\n';
    }
  }
  write_text(ctx.output("discount_by_condition.csv"), bars.str());

  if (!patch_predictions_path.empty()) {
    auto pin = open_input(patch_predictions_path);
    std::vector<PatchObservation> observations;
    for (const auto& p : read_patch_predictions_csv(pin)) {
      observations.push_back({p.spec, data.owner(p.spec.image_id).condition_class(), p.likelihoods});
    }
    const auto ex = confidence_rank(observations, 0.99, ctx.config.ambiguity_threshold, max_exemplars);
    std::ostringstream rows;
    rows << ctx.comment_block() << "list,image_id,x,y,side,truth,p_A,p_B,p_C\n";
    const auto emit = [&rows](const std::string& list, const std::vector<PatchObservation>& items) {
      for (const auto& o : items) {
        rows << list << ',' << o.spec.image_id << ',' << o.spec.x << ',' << o.spec.y << ',' << o.spec.side << ','
             << to_string(o.truth);
        for (std::size_t c = 0; c < kNumClasses; ++c) rows << ',' << csv::format_double(o.likelihoods[c]);
        rows << '\n';
      }
    };
    for (const auto c : kAllClasses) emit("confident_" + std::string(to_string(c)), ex.confident[index(c)]);
    emit("ambiguous", ex.ambiguous);
    emit("non_neighbor", ex.non_neighbor);
    write_text(ctx.output("exemplars.csv"), rows.str());
  }

  *ctx.out << "evaluate: accuracy_mv=" << metrics["accuracy_mv"].dump() << " accuracy_lh="
           << metrics["accuracy_lh"].dump() << " zero_rule=" << metrics["zero_rule"].dump()
           << " n_undecidable=" << undecidable << '\n';
  return 0;
}

/// Majority over a house's image verdicts; ties go to the worse class.
std::optional<ConditionClass> house_verdict(const std::vector<ConditionClass>& votes) {
  if (votes.empty()) return std::nullopt;
  std::array<std::size_t, kNumClasses> counts{};
  for (const auto v : votes) ++counts[index(v)];
  std::size_t best = kNumClasses - 1;
  for (std::size_t c = kNumClasses - 1; c-- > 0;) {
    if (counts[c] > counts[best]) best = c;
  }
  return class_at(best);
}

int cmd_regress(const Context& ctx, const fs::path& manifest, const std::string& predictions_path) {
  const auto data = load_dataset(manifest, ctx, false);
  const bool any_response =
      std::any_of(data.records.begin(), data.records.end(), [](const auto& r) { return r.retained_value.has_value(); });
  if (!any_response) throw InvalidArgument("regression", "no regression response available");

  auto report = ctx.provenance();
  std::string table;
  if (predictions_path.empty()) {
    std::vector<RegressionObservation> observations;
    for (const auto& r : data.records) observations.push_back({r.year_built, r.condition_class(), r.retained_value});
    const auto design = build_design(observations);
    if (design.n_excluded) ctx.log->warn("{} houses without retained_value excluded", design.n_excluded);
    const auto fit = ols_fit(design.X, design.y);
    report["n_houses"] = fit.n;
    report["n_excluded"] = design.n_excluded;
    report["fits"] = {{"true", to_json(fit)}};
    table = format_fit(fit);
  } else {
    auto in = open_input(predictions_path);
    std::map<std::string, std::array<std::vector<ConditionClass>, 2>> votes;
    for (const auto& p : read_predictions_csv(in)) {
      const auto& house = data.owner(p.image_id);
      auto& slot = votes[house.house_id];
      if (p.verdict) slot[p.method == AggregationMethod::MV ? 0 : 1].push_back(*p.verdict);
    }
    std::vector<ComparisonRecord> records;
    std::size_t excluded = 0;
    for (const auto& r : data.records) {
      const auto it = votes.find(r.house_id);
      if (it == votes.end()) continue;
      const auto mv = house_verdict(it->second[0]);
      const auto lh = house_verdict(it->second[1]);
      if (!r.retained_value || !mv || !lh) {
        ++excluded;
        continue;
      }
      records.push_back({r.year_built, *r.retained_value, r.condition_class(), *mv, *lh});
    }
    if (excluded) ctx.log->warn("{} houses excluded (no response or undecidable)", excluded);
    const auto comparison = compare_models(records);
    report["n_houses"] = records.size();
    report["n_excluded"] = excluded;
    report["fits"] = to_json(comparison);
    table = format_comparison(comparison);
  }
  write_text(ctx.output("regression.json"), report.dump(2) + "\n");
  write_text(ctx.output("regression.txt"), ctx.comment_block() + table);
  *ctx.out << table;
  return 0;
}

spdlog::level::level_enum log_level(std::ostream& err) {
  const char* env = std::getenv("BCOND_LOG");
  const std::string value = env ? env : "info";
  if (value == "error") return spdlog::level::err;
  if (value == "info") return spdlog::level::info;
  if (value == "debug") return spdlog::level::debug;
  err << "warning: BCOND_LOG must be error, info or debug; using info\n";
  return spdlog::level::info;
}

std::size_t default_workers() { return std::max(1u, std::thread::hardware_concurrency()); }

}  // namespace

int run(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Building condition estimation from exterior photographs", "bcond"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::uint64_t seed = 0;
  std::size_t workers = default_workers();
  std::string out_dir = ".";
  std::vector<std::string> overrides;
  const auto* seed_opt = app.add_option("--seed", seed, "random seed (overrides the config)");
  app.add_option("--config", config_path, "key=value configuration file")->check(CLI::ExistingFile);
  app.add_option("--workers", workers, "worker threads for extract and predict")->check(CLI::PositiveNumber);
  app.add_option("--out", out_dir, "output directory")->capture_default_str();
  app.add_option("--set", overrides, "override a config key, e.g. --set k=40");

  SynthOptions synth_opts;
  auto* synth = app.add_subcommand("synth", "generate a synthetic facade dataset");
  synth->add_option("--counts", synth_opts.counts, "houses per class A,B,C")->capture_default_str();
  synth->add_option("--image-size", synth_opts.image_size, "image side in pixels")->capture_default_str();
  synth->add_option("--images-per-house", synth_opts.images_per_house)->capture_default_str();

  std::string manifest;
  std::string relevance;
  auto* extract = app.add_subcommand("extract", "select patches of every manifest image");
  extract->add_option("--manifest", manifest, "dataset manifest")->required();
  extract->add_option("--relevance", relevance, "relevance model (optional)");
  bool dump = false;
  extract->add_flag("--dump-crops", dump, "also write PNG crops and an index CSV");

  RelevanceOptions relevance_opts;
  auto* train_rel = app.add_subcommand("train-relevance", "train the patch relevance filter");
  train_rel->add_option("--samples", relevance_opts.samples_dir, "directory with one sub-directory per label");
  train_rel->add_option("--synthetic", relevance_opts.synthetic_per_class, "synthetic samples per label")
      ->capture_default_str();
  train_rel->add_option("--patch-side", relevance_opts.patch_side)->capture_default_str();

  std::string patches;
  auto* train_cond = app.add_subcommand("train-condition", "train the patch condition classifier");
  train_cond->add_option("--manifest", manifest)->required();
  train_cond->add_option("--patches", patches, "patches CSV from extract")->required();

  PredictOptions predict_opts;
  auto* predict_cmd = app.add_subcommand("predict", "predict the condition of every image in a split");
  predict_cmd->add_option("--manifest", manifest)->required();
  predict_cmd->add_option("--model", predict_opts.model)->required();
  predict_cmd->add_option("--patches", predict_opts.patches, "reuse a patches CSV instead of re-selecting");
  predict_cmd->add_option("--relevance", predict_opts.relevance);
  predict_cmd->add_option("--split", predict_opts.split, "training, validation, test or all")->capture_default_str();

  std::string predictions;
  std::string patch_predictions;
  std::size_t max_exemplars = 20;
  auto* evaluate = app.add_subcommand("evaluate", "confusion matrices, accuracy and correlation");
  evaluate->add_option("--manifest", manifest)->required();
  evaluate->add_option("--predictions", predictions)->required();
  evaluate->add_option("--patch-predictions", patch_predictions, "per-patch likelihoods for exemplar export");
  evaluate->add_option("--max-exemplars", max_exemplars)->capture_default_str();

  auto* regress = app.add_subcommand("regress", "retained-value regression on year and condition");
  regress->add_option("--manifest", manifest)->required();
  regress->add_option("--predictions", predictions, "predictions CSV for the MV/LH models");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(std::move(reversed));
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: cli: " << one_line(e.what()) << '\n' << app.help();
    return 2;
  }

  auto log = std::make_shared<spdlog::logger>("bcond", std::make_shared<spdlog::sinks::ostream_sink_mt>(err));
  log->set_pattern("[%l] %v");
  log->set_level(log_level(err));

  try {
    Context ctx;
    ctx.config = config_path.empty() ? PipelineConfig{} : load_config(config_path);
    for (const auto& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw InvalidArgument("cli", "--set expects key=value, got '" + kv + "'");
      set_config_value(ctx.config, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (seed_opt->count() > 0) ctx.config.apply_seed(seed);
    ctx.config.validate();
    ctx.hash = config_hash(ctx.config);
    ctx.out_dir = out_dir;
    ctx.workers = workers;
    ctx.log = log;
    ctx.out = &out;
    const auto chosen = app.get_subcommands().front();
    ctx.command = chosen->get_name();
    if (chosen != synth) ensure_dir(ctx.out_dir);
    log->debug("config hash {}", ctx.hash);

    if (chosen == synth) return cmd_synth(ctx, synth_opts);
    if (chosen == extract) return cmd_extract(ctx, manifest, relevance, dump);
    if (chosen == train_rel) return cmd_train_relevance(ctx, relevance_opts);
    if (chosen == train_cond) return cmd_train_condition(ctx, manifest, patches);
    if (chosen == predict_cmd) return cmd_predict(ctx, manifest, predict_opts);
    if (chosen == evaluate) return cmd_evaluate(ctx, manifest, predictions, patch_predictions, max_exemplars);
    return cmd_regress(ctx, manifest, predictions);
  } catch (const Error& e) {
    err << "error: " << e.module() << ": " << one_line(e.what()) << '\n';
  } catch (const std::exception& e) {
    err << "error: cli: " << one_line(e.what()) << '\n';
  }
  return 1;
}

}  // namespace bcond
