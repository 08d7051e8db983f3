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

// Invariant suites: every property is checked on seeds 0..99.

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <limits>
#include <numbers>
#include <numeric>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "bcond/aggregation.hpp"
#include "bcond/config.hpp"
#include "bcond/dataset.hpp"
#include "bcond/descriptor.hpp"
#include "bcond/evaluation.hpp"
#include "bcond/regression.hpp"
#include "bcond/selection.hpp"
#include "bcond/synth.hpp"
#include "chain.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace bcond;

namespace {

constexpr std::uint64_t kSeeds = 100;

ClassLikelihoods random_likelihoods(Rng& rng) {
  std::array<double, 3> v{};
  double sum = 0.0;
  for (auto& x : v) sum += (x = -std::log(1.0 - rng.uniform()));
  for (auto& x : v) x /= sum;
  return ClassLikelihoods(v);
}

std::vector<BuildingRecord> random_houses(Rng& rng) {
  std::vector<BuildingRecord> out;
  for (const auto cat : {ConditionCategory::c1, ConditionCategory::c4, ConditionCategory::c6}) {
    const auto n = 3 + rng.below(30);
    for (std::uint64_t i = 0; i < n; ++i) {
      BuildingRecord r;
      r.house_id = "h" + std::to_string(out.size());
      r.image_paths = {r.house_id + ".png"};
      r.category = cat;
      r.year_built = 1950;
      out.push_back(r);
    }
  }
  return out;
}

std::set<PatchSpec> specs_of(const std::vector<PatchRecord>& patches) {
  std::set<PatchSpec> out;
  for (const auto& p : patches) out.insert(p.spec);
  return out;
}

bool subset(const std::vector<PatchRecord>& inner, const std::vector<PatchRecord>& outer) {
  const auto o = specs_of(outer);
  return std::all_of(inner.begin(), inner.end(), [&](const PatchRecord& p) { return o.count(p.spec) == 1; });
}

RegressionFit fit_of(std::span<const RegressionObservation> obs) {
  const auto d = build_design(obs);
  return ols_fit(d.X, d.y);
}

}  // namespace

// --- dataset -----------------------------------------------------------------

TEST_CASE("property: map_category is total and surjective with preimages 2/2/5") {
  for (std::uint64_t seed = 0; seed < kSeeds; ++seed) {
    Rng rng(seed);
    std::array<int, 3> preimage{};
    std::vector<int> codes(9);
    std::iota(codes.begin(), codes.end(), 1);
    rng.shuffle(std::span<int>(codes));
    for (const int c : codes) ++preimage[index(map_category(static_cast<ConditionCategory>(c)))];
    CHECK(preimage == std::array<int, 3>{2, 2, 5});
  }
}

TEST_CASE("property: partition is disjoint and covers the input") {
  for (std::uint64_t seed = 0; seed < kSeeds; ++seed) {
    Rng rng(seed);
    const auto houses = random_houses(rng);
    const auto split = partition(houses, {0.6, 0.15, 0.25}, seed);
    std::multiset<std::string> ids;
    for (const auto* part : {&split.training, &split.validation, &split.test})
      for (const auto& r : *part) ids.insert(r.house_id);
    std::multiset<std::string> expected;
    for (const auto& r : houses) expected.insert(r.house_id);
    CHECK(ids == expected);
  }
}

TEST_CASE("property: synth_generate is bit-reproducible") {
  for (std::uint64_t seed = 0; seed < kSeeds; ++seed) {
    testing::TempDir a("prop_synth_a");
    testing::TempDir b("prop_synth_b");
    const SynthSpec spec{{1, 1, 1}, 256, seed, 1};
    const auto ra = synth_generate(spec, a.path());
    synth_generate(spec, b.path());
    CHECK(testing::read_file(a / "manifest.json") == testing::read_file(b / "manifest.json"));
    for (const auto& r : ra) CHECK(testing::read_file(a.path() / r.image_paths[0]) == testing::read_file(b.path() / r.image_paths[0]));
  }
}

// --- imaging -----------------------------------------------------------------

TEST_CASE("property: dense_grid count formula and containment") {
  for (std::uint64_t seed = 0; seed < kSeeds; ++seed) {
    Rng rng(seed);
    const int w = 20 + static_cast<int>(rng.below(300));
    const int h = 20 + static_cast<int>(rng.below(300));
    std::vector<int> scales;
    for (int i = 0; i < 3; ++i) scales.push_back(4 + static_cast<int>(rng.below(200)));
    const double f = rng.uniform(0.05, 1.0);
    const auto specs = dense_grid(w, h, scales, f);
    std::size_t expected_total = 0;
    for (const int s : scales) {
      const int step = static_cast<int>(std::lround(s * f));
      std::size_t brute = 0;
      for (int y = 0; y <= h; y += step)
        for (int x = 0; x <= w; x += step) brute += (x + s <= w && y + s <= h);
      if (s <= w && s <= h) {
        CHECK(brute == static_cast<std::size_t>(((w - s) / step + 1) * ((h - s) / step + 1)));
      }
      CHECK(grid_count(w, h, s, f) == brute);
      expected_total += brute;
    }
    CHECK(specs.size() == expected_total);
    for (const auto& s : specs) {
      CHECK(s.x >= 0);
      CHECK(s.y >= 0);
      CHECK(s.x + s.side <= w);
      CHECK(s.y + s.side <= h);
      CHECK(std::find(scales.begin(), scales.end(), s.side) != scales.end());
    }
  }
}

TEST_CASE("property: gradients ignore a constant offset") {
  for (std::uint64_t seed = 0; seed < kSeeds; ++seed) {
    Rng rng(seed);
    const int w = 3 + static_cast<int>(rng.below(40));
    const int h = 3 + static_cast<int>(rng.below(40));
    auto img = testing::random_image(w, h, rng);
    for (auto& p : img.pixels()) p *= 0.5;
    auto shifted = img;
    const double c = rng.uniform(0.0, 0.5);
    for (auto& p : shifted.pixels()) p += c;
    const auto g0 = compute_gradients(img);
    const auto g1 = compute_gradients(shifted);
    for (std::size_t i = 0; i < g0.magnitude.size(); ++i) {
      CHECK(std::abs(g0.magnitude[i] - g1.magnitude[i]) < 1e-12);
      if (g0.magnitude[i] > 1e-6) {
        const double d = std::abs(g0.orientation[i] - g1.orientation[i]);
        CHECK(std::min(d, 2 * std::numbers::pi - d) < 1e-9);
      }
    }
  }
}

// --- descriptor --------------------------------------------------------------

TEST_CASE("property: scaling magnitudes scales raw_norm and keeps the normalized descriptor") {
  for (std::uint64_t seed = 0; seed < kSeeds; ++seed) {
    Rng rng(seed);
    const int side = 8 + static_cast<int>(rng.below(40));
    const auto g = compute_gradients(testing::random_image(side, side, rng));
    auto scaled = g;
    const double c = rng.uniform(0.1, 10.0);
    for (auto& m : scaled.magnitude) m *= c;
    const PatchSpec spec{"", 0, 0, side};
    const auto d0 = describe(g, spec);
    const auto d1 = describe(scaled, spec);
    CHECK(d1.raw_norm == doctest::Approx(c * d0.raw_norm).epsilon(1e-12));
    for (std::size_t i = 0; i < kDescriptorSize; ++i) CHECK(std::abs(d0.values[i] - d1.values[i]) < 1e-12);
  }
}

TEST_CASE("property: describe equals the per-pixel oracle") {
  for (std::uint64_t seed = 0; seed < kSeeds; ++seed) {
    Rng rng(seed);
    const int w = 16 + static_cast<int>(rng.below(60));
    const int h = 16 + static_cast<int>(rng.below(60));
    const auto img = seed % 2 ? testing::random_image(w, h, rng) : testing::textured_image(w, h, rng);
    const int side = 4 + static_cast<int>(rng.below(static_cast<std::uint64_t>(std::min(w, h) - 3)));
    const PatchSpec spec{"", static_cast<int>(rng.below(static_cast<std::uint64_t>(w - side + 1))),
                         static_cast<int>(rng.below(static_cast<std::uint64_t>(h - side + 1))), side};
    const auto d = describe(compute_gradients(img), spec);
    const auto o = oracle::descriptor(img, spec);
    CHECK(std::abs(d.raw_norm - o.raw_norm) < 1e-9);
    for (std::size_t i = 0; i < kDescriptorSize; ++i) CHECK(std::abs(d.values[i] - o.values[i]) < 1e-9);
  }
}

TEST_CASE("property: a 180-degree rotation keeps raw_norm") {
  for (std::uint64_t seed = 0; seed < kSeeds; ++seed) {
    Rng rng(seed);
    const int side = 4 * (2 + static_cast<int>(rng.below(12)));
    const auto img = testing::random_image(side, side, rng);
    GrayImage rotated(side, side, 0.0);
    for (int y = 0; y < side; ++y)
      for (int x = 0; x < side; ++x) rotated(side - 1 - x, side - 1 - y) = img(x, y);
    const auto a = describe_image(img);
    const auto b = describe_image(rotated);
    CHECK(b.raw_norm == doctest::Approx(a.raw_norm).epsilon(1e-9));
  }
}

// --- selection ---------------------------------------------------------------

TEST_CASE("property: pipeline stages are nested subsets and k-means never worsens") {
  const std::vector<std::uint8_t> always;
  for (std::uint64_t seed = 0; seed < kSeeds; ++seed) {
    Rng rng(seed);
    SelectionConfig config;
    config.seed = seed;
    config.scales = {32, 48, 64};
    config.k = 10 + rng.below(30);
    const auto img = testing::textured_image(128 + static_cast<int>(rng.below(64)), 128, rng);
    const auto trace = select_pipeline_traced(img, "p" + std::to_string(seed), config);
    CHECK(subset(trace.representatives, trace.dense));
    CHECK(subset(trace.contrasted, trace.representatives));
    CHECK(subset(trace.selected, trace.contrasted));
    CHECK(trace.selected.size() <= config.k);

    const auto& c = trace.clustering;
    CHECK(c.inertia <= c.initial_inertia + 1e-12);
    for (std::size_t i = 1; i < c.inertia_trace.size(); ++i) CHECK(c.inertia_trace[i] <= c.inertia_trace[i - 1] + 1e-9);
    CHECK(c.assignment.size() == trace.dense.size());
    for (const auto a : c.assignment) CHECK(a < c.k);
  }
}

TEST_CASE("property: contrast filter keeps the largest norms") {
  for (std::uint64_t seed = 0; seed < kSeeds; ++seed) {
    Rng rng(seed);
    std::vector<PatchRecord> reps(1 + rng.below(80));
    for (std::size_t i = 0; i < reps.size(); ++i) {
      reps[i].spec = PatchSpec{"c", static_cast<int>(i), 0, 8};
      // Coarse values so that ties occur.
      reps[i].descriptor.raw_norm = static_cast<double>(rng.below(12));
    }
    const double t = rng.uniform(0.01, 1.0);
    const auto kept = contrast_filter(reps, t);
    const auto kept_specs = specs_of(kept);
    double min_kept = std::numeric_limits<double>::infinity();
    double max_rejected = -1.0;
    int last_kept = -1;
    for (const auto& p : kept) {
      min_kept = std::min(min_kept, p.descriptor.raw_norm);
      CHECK(p.spec.x > last_kept);
      last_kept = p.spec.x;
      CHECK(p.descriptor.raw_norm > 0.0);
    }
    for (const auto& p : reps) {
      if (kept_specs.count(p.spec) == 0 && p.descriptor.raw_norm > 0.0) max_rejected = std::max(max_rejected, p.descriptor.raw_norm);
    }
    if (!kept.empty()) CHECK(min_kept >= max_rejected);
    CHECK(kept.size() <= contrast_keep_count(reps.size(), t));
  }
}

TEST_CASE("property: relevance decisions equal a per-patch argmax") {
  for (std::uint64_t seed = 0; seed < kSeeds; ++seed) {
    Rng rng(seed);
    SoftmaxRegression reg(13, kDescriptorSize);
    for (auto& w : reg.parameters()) w = rng.normal(0.0, 1.0);
    const LogisticRelevanceModel model(reg);
    std::vector<PatchRecord> patches(40);
    for (std::size_t i = 0; i < patches.size(); ++i) {
      patches[i].spec = PatchSpec{"r", static_cast<int>(i), 0, 8};
      for (auto& v : patches[i].descriptor.values) v = rng.uniform();
    }
    const auto kept = relevance_filter(patches, model);
    std::vector<int> expected;
    for (const auto& p : patches) {
      const auto s = reg.scores(p.descriptor.values);
      if (std::max_element(s.begin(), s.end()) - s.begin() == 12) expected.push_back(p.spec.x);
    }
    std::vector<int> got;
    for (const auto& p : kept) got.push_back(p.spec.x);
    CHECK(got == expected);
  }
}

// --- classifier --------------------------------------------------------------

TEST_CASE("property: blob training loss decreases and weight decay shrinks weights") {
  for (std::uint64_t seed = 0; seed < kSeeds; ++seed) {
    const auto data = testing::blob_patches(20, seed);
    TrainConfig plain;
    plain.seed = seed;
    plain.epochs = 10;
    plain.learning_rate = 0.05;
    plain.weight_decay = 0.0;
    const auto a = train_condition(data, plain);
    CHECK(a.loss_trace.back() < a.loss_trace.front());
    auto decayed = plain;
    decayed.weight_decay = 0.05;
    const auto b = train_condition(data, decayed);
    CHECK(b.model.regression().weight_norm() < a.model.regression().weight_norm());
  }
}

TEST_CASE("property: predict is pure and shift invariant") {
  for (std::uint64_t seed = 0; seed < kSeeds; ++seed) {
    Rng rng(seed);
    SoftmaxRegression reg(3, kDescriptorSize);
    for (auto& w : reg.parameters()) w = rng.normal(0.0, 2.0);
    const ConditionModel model(FeatureMode::descriptor, reg);
    auto shifted_reg = reg;
    const double c = rng.uniform(-50.0, 50.0);
    for (std::size_t k = 0; k < 3; ++k) shifted_reg.bias(k) += c;
    const ConditionModel shifted(FeatureMode::descriptor, shifted_reg);
    for (int i = 0; i < 20; ++i) {
      PatchRecord p;
      for (auto& v : p.descriptor.values) v = rng.normal();
      const auto first = model.predict(p);
      CHECK(model.predict(p) == first);
      CHECK(shifted.predict(p).argmax() == first.argmax());
    }
  }
}

// --- aggregation -------------------------------------------------------------

TEST_CASE("property: ambiguity filter and aggregation invariants") {
  for (std::uint64_t seed = 0; seed < kSeeds; ++seed) {
    Rng rng(seed);
    std::vector<ClassLikelihoods> preds;
    const auto n = 1 + rng.below(30);
    for (std::uint64_t i = 0; i < n; ++i) {
      if (rng.bernoulli(0.1)) {
        std::array<double, 3> hot{};
        hot[rng.below(3)] = 1.0;
        preds.emplace_back(hot);
      } else {
        preds.push_back(random_likelihoods(rng));
      }
    }
    const double threshold = rng.uniform();
    const auto kept = ambiguity_filter(preds, threshold);
    for (const auto& k : kept) CHECK(std::find(preds.begin(), preds.end(), k) != preds.end());
    CHECK(ambiguity_filter(preds, 0.0).size() == preds.size());
    for (const auto& k : ambiguity_filter(preds, 1.0)) CHECK(k.margin() == 1.0);

    const auto avg = average_likelihood(preds);
    REQUIRE(avg.has_value());
    const auto& v = avg->second;
    CHECK(std::abs(v[0] + v[1] + v[2] - 1.0) <= 1e-6);

    auto permuted = preds;
    rng.shuffle(std::span<ClassLikelihoods>(permuted));
    CHECK(majority_vote(permuted) == majority_vote(preds));

    std::array<std::size_t, 3> votes{};
    for (const auto& p : preds) ++votes[index(p.argmax())];
    for (const auto c : kAllClasses) {
      if (2 * votes[index(c)] > preds.size()) CHECK(majority_vote(preds) == c);
    }
  }
}

// --- evaluation --------------------------------------------------------------

TEST_CASE("property: confusion matrices, accuracy and the zero rule") {
  for (std::uint64_t seed = 0; seed < kSeeds; ++seed) {
    Rng rng(seed);
    const auto n = 1 + rng.below(500);
    std::vector<ConditionClass> truth, pred;
    std::array<std::size_t, 3> counts{};
    for (std::uint64_t i = 0; i < n; ++i) {
      truth.push_back(class_at(rng.below(3)));
      pred.push_back(class_at(rng.below(3)));
      ++counts[index(truth.back())];
    }
    const auto m = confuse(truth, pred);
    CHECK(m.total() == n);
    for (const auto c : kAllClasses) CHECK(m.row_sum(c) == counts[index(c)]);
    const double acc = accuracy(m);
    CHECK(acc >= 0.0);
    CHECK(acc <= 1.0);
    auto rotated = m;
    std::rotate(rotated.counts.begin(), rotated.counts.begin() + 1, rotated.counts.end());
    CHECK(rotated.total() == m.total());

    const auto majority = class_at(static_cast<std::size_t>(std::max_element(counts.begin(), counts.end()) - counts.begin()));
    const std::vector<ConditionClass> constant(n, majority);
    CHECK(accuracy(confuse(truth, constant)) == zero_rule(truth));
  }
}

TEST_CASE("property: pearson is invariant under positive affine maps") {
  for (std::uint64_t seed = 0; seed < kSeeds; ++seed) {
    Rng rng(seed);
    std::vector<double> x, y;
    for (int i = 0; i < 30; ++i) {
      x.push_back(rng.normal());
      y.push_back(0.5 * x.back() + rng.normal());
    }
    const double r = pearson(x, y);
    CHECK(r >= -1.0);
    CHECK(r <= 1.0);
    const double a = rng.uniform(0.01, 100.0);
    const double b = rng.uniform(-100.0, 100.0);
    std::vector<double> xs = x;
    for (auto& v : xs) v = a * v + b;
    CHECK(pearson(xs, y) == doctest::Approx(r).epsilon(1e-9));
    std::vector<double> ys = y;
    for (auto& v : ys) v = a * v + b;
    CHECK(pearson(x, ys) == doctest::Approx(r).epsilon(1e-9));
  }
}

// --- regression --------------------------------------------------------------

TEST_CASE("property: OLS optimality, intercept shift and fit statistics") {
  for (std::uint64_t seed = 0; seed < kSeeds; ++seed) {
    const auto obs = synth_regression_observations(200, seed);
    const auto d = build_design(obs);
    const auto fit = ols_fit(d.X, d.y);
    const Eigen::Map<const Eigen::VectorXd> beta(fit.coefficients.data(), 4);
    const Eigen::VectorXd residual = d.y - d.X * beta;
    const Eigen::VectorXd normal = d.X.transpose() * residual;
    for (Eigen::Index j = 0; j < 4; ++j) CHECK(std::abs(normal(j)) < 1e-8);

    Rng rng(seed);
    const double c = rng.uniform(-5.0, 5.0);
    const Eigen::VectorXd y2 = d.y.array() + c;
    const auto shifted = ols_fit(d.X, y2);
    CHECK(std::abs(shifted.coefficients[0] - fit.coefficients[0] - c) < 1e-9);
    for (std::size_t j = 1; j < 4; ++j) CHECK(std::abs(shifted.coefficients[j] - fit.coefficients[j]) < 1e-9);

    CHECK(fit.adj_r_squared <= fit.r_squared);
    if (fit.r_squared > 0.0 && fit.r_squared < 1.0) CHECK(fit.f_statistic > 0.0);
    for (const double p : fit.p_values) CHECK((p >= 0.0 && p <= 1.0));
  }
}

TEST_CASE("property: coefficient signs on the synthetic acceptance data") {
  for (std::uint64_t seed = 0; seed < kSeeds; ++seed) {
    const auto fit = fit_of(synth_regression_observations(2000, seed));
    CHECK(fit.coefficients[1] > 0.0);
    CHECK(fit.coefficients[2] < 0.0);
    CHECK(fit.coefficients[3] < fit.coefficients[2]);
  }
}

// --- cli ---------------------------------------------------------------------

namespace {

/// Rebuilds a configuration from the "# config: key=value" lines of an artifact.
std::string config_from_comments(const std::string& text) {
  std::string out;
  std::istringstream lines(text);
  for (std::string line; std::getline(lines, line);) {
    if (line.rfind("# config: ", 0) == 0) out += line.substr(10) + "\n";
  }
  return out;
}

std::string config_from_json(const nlohmann::json& j) {
  std::string out;
  for (const auto& [k, v] : j["config"].items()) out += k + "=" + v.get<std::string>() + "\n";
  return out;
}

}  // namespace

TEST_CASE("property: artifacts embed the exact config and commands rerun from intermediates") {
  testing::TempDir dir("prop_cli");
  std::ofstream(dir / "manifest.json") << R"([
    {"house_id": "a", "images": ["a.png"], "category": "c1", "year_built": 1995, "retained_value": 0.6},
    {"house_id": "b", "images": ["b.png"], "category": "c4", "year_built": 1970, "retained_value": 0.45},
    {"house_id": "c", "images": ["c.png"], "category": "c9", "year_built": 1950, "retained_value": 0.2}])";
  std::ofstream(dir / "predictions.csv") << "image_id,method,verdict,n_patches_used,p_A,p_B,p_C,max_patch_likelihood\n"
                                            "a_0,MV,A,1,,,,0.9\nb_0,MV,C,1,,,,0.8\nc_0,MV,C,1,,,,0.9\n";
  for (std::uint64_t seed = 0; seed < kSeeds; ++seed) {
    Rng rng(seed);
    const std::string k = std::to_string(1 + rng.below(80));
    const std::string threshold = std::to_string(rng.uniform());
    const auto args = [&](const std::string& out) {
      return std::vector<std::string>{"--seed", std::to_string(seed), "--set", "k=" + k, "--set",
                                      "ambiguity_threshold=" + threshold, "--out", out, "evaluate", "--manifest",
                                      (dir / "manifest.json").string(), "--predictions",
                                      (dir / "predictions.csv").string()};
    };
    const auto first = testing::run_cli(args((dir / "run1").string()));
    const auto second = testing::run_cli(args((dir / "run2").string()));
    REQUIRE(first.code == 0);
    REQUIRE(second.code == 0);
    const auto metrics_text = testing::read_file(dir / "run1" / "metrics.json");
    CHECK(metrics_text == testing::read_file(dir / "run2" / "metrics.json"));

    const auto metrics = nlohmann::json::parse(metrics_text);
    const auto config = parse_config_text(config_from_json(metrics));
    CHECK(config_hash(config) == metrics["config_hash"].get<std::string>());
    CHECK(config.seed == seed);
    CHECK(config.selection.k == std::stoul(k));

    const auto bars = testing::read_file(dir / "run1" / "discount_by_condition.csv");
    CHECK(config_hash(parse_config_text(config_from_comments(bars))) == metrics["config_hash"].get<std::string>());
  }
}
