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

// Acceptance driver: one PASS/FAIL line per criterion, each with a runtime
// limit. Exits nonzero when any criterion fails.

#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>
#include <string>

#include "bcond/aggregation.hpp"
#include "bcond/classifier.hpp"
#include "bcond/evaluation.hpp"
#include "bcond/regression.hpp"
#include "bcond/selection.hpp"
#include "bcond/synth.hpp"
#include "chain.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace bcond;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* format, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, format, a, b, c, d);
  return buf;
}

ConfusionMatrix matrix(std::array<std::array<std::size_t, 3>, 3> rows) {
  ConfusionMatrix m;
  m.counts = rows;
  return m;
}

Outcome metric_reproduction() {
  const double mv = accuracy(matrix({{{505, 205, 25}, {227, 713, 67}, {67, 163, 206}}}));
  const double lh = accuracy(matrix({{{491, 211, 33}, {214, 711, 82}, {64, 166, 206}}}));
  std::vector<ConditionClass> test_labels;
  test_labels.insert(test_labels.end(), 737, ConditionClass::A);
  test_labels.insert(test_labels.end(), 1008, ConditionClass::B);
  test_labels.insert(test_labels.end(), 438, ConditionClass::C);
  const double zr = zero_rule(test_labels);
  const bool ok = std::abs(mv - 0.6538) <= 1e-4 && std::abs(lh - 0.6465) <= 1e-4 && std::abs(zr - 0.4617) <= 1e-4;
  return {ok, fmt("MV %.4f, LH %.4f, zero rule %.4f", mv, lh, zr)};
}

Outcome mapping_exactness() {
  const char expected[] = "AABBCCCCC";
  std::string got;
  for (int c = 1; c <= 9; ++c) got += to_string(map_category(static_cast<ConditionCategory>(c)));
  return {got == expected, "c1..c9 -> " + got};
}

Outcome regression_recovery() {
  const auto& truth = kAppraiserValueModel.coefficients;
  std::array<int, 4> covered{};
  int r2_ok = 0;
  int joint = 0;
  const int trials = 100;
  for (int seed = 0; seed < trials; ++seed) {
    const auto d = build_design(synth_regression_observations(2000, static_cast<std::uint64_t>(seed)));
    const auto fit = ols_fit(d.X, d.y);
    bool all = true;
    for (std::size_t j = 0; j < 4; ++j) {
      const bool in = std::abs(fit.coefficients[j] - truth[j]) <= 2.0 * fit.std_errors[j];
      covered[j] += in;
      all = all && in;
    }
    const bool r2 = std::abs(fit.adj_r_squared - 0.602) <= 0.08;
    r2_ok += r2;
    joint += all && r2;
  }
  bool ok = r2_ok >= 95;
  for (const int c : covered) ok = ok && c >= 95;
  auto detail = fmt("per-coefficient coverage %.0f/%.0f/%.0f/%.0f of 100", covered[0], covered[1], covered[2],
                    covered[3]);
  detail += fmt(", adj R^2 in range %.0f/100, all jointly %.0f/100", r2_ok, joint);
  return {ok, detail};
}

Outcome ols_oracle() {
  std::vector<RegressionObservation> obs;
  for (const auto& r : oracle::kSixRows) obs.push_back({r.year, class_at(static_cast<std::size_t>(r.cls)), r.response_milli / 1000.0});
  const auto d = build_design(obs);
  const auto fit = ols_fit(d.X, d.y);
  const auto exact = oracle::six_row_oracle();
  double worst = 0.0;
  for (std::size_t j = 0; j < 4; ++j) {
    worst = std::max({worst, std::abs(fit.coefficients[j] - static_cast<double>(exact.beta[j])),
                      std::abs(fit.std_errors[j] - exact.std_error(j)), std::abs(fit.t_values[j] - exact.t_value(j)),
                      std::abs(fit.p_values[j] - exact.p_value_dof2(j))});
  }
  return {fit.dof == 2 && worst < 1e-9, fmt("largest deviation %.3g", worst)};
}

Outcome selection_arithmetic() {
  SelectionConfig config;  // k = 50, t = 0.21
  std::size_t most = 0;
  bool ordered = true;
  for (std::uint64_t i = 0; i < 50; ++i) {
    Rng rng(mix_seed(5, i));
    const auto img = render_facade(256 + static_cast<int>(rng.below(257)), rng.uniform(), rng);
    config.seed = i;
    const auto trace = select_pipeline_traced(img, "img" + std::to_string(i), config);
    most = std::max(most, trace.selected.size());
    double min_kept = std::numeric_limits<double>::infinity();
    for (const auto& p : trace.contrasted) min_kept = std::min(min_kept, p.descriptor.raw_norm);
    for (const auto& p : trace.representatives) {
      const bool kept = std::any_of(trace.contrasted.begin(), trace.contrasted.end(),
                                    [&](const PatchRecord& q) { return q.spec == p.spec; });
      if (!kept && p.descriptor.raw_norm > min_kept) ordered = false;
    }
  }
  return {most <= 11 && ordered,
          fmt("at most %.0f patches per image, norm ordering ", static_cast<double>(most)) + (ordered ? "holds" : "violated")};
}

Outcome ambiguity_boundary() {
  const std::vector<ClassLikelihoods> in = {ClassLikelihoods({0.6, 0.4, 0.0}), ClassLikelihoods({0.7, 0.3, 0.0}),
                                            ClassLikelihoods({0.625, 0.375, 0.0})};
  const auto out = ambiguity_filter(in, 0.25);
  const bool ok = out.size() == 2 && out[0] == in[1] && out[1] == in[2];
  return {ok, fmt("%.0f of 3 kept", static_cast<double>(out.size()))};
}

Outcome training_sanity() {
  const auto data = testing::blob_patches(100, 3);
  const TrainConfig config;  // 30 epochs, lr 1e-4, momentum 0.9
  const auto trained = train_condition(data, config);
  std::size_t correct = 0;
  for (const auto& p : data) correct += trained.model.predict(p.patch).argmax() == p.label;
  const double acc = static_cast<double>(correct) / static_cast<double>(data.size());

  Rng rng(17);
  const auto small = testing::blob_patches(10, 5, 0.3);
  std::vector<std::vector<double>> features;
  std::vector<std::size_t> labels;
  for (const auto& p : small) {
    features.emplace_back(p.patch.descriptor.values.begin(), p.patch.descriptor.values.end());
    labels.push_back(index(p.label));
  }
  std::vector<std::size_t> rows(features.size());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  SoftmaxRegression model(3, kDescriptorSize);
  for (auto& w : model.parameters()) w = rng.normal(0.0, 0.5);
  std::vector<double> grad;
  cross_entropy(model, features, labels, rows, &grad);
  const double eps = 1e-5;
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const auto j = static_cast<std::size_t>(rng.below(model.parameters().size()));
    auto plus = model;
    auto minus = model;
    plus.parameters()[j] += eps;
    minus.parameters()[j] -= eps;
    const double numeric =
        (cross_entropy(plus, features, labels, rows) - cross_entropy(minus, features, labels, rows)) / (2 * eps);
    worst = std::max(worst, std::abs(numeric - grad[j]) / std::max(1e-8, std::max(std::abs(numeric), std::abs(grad[j]))));
  }
  return {acc >= 0.99 && worst < 1e-4, fmt("training accuracy %.4f, worst gradient relative error %.2g", acc, worst)};
}

Outcome end_to_end() {
  testing::TempDir a("accept_e2e_a");
  testing::TempDir b("accept_e2e_b");
  const auto first = testing::run_chain(a.path(), "42", "100,100,100");
  if (!first.ok) return {false, "chain failed: " + first.steps.back().err};
  const auto second = testing::run_chain(b.path(), "42", "100,100,100");
  if (!second.ok) return {false, "second chain failed: " + second.steps.back().err};
  const auto metrics = nlohmann::json::parse(first.metrics);
  const double mv = metrics["accuracy_mv"].get<double>();
  const double zr = metrics["zero_rule"].get<double>();
  const bool same = first.metrics == second.metrics &&
                    testing::read_file(a / "predictions.csv") == testing::read_file(b / "predictions.csv") &&
                    testing::read_file(a / "model.bin") == testing::read_file(b / "model.bin");
  return {mv >= zr + 0.15 && same,
          fmt("MV accuracy %.4f vs zero rule %.4f", mv, zr) + (same ? ", reruns identical" : ", reruns differ")};
}

Outcome invariant_suites() {
  doctest::Context context;
  context.setOption("test-case", "property:*");
  context.setOption("no-breaks", true);
  context.setOption("no-colors", true);
  std::ostringstream log;
  context.setCout(&log);
  const int failed = context.run();
  std::string summary;
  std::istringstream lines(log.str());
  for (std::string line; std::getline(lines, line);) {
    if (line.find("test cases:") != std::string::npos) summary = line;
  }
  if (failed != 0) std::cerr << log.str();
  const auto pos = summary.find("test cases:");
  return {failed == 0, pos == std::string::npos ? "no summary" : summary.substr(pos)};
}

Outcome descriptor_oracle() {
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(mix_seed(10, seed));
    const int w = 16 + static_cast<int>(rng.below(80));
    const int h = 16 + static_cast<int>(rng.below(80));
    const auto img = testing::random_image(w, h, rng);
    const int side = 4 + static_cast<int>(rng.below(static_cast<std::uint64_t>(std::min(w, h) - 3)));
    const PatchSpec spec{"", static_cast<int>(rng.below(static_cast<std::uint64_t>(w - side + 1))),
                         static_cast<int>(rng.below(static_cast<std::uint64_t>(h - side + 1))), side};
    const auto d = describe(compute_gradients(img), spec);
    const auto o = oracle::descriptor(img, spec);
    worst = std::max(worst, std::abs(d.raw_norm - o.raw_norm));
    for (std::size_t i = 0; i < kDescriptorSize; ++i) worst = std::max(worst, std::abs(d.values[i] - o.values[i]));
  }
  return {worst <= 1e-9, fmt("largest elementwise deviation %.3g over 100 patches", worst)};
}

struct Criterion {
  int number;
  const char* name;
  double limit_seconds;
  std::function<Outcome()> check;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria = {
      {1, "metric reproduction", 1.0, metric_reproduction},
      {2, "mapping exactness", 1.0, mapping_exactness},
      {3, "regression recovery", 10.0, regression_recovery},
      {4, "OLS oracle equivalence", 1.0, ols_oracle},
      {5, "selection arithmetic", 60.0, selection_arithmetic},
      {6, "ambiguity boundary", 1.0, ambiguity_boundary},
      {7, "training sanity", 30.0, training_sanity},
      {8, "end-to-end synthetic pipeline", 300.0, end_to_end},
      {9, "invariant suites", 300.0, invariant_suites},
      {10, "descriptor oracle", 30.0, descriptor_oracle},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  int failures = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && only.count(c.number) == 0) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = c.check();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = seconds < c.limit_seconds;
    const bool pass = outcome.pass && in_time;
    failures += !pass;
    std::printf("criterion %d %s: %s (%s; %.2f s, limit %.0f s%s)\n", c.number, c.name, pass ? "PASS" : "FAIL",
                outcome.detail.c_str(), seconds, c.limit_seconds, in_time ? "" : ", too slow");
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
