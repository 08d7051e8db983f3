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

#include <doctest.h>

#include <cmath>
#include <sstream>

#include "bcond/descriptor.hpp"
#include "bcond/error.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace bcond;

namespace {

double norm(const std::array<double, kDescriptorSize>& v) {
  double s = 0.0;
  for (const double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

TEST_CASE("constant patch gives the zero descriptor") {
  const auto d = describe_image(GrayImage(16, 16, 0.4));
  CHECK(d.raw_norm == 0.0);
  CHECK(raw_norm(d) == 0.0);
  for (const double v : d.values) CHECK(v == 0.0);
  CHECK(raw_norm(Descriptor{}) == 0.0);
}

TEST_CASE("step edge puts its mass in the edge column and the 0 / pi bins") {
  // Edge between x = 9 and x = 10 of a 16 pixel patch: cell column 2.
  GrayImage img(16, 16, 0.2);
  for (int y = 0; y < 16; ++y)
    for (int x = 10; x < 16; ++x) img(x, y) = 0.9;
  const PatchSpec spec{"", 0, 0, 16};
  const auto d = describe(compute_gradients(img), spec);
  const auto expected = oracle::descriptor(img, spec);
  for (std::size_t i = 0; i < kDescriptorSize; ++i) CHECK(d.values[i] == doctest::Approx(expected.values[i]).epsilon(1e-12));
  CHECK(d.raw_norm == doctest::Approx(expected.raw_norm));
  for (std::size_t row = 0; row < 4; ++row) {
    for (std::size_t col = 0; col < 4; ++col) {
      for (std::size_t bin = 0; bin < 8; ++bin) {
        const double v = d.values[(row * 4 + col) * 8 + bin];
        if (col == 2 && (bin == 0 || bin == 4)) continue;
        CHECK(v == 0.0);
      }
    }
  }
  CHECK(d.values[(0 * 4 + 2) * 8 + 0] > 0.0);
}

TEST_CASE("normalized descriptor has unit norm") {
  Rng rng(12);
  for (int i = 0; i < 20; ++i) {
    const auto d = describe_image(testing::random_image(24, 24, rng));
    REQUIRE(d.raw_norm > 0.0);
    CHECK(norm(d.values) == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("checkerboard has a larger raw norm than a mild shade") {
  GrayImage checker(32, 32, 0.0);
  GrayImage shade(32, 32, 0.0);
  for (int y = 0; y < 32; ++y) {
    for (int x = 0; x < 32; ++x) {
      checker(x, y) = ((x / 4 + y / 4) % 2) ? 1.0 : 0.0;
      shade(x, y) = 0.4 + 0.2 * x / 31.0;
    }
  }
  CHECK(describe_image(checker).raw_norm > describe_image(shade).raw_norm);
}

TEST_CASE("raw norm survives normalization") {
  Rng rng(2);
  const auto img = testing::random_image(20, 20, rng);
  const auto d = describe_image(img);
  const auto hist = oracle::histogram(img, PatchSpec{"", 0, 0, 20});
  CHECK(d.raw_norm == doctest::Approx(norm(hist)).epsilon(1e-12));
  const auto again = Descriptor::from_histogram(d.values);
  CHECK(again.raw_norm == doctest::Approx(1.0));
}

TEST_CASE("remainder pixels belong to the last cell") {
  Rng rng(8);
  const auto img = testing::random_image(30, 30, rng);
  const PatchSpec spec{"", 3, 2, 27};
  const auto d = describe(compute_gradients(img), spec);
  const auto expected = oracle::descriptor(img, spec);
  for (std::size_t i = 0; i < kDescriptorSize; ++i) CHECK(d.values[i] == doctest::Approx(expected.values[i]).epsilon(1e-12));
}

TEST_CASE("describe rejects small or outside patches") {
  const auto g = compute_gradients(GrayImage(10, 10, 0.1));
  CHECK_THROWS_AS(describe(g, PatchSpec{"", 0, 0, 3}), SizeError);
  CHECK_THROWS_AS(describe(g, PatchSpec{"", 4, 4, 8}), BoundsError);
}

TEST_CASE("descriptor CSV round trip") {
  Rng rng(4);
  const auto img = testing::random_image(40, 40, rng);
  const std::vector<int> scales = {16};
  const auto patches = describe_all(compute_gradients(img), dense_grid(40, 40, scales, 0.5, "img_0"));
  std::stringstream buf;
  buf << "# comment\n";
  write_descriptor_csv(buf, patches);
  const auto back = read_descriptor_csv(buf);
  REQUIRE(back.size() == patches.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].spec == patches[i].spec);
    CHECK(back[i].descriptor.raw_norm == patches[i].descriptor.raw_norm);
    CHECK(back[i].descriptor.values == patches[i].descriptor.values);
  }
  const auto header = buf.str().substr(buf.str().find('\n') + 1, 40);
  CHECK(header.rfind("image_id,x,y,side,raw_norm,v0", 0) == 0);
}
