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

#include "bcond/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "bcond/error.hpp"
#include "bcond/selection.hpp"

namespace bcond {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Class shares of the house population and year-of-construction means.
constexpr std::array<double, kNumClasses> kClassShare = {0.30, 0.44, 0.26};
constexpr std::array<double, kNumClasses> kMeanYear = {1990.0, 1972.0, 1958.0};
constexpr double kYearSpread = 22.0;

class Canvas {
 public:
  Canvas(int width, int height, double fill) : w_(width), h_(height), px_(static_cast<std::size_t>(width) * height, fill) {}

  int width() const { return w_; }
  int height() const { return h_; }
  bool inside(int x, int y) const { return x >= 0 && y >= 0 && x < w_ && y < h_; }
  double& at(int x, int y) { return px_[static_cast<std::size_t>(y) * w_ + x]; }

  void fill_rect(int x0, int y0, int x1, int y1, double v) {
    for (int y = std::max(0, y0); y < std::min(h_, y1); ++y) {
      for (int x = std::max(0, x0); x < std::min(w_, x1); ++x) at(x, y) = v;
    }
  }

  void fill_ellipse(double cx, double cy, double rx, double ry, double v) {
    for (int y = std::max(0, static_cast<int>(cy - ry)); y <= std::min(h_ - 1, static_cast<int>(cy + ry)); ++y) {
      for (int x = std::max(0, static_cast<int>(cx - rx)); x <= std::min(w_ - 1, static_cast<int>(cx + rx)); ++x) {
        const double dx = (x - cx) / rx;
        const double dy = (y - cy) / ry;
        if (dx * dx + dy * dy <= 1.0) at(x, y) = v;
      }
    }
  }

  /// Adds amplitude * exp(-r^2 / (2 sigma^2)).
  void add_blob(double cx, double cy, double sigma, double amplitude) {
    const int reach = static_cast<int>(std::ceil(3.0 * sigma));
    for (int y = std::max(0, static_cast<int>(cy) - reach); y <= std::min(h_ - 1, static_cast<int>(cy) + reach); ++y) {
      for (int x = std::max(0, static_cast<int>(cx) - reach); x <= std::min(w_ - 1, static_cast<int>(cx) + reach); ++x) {
        const double r2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
        at(x, y) += amplitude * std::exp(-r2 / (2.0 * sigma * sigma));
      }
    }
  }

  void line(double x0, double y0, double x1, double y1, double width, double v) {
    const double len = std::hypot(x1 - x0, y1 - y0);
    const int steps = std::max(1, static_cast<int>(std::ceil(len * 2.0)));
    const int half = std::max(0, static_cast<int>(width / 2.0));
    for (int s = 0; s <= steps; ++s) {
      const double f = static_cast<double>(s) / steps;
      const int x = static_cast<int>(std::lround(x0 + f * (x1 - x0)));
      const int y = static_cast<int>(std::lround(y0 + f * (y1 - y0)));
      for (int dy = -half; dy <= half; ++dy) {
        for (int dx = -half; dx <= half; ++dx) {
          if (inside(x + dx, y + dy)) at(x + dx, y + dy) = v;
        }
      }
    }
  }

  void add_noise(Rng& rng, double sd) {
    if (sd <= 0.0) return;
    for (auto& p : px_) p += rng.normal(0.0, sd);
  }

  /// Bilinearly interpolated random lattice with the given cell size.
  void add_value_noise(Rng& rng, double cell, double amplitude) {
    const int gw = static_cast<int>(std::ceil(w_ / cell)) + 2;
    const int gh = static_cast<int>(std::ceil(h_ / cell)) + 2;
    std::vector<double> grid(static_cast<std::size_t>(gw) * gh);
    for (auto& g : grid) g = rng.uniform(-1.0, 1.0);
    for (int y = 0; y < h_; ++y) {
      for (int x = 0; x < w_; ++x) {
        const double gx = x / cell;
        const double gy = y / cell;
        const int ix = static_cast<int>(gx);
        const int iy = static_cast<int>(gy);
        const double fx = gx - ix;
        const double fy = gy - iy;
        const auto g = [&](int i, int j) { return grid[static_cast<std::size_t>(j) * gw + i]; };
        const double top = g(ix, iy) * (1 - fx) + g(ix + 1, iy) * fx;
        const double bottom = g(ix, iy + 1) * (1 - fx) + g(ix + 1, iy + 1) * fx;
        at(x, y) += amplitude * (top * (1 - fy) + bottom * fy);
      }
    }
  }

  GrayImage finish() && {
    for (auto& p : px_) p = std::clamp(p, 0.0, 1.0);
    return GrayImage(w_, h_, std::move(px_));
  }

 private:
  int w_;
  int h_;
  std::vector<double> px_;
};

std::string house_name(std::size_t number) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "h%04zu", number);
  return buf;
}

ConditionCategory draw_category(ConditionClass cls, Rng& rng) {
  switch (cls) {
    case ConditionClass::A: return static_cast<ConditionCategory>(1 + rng.below(2));
    case ConditionClass::B: return static_cast<ConditionCategory>(3 + rng.below(2));
    case ConditionClass::C: break;
  }
  return static_cast<ConditionCategory>(5 + rng.below(5));
}

}  // namespace

double class_degradation(ConditionClass cls) { return 0.5 * static_cast<double>(index(cls)); }

GrayImage render_facade(int size, double degradation, Rng& rng) {
  if (size < 32) throw SizeError("dataset", "facade size must be at least 32 pixels");
  const double s = size;
  const double tone = rng.uniform(0.45, 0.65);
  Canvas c(size, size, tone);

  const int sky = static_cast<int>(std::lround(s * rng.uniform(0.08, 0.16)));
  const double wave_x = s * rng.uniform(0.5, 0.9);
  const double wave_y = s * rng.uniform(0.5, 0.9);
  const double phase_x = rng.uniform(0.0, kTwoPi);
  const double phase_y = rng.uniform(0.0, kTwoPi);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      if (y < sky) {
        c.at(x, y) = 0.78 + 0.12 * (1.0 - static_cast<double>(y) / sky);
      } else {
        c.at(x, y) += 0.04 * std::sin(kTwoPi * x / wave_x + phase_x) * std::cos(kTwoPi * y / wave_y + phase_y);
      }
    }
  }

  // Window grid.
  const int cols = 3 + static_cast<int>(rng.below(3));
  const int rows = 3 + static_cast<int>(rng.below(2));
  const double margin_x = s * 0.06;
  const double top = sky + s * 0.05;
  const double cell_w = (s - 2.0 * margin_x) / cols;
  const double cell_h = (s - top - s * 0.04) / rows;
  const double win_w = cell_w * rng.uniform(0.45, 0.6);
  const double win_h = cell_h * rng.uniform(0.5, 0.6);
  const double glass = 0.18 + rng.uniform(0.0, 0.08);
  for (int r = 0; r < rows; ++r) {
    for (int k = 0; k < cols; ++k) {
      const double cx = margin_x + (k + 0.5) * cell_w;
      const double cy = top + (r + 0.5) * cell_h;
      const int x0 = static_cast<int>(cx - win_w / 2);
      const int y0 = static_cast<int>(cy - win_h / 2);
      const int x1 = static_cast<int>(cx + win_w / 2);
      const int y1 = static_cast<int>(cy + win_h / 2);
      c.fill_rect(x0 - 2, y0 - 2, x1 + 2, y1 + 2, 0.85);
      c.fill_rect(x0, y0, x1, y1, glass);
    }
  }

  // Degradation: stains, cracks, then high-frequency noise.
  const int stains = static_cast<int>(std::lround(6.0 * degradation));
  for (int i = 0; i < stains; ++i) {
    const double cx = rng.uniform(0.0, s);
    const double cy = rng.uniform(sky, s);
    c.add_blob(cx, cy, s * rng.uniform(0.03, 0.09), -rng.uniform(0.08, 0.2));
  }
  const int cracks = static_cast<int>(std::lround(10.0 * degradation));
  for (int i = 0; i < cracks; ++i) {
    double x = rng.uniform(0.0, s);
    double y = rng.uniform(sky, s);
    double angle = rng.uniform(0.0, kTwoPi);
    const int length = static_cast<int>(s * rng.uniform(0.15, 0.4));
    for (int step = 0; step < length; ++step) {
      const int px = static_cast<int>(x);
      const int py = static_cast<int>(y);
      if (c.inside(px, py) && py >= sky) c.at(px, py) = std::max(0.0, c.at(px, py) - 0.35);
      x += std::cos(angle);
      y += std::sin(angle);
      angle += rng.normal(0.0, 0.35);
    }
  }
  c.add_noise(rng, 0.01 + 0.09 * degradation);
  return std::move(c).finish();
}

int draw_year_built(ConditionClass cls, Rng& rng) {
  const double year = std::round(rng.normal(kMeanYear[index(cls)], kYearSpread));
  return static_cast<int>(std::clamp(year, 1900.0, 2020.0));
}

std::vector<BuildingRecord> synth_generate(const SynthSpec& spec, const std::filesystem::path& out_dir) {
  if (spec.image_size < 256) throw InvalidArgument("dataset", "synthetic image side must be at least 256 pixels");
  if (spec.images_per_house == 0) throw InvalidArgument("dataset", "images_per_house must be positive");
  std::vector<BuildingRecord> records;
  const std::size_t total = spec.counts[0] + spec.counts[1] + spec.counts[2];
  if (total == 0) return records;

  try {
    std::filesystem::create_directories(out_dir / "images");
  } catch (const std::filesystem::filesystem_error& e) {
    throw IoError("dataset", "cannot create output directory " + out_dir.string() + ": " + e.code().message());
  }

  std::size_t number = 0;
  for (const auto cls : kAllClasses) {
    for (std::size_t h = 0; h < spec.counts[index(cls)]; ++h) {
      ++number;
      const std::uint64_t house_seed = mix_seed(spec.seed, number);
      Rng rng(house_seed);
      BuildingRecord r;
      r.house_id = house_name(number);
      r.category = draw_category(cls, rng);
      r.year_built = draw_year_built(cls, rng);
      const double degradation = std::clamp(class_degradation(cls) + rng.uniform(-0.15, 0.15), 0.0, 1.15);
      const double value = mean_value(kAppraiserValueModel, r.year_built, cls) +
                           rng.normal(0.0, kAppraiserValueModel.sigma);
      r.retained_value = std::clamp(value, 0.0, 1.0);
      for (std::size_t i = 0; i < spec.images_per_house; ++i) {
        Rng image_rng(mix_seed(house_seed, i + 1));
        const auto image = render_facade(spec.image_size, degradation, image_rng);
        const std::string relative = "images/" + r.image_id(i) + ".png";
        save_png(out_dir / relative, image);
        r.image_paths.push_back(relative);
      }
      records.push_back(std::move(r));
    }
  }
  write_manifest(out_dir / "manifest.json", records);
  return records;
}

std::vector<RegressionObservation> synth_regression_observations(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<RegressionObservation> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = rng.uniform();
    const auto cls = u < kClassShare[0]                  ? ConditionClass::A
                     : u < kClassShare[0] + kClassShare[1] ? ConditionClass::B
                                                          : ConditionClass::C;
    RegressionObservation o;
    o.condition = cls;
    o.year_built = draw_year_built(cls, rng);
    o.retained_value = mean_value(kAppraiserValueModel, o.year_built, cls) +
                       rng.normal(0.0, kAppraiserValueModel.sigma);
    out.push_back(o);
  }
  return out;
}

namespace {

GrayImage relevance_texture(std::size_t label, int side, Rng& rng) {
  const double s = side;
  switch (label) {
    case 0: {  // car
      Canvas c(side, side, rng.uniform(0.4, 0.6));
      const double body = rng.uniform(0.1, 0.9);
      c.fill_rect(static_cast<int>(s * 0.1), static_cast<int>(s * 0.35), static_cast<int>(s * 0.9),
                  static_cast<int>(s * 0.7), body);
      c.fill_rect(static_cast<int>(s * 0.25), static_cast<int>(s * 0.2), static_cast<int>(s * 0.7),
                  static_cast<int>(s * 0.38), std::min(1.0, body + 0.15));
      c.fill_ellipse(s * 0.28, s * 0.72, s * 0.1, s * 0.1, 0.05);
      c.fill_ellipse(s * 0.72, s * 0.72, s * 0.1, s * 0.1, 0.05);
      c.add_noise(rng, 0.01);
      return std::move(c).finish();
    }
    case 1: {  // tree
      Canvas c(side, side, rng.uniform(0.55, 0.8));
      for (int i = 0; i < 60; ++i) {
        c.add_blob(rng.uniform(0, s), rng.uniform(0, s), s * rng.uniform(0.03, 0.08), -rng.uniform(0.1, 0.3));
      }
      c.add_value_noise(rng, 4.0, 0.08);
      return std::move(c).finish();
    }
    case 2: {  // person
      Canvas c(side, side, rng.uniform(0.5, 0.8));
      const double cx = s * rng.uniform(0.4, 0.6);
      const double shade = rng.uniform(0.05, 0.3);
      c.fill_ellipse(cx, s * 0.62, s * 0.14, s * 0.3, shade);
      c.fill_ellipse(cx, s * 0.2, s * 0.08, s * 0.09, shade + 0.1);
      c.add_noise(rng, 0.01);
      return std::move(c).finish();
    }
    case 3: {  // asphalt
      Canvas c(side, side, rng.uniform(0.25, 0.4));
      c.add_noise(rng, 0.05);
      return std::move(c).finish();
    }
    case 4: {  // pole
      Canvas c(side, side, rng.uniform(0.7, 0.9));
      const int x = static_cast<int>(s * rng.uniform(0.3, 0.7));
      const int w = 3 + static_cast<int>(rng.below(6));
      c.fill_rect(x, 0, x + w, side, rng.uniform(0.1, 0.35));
      c.add_noise(rng, 0.01);
      return std::move(c).finish();
    }
    case 5: {  // sky
      Canvas c(side, side, 0.0);
      const double a = rng.uniform(0.7, 0.85);
      const double b = rng.uniform(0.0, 0.1);
      for (int y = 0; y < side; ++y) {
        for (int x = 0; x < side; ++x) c.at(x, y) = a + b * (1.0 - y / s);
      }
      c.add_noise(rng, 0.005);
      return std::move(c).finish();
    }
    case 6: {  // grass
      Canvas c(side, side, rng.uniform(0.35, 0.5));
      for (int i = 0; i < 4 * side; ++i) {
        const double x = rng.uniform(0, s);
        const double y = rng.uniform(0, s);
        const double len = rng.uniform(4.0, 10.0);
        c.line(x, y, x + rng.normal(0.0, 1.5), y - len, 1.0, rng.uniform(0.15, 0.7));
      }
      return std::move(c).finish();
    }
    case 7: {  // fence
      Canvas c(side, side, rng.uniform(0.6, 0.85));
      const int period = 6 + static_cast<int>(rng.below(5));
      const double bar = rng.uniform(0.1, 0.35);
      for (int x = static_cast<int>(rng.below(static_cast<std::uint64_t>(period))); x < side; x += period) {
        c.fill_rect(x, 0, x + period / 2, side, bar);
      }
      c.fill_rect(0, static_cast<int>(s * 0.2), side, static_cast<int>(s * 0.25), bar);
      c.add_noise(rng, 0.01);
      return std::move(c).finish();
    }
    case 8: {  // sign
      Canvas c(side, side, rng.uniform(0.4, 0.6));
      c.fill_rect(static_cast<int>(s * 0.1), static_cast<int>(s * 0.2), static_cast<int>(s * 0.9),
                  static_cast<int>(s * 0.8), 0.05);
      c.fill_rect(static_cast<int>(s * 0.13), static_cast<int>(s * 0.23), static_cast<int>(s * 0.87),
                  static_cast<int>(s * 0.77), 0.95);
      for (int row = 0; row < 3; ++row) {
        const double y = s * (0.32 + 0.15 * row);
        c.line(s * 0.2, y, s * rng.uniform(0.5, 0.8), y, 3.0, 0.1);
      }
      c.add_noise(rng, 0.01);
      return std::move(c).finish();
    }
    case 9: {  // shadow
      Canvas c(side, side, 0.0);
      const double light = rng.uniform(0.55, 0.8);
      const double dark = light - rng.uniform(0.25, 0.4);
      const double slope = rng.uniform(-1.0, 1.0);
      const double offset = rng.uniform(0.3, 0.7) * s;
      for (int y = 0; y < side; ++y) {
        for (int x = 0; x < side; ++x) c.at(x, y) = y > offset + slope * (x - s / 2) ? dark : light;
      }
      c.add_noise(rng, 0.01);
      return std::move(c).finish();
    }
    case 10: {  // bush
      Canvas c(side, side, rng.uniform(0.3, 0.45));
      c.add_value_noise(rng, 10.0, 0.15);
      c.add_value_noise(rng, 2.0, 0.06);
      return std::move(c).finish();
    }
    case 11: {  // cable
      Canvas c(side, side, rng.uniform(0.75, 0.9));
      const int n = 1 + static_cast<int>(rng.below(3));
      for (int i = 0; i < n; ++i) {
        const double y0 = rng.uniform(0, s);
        c.line(0, y0, s, y0 + rng.uniform(-0.4, 0.4) * s, 1.0, rng.uniform(0.05, 0.3));
      }
      c.add_noise(rng, 0.005);
      return std::move(c).finish();
    }
    default: {  // building: a crop of a rendered facade below the sky band
      const int size = std::max(256, 2 * side);
      const double degradation = rng.uniform(0.0, 1.15);
      const auto facade = render_facade(size, degradation, rng);
      const int y0 = static_cast<int>(size * 0.18) + static_cast<int>(rng.below(
                         static_cast<std::uint64_t>(size - side - static_cast<int>(size * 0.18) + 1)));
      const int x0 = static_cast<int>(rng.below(static_cast<std::uint64_t>(size - side + 1)));
      return crop(facade, PatchSpec{{}, x0, y0, side});
    }
  }
}

}  // namespace

std::vector<RelevanceSample> synth_relevance_patches(std::size_t per_class, int side, std::uint64_t seed) {
  if (side < 16) throw InvalidArgument("dataset", "relevance patch side must be at least 16 pixels");
  const std::size_t classes = default_relevance_labels().size();
  std::vector<RelevanceSample> out;
  out.reserve(per_class * classes);
  for (std::size_t label = 0; label < classes; ++label) {
    for (std::size_t i = 0; i < per_class; ++i) {
      Rng rng(mix_seed(mix_seed(seed, label), i));
      out.push_back({relevance_texture(label, side, rng), label});
    }
  }
  return out;
}

}  // namespace bcond
