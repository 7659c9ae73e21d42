// SPDX-License-Identifier: Apache-2.0
#include "affc/augmentation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "affc/codec.hpp"
#include "affc/errors.hpp"

namespace affc {

namespace {

constexpr std::array<std::string_view, 7> kOperatorNames = {
    "fog", "rain", "snow", "shadow", "sun_flare", "brighten", "darken",
};

}  // namespace

std::string_view to_string(OperatorKind op) noexcept {
  return kOperatorNames[static_cast<std::size_t>(op)];
}

std::optional<OperatorKind> parse_operator(std::string_view name) noexcept {
  for (std::size_t i = 0; i < kOperatorNames.size(); ++i) {
    if (kOperatorNames[i] == name) return static_cast<OperatorKind>(i);
  }
  return std::nullopt;
}

Strength::Strength(double value) : value_(value) {
  if (!(value >= 0.0 && value <= 1.0)) {
    throw DomainError("interference strength must lie in [0, 1], got " +
                      std::to_string(value));
  }
}

int Strength::millis() const noexcept {
  return static_cast<int>(round_half_away(value_ * 1000.0));
}

AugmentationSeed derive_seed(std::uint64_t campaign_seed,
                             std::string_view image_id, OperatorKind op) noexcept {
  std::uint64_t h = mix64(campaign_seed);
  h = mix64(h ^ fnv1a64(image_id));
  h = mix64(h ^ (static_cast<std::uint64_t>(op) + 1));
  return {h};
}

namespace geometry_plan {

std::size_t element_count(double strength, double per_megapixel,
                          std::size_t width, std::size_t height) noexcept {
  const double megapixels =
      static_cast<double>(width) * static_cast<double>(height) / 1e6;
  return static_cast<std::size_t>(
      round_half_away(strength * per_megapixel * megapixels));
}

RainPlan plan_rain(std::size_t width, std::size_t height, double strength,
                   AugmentationSeed seed) {
  SplitMix64 rng(seed.value);
  RainPlan plan{};
  // Tilt from vertical, shared by every streak.
  const double angle = rng.uniform(-0.35, 0.35);
  plan.dir_x = std::sin(angle);
  plan.dir_y = std::cos(angle);
  plan.length = 10 + static_cast<int>(round_half_away(30.0 * strength));

  // Anchors are drawn for the maximal count so a prefix is used at every i.
  const auto max_count = element_count(1.0, model::kRainPerMegapixel, width, height);
  const auto count = element_count(strength, model::kRainPerMegapixel, width, height);
  plan.streaks.reserve(count);
  for (std::size_t k = 0; k < max_count; ++k) {
    const double x0 = rng.uniform(0.0, static_cast<double>(width));
    const double y0 = rng.uniform(0.0, static_cast<double>(height));
    if (k < count) plan.streaks.push_back({x0, y0});
  }
  return plan;
}

std::vector<Flake> plan_snow(std::size_t width, std::size_t height,
                             double strength, AugmentationSeed seed) {
  SplitMix64 rng(seed.value);
  const auto max_count = element_count(1.0, model::kSnowPerMegapixel, width, height);
  const auto count = element_count(strength, model::kSnowPerMegapixel, width, height);
  std::vector<Flake> flakes;
  flakes.reserve(count);
  for (std::size_t k = 0; k < max_count; ++k) {
    Flake f{};
    f.cx = rng.uniform(0.0, static_cast<double>(width));
    f.cy = rng.uniform(0.0, static_cast<double>(height));
    f.radius = 1 + static_cast<int>(rng.below(3));
    if (k < count) flakes.push_back(f);
  }
  return flakes;
}

std::array<Quad, model::kShadowPolygons> plan_shadow(std::size_t width,
                                                     std::size_t height,
                                                     AugmentationSeed seed) {
  SplitMix64 rng(seed.value);
  const double w = static_cast<double>(width);
  const double h = static_cast<double>(height);
  std::array<Quad, model::kShadowPolygons> quads{};
  for (auto& quad : quads) {
    const double cx = rng.uniform(0.0, w);
    const double cy = rng.uniform(0.0, h);
    const double ax = rng.uniform(0.1, 0.35) * w;
    const double ay = rng.uniform(0.1, 0.35) * h;
    const double base = rng.uniform(0.0, 2.0 * std::numbers::pi);
    // Four points on an ellipse in angular order form a convex polygon;
    // jitter below pi/4 keeps the order.
    for (std::size_t k = 0; k < 4; ++k) {
      const double theta = base + static_cast<double>(k) * std::numbers::pi / 2.0 +
                           rng.uniform(-0.5, 0.5);
      quad[k] = {cx + ax * std::cos(theta), cy + ay * std::sin(theta)};
    }
  }
  return quads;
}

Point plan_flare_center(std::size_t width, std::size_t height,
                        AugmentationSeed seed) {
  SplitMix64 rng(seed.value);
  const double cx = rng.uniform(0.0, static_cast<double>(width));
  const double cy = rng.uniform(0.0, static_cast<double>(height) / 2.0);
  return {cx, cy};
}

}  // namespace geometry_plan

namespace {

using geometry_plan::Point;
using geometry_plan::Quad;

std::uint8_t blend(std::uint8_t v, double target, double t) noexcept {
  return clamp_sample(round_half_away(v + (target - v) * t));
}

std::uint8_t scale(std::uint8_t v, double factor) noexcept {
  return clamp_sample(round_half_away(v * factor));
}

ImageBuffer apply_brighten(const ImageBuffer& src, double i) {
  ImageBuffer out = src;
  for (auto& v : out.data()) v = blend(v, 255.0, i);
  return out;
}

ImageBuffer apply_darken(const ImageBuffer& src, double i) {
  ImageBuffer out = src;
  for (auto& v : out.data()) v = scale(v, 1.0 - i);
  return out;
}

// Separable box blur with clamp-to-edge sampling. Sums stay integral and are
// divided once, so the result is exact.
void box_blur(ImageBuffer& img, std::size_t radius) {
  if (radius == 0) return;
  const std::size_t w = img.width();
  const std::size_t h = img.height();
  const long r = static_cast<long>(radius);
  constexpr std::size_t C = ImageBuffer::kChannels;
  auto clamp_index = [](long v, std::size_t n) {
    return static_cast<std::size_t>(std::clamp<long>(v, 0, static_cast<long>(n) - 1));
  };

  std::vector<std::uint32_t> horiz(w * h * C);
  auto data = img.data();
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t c = 0; c < C; ++c) {
      std::uint32_t sum = 0;
      for (long k = -r; k <= r; ++k) sum += data[(y * w + clamp_index(k, w)) * C + c];
      for (std::size_t x = 0; x < w; ++x) {
        horiz[(y * w + x) * C + c] = sum;
        const long xl = static_cast<long>(x);
        sum += data[(y * w + clamp_index(xl + r + 1, w)) * C + c];
        sum -= data[(y * w + clamp_index(xl - r, w)) * C + c];
      }
    }
  }

  const std::uint64_t divisor = static_cast<std::uint64_t>(2 * r + 1) *
                                static_cast<std::uint64_t>(2 * r + 1);
  for (std::size_t x = 0; x < w; ++x) {
    for (std::size_t c = 0; c < C; ++c) {
      std::uint64_t sum = 0;
      for (long k = -r; k <= r; ++k) sum += horiz[(clamp_index(k, h) * w + x) * C + c];
      for (std::size_t y = 0; y < h; ++y) {
        // Round half up; all quantities are non-negative.
        data[(y * w + x) * C + c] =
            static_cast<std::uint8_t>((2 * sum + divisor) / (2 * divisor));
        const long yl = static_cast<long>(y);
        sum += horiz[(clamp_index(yl + r + 1, h) * w + x) * C + c];
        sum -= horiz[(clamp_index(yl - r, h) * w + x) * C + c];
      }
    }
  }
}

ImageBuffer apply_fog(const ImageBuffer& src, double i) {
  ImageBuffer out = src;
  for (auto& v : out.data()) v = blend(v, model::kFogGray, i);
  const double short_side =
      static_cast<double>(std::min(src.width(), src.height()));
  box_blur(out, static_cast<std::size_t>(
                    round_half_away(i * short_side / model::kFogBlurDivisor)));
  return out;
}

ImageBuffer apply_rain(const ImageBuffer& src, double i, AugmentationSeed seed) {
  const auto plan = geometry_plan::plan_rain(src.width(), src.height(), i, seed);
  const long w = static_cast<long>(src.width());
  const long h = static_cast<long>(src.height());

  std::vector<bool> mask(src.pixel_count(), false);
  for (const auto& s : plan.streaks) {
    for (int t = 0; t < plan.length; ++t) {
      const long px = static_cast<long>(std::floor(s.x0 + t * plan.dir_x));
      const long py = static_cast<long>(std::floor(s.y0 + t * plan.dir_y));
      if (py < 0 || py >= h) continue;
      for (long dx = 0; dx < model::kRainWidth; ++dx) {
        if (px + dx >= 0 && px + dx < w) {
          mask[static_cast<std::size_t>(py * w + px + dx)] = true;
        }
      }
    }
  }

  ImageBuffer out = src;
  const double dim = 1.0 - model::kRainDarken * i;
  for (std::size_t p = 0; p < out.pixel_count(); ++p) {
    std::uint8_t* px = out.data().data() + p * ImageBuffer::kChannels;
    for (std::size_t c = 0; c < ImageBuffer::kChannels; ++c) {
      std::uint8_t v = px[c];
      if (mask[p]) v = blend(v, model::kRainColor[c], model::kRainBlend);
      px[c] = scale(v, dim);
    }
  }
  return out;
}

ImageBuffer apply_snow(const ImageBuffer& src, double i, AugmentationSeed seed) {
  ImageBuffer out = src;
  const double threshold =
      255.0 - static_cast<double>(round_half_away(model::kSnowThresholdSpan * i));
  for (std::size_t p = 0; p < out.pixel_count(); ++p) {
    std::uint8_t* px = out.data().data() + p * ImageBuffer::kChannels;
    const double excess = luminance(px) - threshold;
    if (excess <= 0.0) continue;
    const double t =
        model::kSnowBlend * std::min(1.0, excess / model::kSnowRampWidth);
    for (std::size_t c = 0; c < ImageBuffer::kChannels; ++c) px[c] = blend(px[c], 255.0, t);
  }

  const long w = static_cast<long>(src.width());
  const long h = static_cast<long>(src.height());
  for (const auto& f : geometry_plan::plan_snow(src.width(), src.height(), i, seed)) {
    const long x_lo = std::max<long>(0, static_cast<long>(std::floor(f.cx)) - f.radius);
    const long x_hi = std::min<long>(w - 1, static_cast<long>(std::floor(f.cx)) + f.radius);
    const long y_lo = std::max<long>(0, static_cast<long>(std::floor(f.cy)) - f.radius);
    const long y_hi = std::min<long>(h - 1, static_cast<long>(std::floor(f.cy)) + f.radius);
    const double r2 = static_cast<double>(f.radius) * f.radius;
    for (long y = y_lo; y <= y_hi; ++y) {
      for (long x = x_lo; x <= x_hi; ++x) {
        const double dx = x + 0.5 - f.cx;
        const double dy = y + 0.5 - f.cy;
        if (dx * dx + dy * dy <= r2) {
          std::uint8_t* px = out.pixel(static_cast<std::size_t>(x), static_cast<std::size_t>(y));
          px[0] = px[1] = px[2] = 255;
        }
      }
    }
  }
  return out;
}

bool inside_convex(const Quad& q, double x, double y) noexcept {
  int sign = 0;
  for (std::size_t k = 0; k < q.size(); ++k) {
    const Point& a = q[k];
    const Point& b = q[(k + 1) % q.size()];
    const double cross = (b.x - a.x) * (y - a.y) - (b.y - a.y) * (x - a.x);
    const int s = cross > 0.0 ? 1 : (cross < 0.0 ? -1 : 0);
    if (s == 0) continue;
    if (sign == 0) sign = s;
    else if (s != sign) return false;
  }
  return true;
}

ImageBuffer apply_shadow(const ImageBuffer& src, double i, AugmentationSeed seed) {
  const auto quads = geometry_plan::plan_shadow(src.width(), src.height(), seed);
  const double factor = 1.0 - model::kShadowDepth * i;
  ImageBuffer out = src;
  for (std::size_t y = 0; y < src.height(); ++y) {
    for (std::size_t x = 0; x < src.width(); ++x) {
      const double cx = static_cast<double>(x) + 0.5;
      const double cy = static_cast<double>(y) + 0.5;
      const bool shaded = std::any_of(quads.begin(), quads.end(), [&](const Quad& q) {
        return inside_convex(q, cx, cy);
      });
      if (!shaded) continue;
      std::uint8_t* px = out.pixel(x, y);
      for (std::size_t c = 0; c < ImageBuffer::kChannels; ++c) px[c] = scale(px[c], factor);
    }
  }
  return out;
}

ImageBuffer apply_sun_flare(const ImageBuffer& src, double i, AugmentationSeed seed) {
  const auto center = geometry_plan::plan_flare_center(src.width(), src.height(), seed);
  const double radius = model::kFlareRadiusFraction *
                        static_cast<double>(std::min(src.width(), src.height()));
  ImageBuffer out = src;
  for (std::size_t y = 0; y < src.height(); ++y) {
    for (std::size_t x = 0; x < src.width(); ++x) {
      const double d = std::hypot(static_cast<double>(x) + 0.5 - center.x,
                                  static_cast<double>(y) + 0.5 - center.y);
      const long add = round_half_away(255.0 * i * std::max(0.0, 1.0 - d / radius));
      if (add == 0) continue;
      std::uint8_t* px = out.pixel(x, y);
      for (std::size_t c = 0; c < ImageBuffer::kChannels; ++c) px[c] = clamp_sample(px[c] + add);
    }
  }
  return out;
}

}  // namespace

ImageBuffer apply(OperatorKind op, const ImageBuffer& image, Strength strength,
                  AugmentationSeed seed) {
  const double i = strength.value();
  switch (op) {
    case OperatorKind::fog:
      return apply_fog(image, i);
    case OperatorKind::rain:
      return apply_rain(image, i, seed);
    case OperatorKind::snow:
      return apply_snow(image, i, seed);
    case OperatorKind::shadow:
      return apply_shadow(image, i, seed);
    case OperatorKind::sun_flare:
      return apply_sun_flare(image, i, seed);
    case OperatorKind::brighten:
      return apply_brighten(image, i);
    case OperatorKind::darken:
      return apply_darken(image, i);
  }
  throw DomainError("unknown operator");
}

ImageBuffer apply(OperatorKind op, const ImageBuffer& image, double strength,
                  AugmentationSeed seed) {
  return apply(op, image, Strength(strength), seed);
}

std::vector<Strength> strength_grid(double step) {
  if (!(step > 0.0 && step <= 0.5)) {
    throw ConfigError("grid step must lie in (0, 0.5], got " + std::to_string(step));
  }
  const double inverse = 1.0 / step;
  const double n = std::round(inverse);
  const double ulp = std::nextafter(n, INFINITY) - n;
  if (std::abs(inverse - n) > ulp) {
    throw ConfigError("grid step " + std::to_string(step) + " does not divide 1");
  }
  const auto count = static_cast<std::size_t>(n);
  std::vector<Strength> grid;
  grid.reserve(count);
  for (std::size_t k = 1; k <= count; ++k) {
    grid.emplace_back(static_cast<double>(k) / n);
  }
  return grid;
}

double mean_abs_delta(const ImageBuffer& a, const ImageBuffer& b) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw StructuralError("mean_abs_delta: image dimensions differ");
  }
  std::uint64_t sum = 0;
  const auto da = a.data();
  const auto db = b.data();
  for (std::size_t k = 0; k < da.size(); ++k) {
    sum += static_cast<std::uint64_t>(std::abs(int{da[k]} - int{db[k]}));
  }
  return static_cast<double>(sum) / (static_cast<double>(da.size()) * 255.0);
}

std::vector<SmoothnessSample> smoothness_audit(OperatorKind op,
                                               const ImageBuffer& image,
                                               std::span<const Strength> grid,
                                               AugmentationSeed seed) {
  if (grid.empty()) throw ConfigError("smoothness audit needs a nonempty grid");
  std::vector<SmoothnessSample> out;
  out.reserve(grid.size() - 1);
  ImageBuffer previous = apply(op, image, grid.front(), seed);
  for (std::size_t k = 1; k < grid.size(); ++k) {
    ImageBuffer current = apply(op, image, grid[k], seed);
    out.push_back({grid[k], mean_abs_delta(previous, current)});
    previous = std::move(current);
  }
  return out;
}

}  // namespace affc
