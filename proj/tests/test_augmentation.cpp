#include <cmath>
#include <limits>
#include <random>

#include "affc/augmentation.hpp"
#include "affc/errors.hpp"
#include "doctest.h"

using namespace affc;

namespace {

ImageBuffer random_image(std::size_t w, std::size_t h, std::uint32_t seed) {
  std::mt19937 rng(seed);
  std::uniform_int_distribution<int> v(0, 255);
  std::vector<std::uint8_t> data(w * h * 3);
  for (auto& s : data) s = static_cast<std::uint8_t>(v(rng));
  return ImageBuffer(w, h, std::move(data));
}

// Smooth gradient so the blur in fog does not dominate the comparison.
ImageBuffer gradient_image(std::size_t w, std::size_t h) {
  ImageBuffer img(w, h);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      auto* p = img.pixel(x, y);
      p[0] = static_cast<std::uint8_t>(255 * x / (w - 1));
      p[1] = static_cast<std::uint8_t>(255 * y / (h - 1));
      p[2] = static_cast<std::uint8_t>((p[0] + p[1]) / 2);
    }
  }
  return img;
}

long oracle_round(double v) { return static_cast<long>(std::floor(std::abs(v) + 0.5)) * (v < 0 ? -1 : 1); }

std::uint8_t oracle_clamp(long v) { return static_cast<std::uint8_t>(std::min(255L, std::max(0L, v))); }

// Direct 2D box blur with clamp-to-edge sampling.
ImageBuffer oracle_box_blur(const ImageBuffer& in, long r) {
  ImageBuffer out = in;
  const long w = static_cast<long>(in.width());
  const long h = static_cast<long>(in.height());
  for (long y = 0; y < h; ++y) {
    for (long x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        long sum = 0;
        for (long dy = -r; dy <= r; ++dy) {
          for (long dx = -r; dx <= r; ++dx) {
            const long sx = std::clamp(x + dx, 0L, w - 1);
            const long sy = std::clamp(y + dy, 0L, h - 1);
            sum += in.pixel(sx, sy)[c];
          }
        }
        const double n = double((2 * r + 1) * (2 * r + 1));
        out.pixel(x, y)[c] = oracle_clamp(oracle_round(sum / n));
      }
    }
  }
  return out;
}

constexpr AugmentationSeed kSeed{0x5eed};

}  // namespace

TEST_CASE("operator names round-trip") {
  for (auto op : kAllOperators) CHECK(parse_operator(to_string(op)) == op);
  CHECK_FALSE(parse_operator("hail").has_value());
  CHECK(kAllOperators.size() == 7);
}

TEST_CASE("rounding is half away from zero") {
  CHECK(round_half_away(177.5) == 178);
  CHECK(round_half_away(2.5) == 3);
  CHECK(round_half_away(2.4999) == 2);
  CHECK(round_half_away(-2.5) == -3);
}

TEST_CASE("zero strength returns an identical image for every operator") {
  for (std::uint32_t s = 0; s < 4; ++s) {
    const auto img = random_image(37, 23, s);
    for (auto op : kAllOperators) {
      CAPTURE(to_string(op));
      CHECK(apply(op, img, 0.0, kSeed) == img);
    }
  }
}

TEST_CASE("photometric operators on uniform images") {
  CHECK(apply(OperatorKind::darken, ImageBuffer::uniform(8, 8, 200), 0.25, kSeed) ==
        ImageBuffer::uniform(8, 8, 150));
  CHECK(apply(OperatorKind::brighten, ImageBuffer::uniform(8, 8, 100), 0.5, kSeed) ==
        ImageBuffer::uniform(8, 8, 178));
  CHECK(apply(OperatorKind::fog, ImageBuffer::uniform(64, 64, 50), 1.0, kSeed) ==
        ImageBuffer::uniform(64, 64, 200));
  CHECK(apply(OperatorKind::brighten, ImageBuffer::uniform(4, 4, 17), 1.0, kSeed) ==
        ImageBuffer::uniform(4, 4, 255));
  CHECK(apply(OperatorKind::darken, ImageBuffer::uniform(4, 4, 17), 1.0, kSeed) ==
        ImageBuffer::uniform(4, 4, 0));
}

TEST_CASE("brighten and darken match the per-sample formula") {
  const auto img = random_image(19, 11, 42);
  for (double i : {0.025, 0.3, 0.5, 0.775, 1.0}) {
    const auto b = apply(OperatorKind::brighten, img, i, kSeed);
    const auto d = apply(OperatorKind::darken, img, i, kSeed);
    for (std::size_t k = 0; k < img.data().size(); ++k) {
      const double v = img.data()[k];
      CHECK(b.data()[k] == oracle_clamp(oracle_round(v + (255 - v) * i)));
      CHECK(d.data()[k] == oracle_clamp(oracle_round(v * (1 - i))));
    }
  }
}

TEST_CASE("fog matches blend followed by a direct box blur") {
  const auto img = random_image(70, 66, 5);
  for (double i : {0.1, 0.5, 1.0}) {
    ImageBuffer blended = img;
    for (auto& v : blended.data()) v = oracle_clamp(oracle_round(v + (200.0 - v) * i));
    const long r = oracle_round(i * 66 / 64.0);
    CAPTURE(i);
    CHECK(apply(OperatorKind::fog, img, i, kSeed) == oracle_box_blur(blended, r));
  }
}

TEST_CASE("rain touches streak pixels and dims the rest") {
  const auto img = random_image(200, 150, 9);
  const double i = 0.6;
  const auto plan = geometry_plan::plan_rain(200, 150, i, kSeed);
  CHECK(plan.streaks.size() == static_cast<std::size_t>(oracle_round(i * 800 * 0.03)));
  CHECK(plan.length == 10 + oracle_round(30 * i));
  const auto out = apply(OperatorKind::rain, img, i, kSeed);
  const double dim = 1 - 0.15 * i;
  std::size_t streak_pixels = 0;
  for (std::size_t p = 0; p < img.pixel_count(); ++p) {
    const auto* src = img.data().data() + p * 3;
    const auto* dst = out.data().data() + p * 3;
    bool plain = true;
    bool streak = true;
    static constexpr int kColor[3] = {210, 215, 225};
    for (int c = 0; c < 3; ++c) {
      plain &= dst[c] == oracle_clamp(oracle_round(src[c] * dim));
      const auto blended = oracle_clamp(oracle_round(src[c] + (kColor[c] - src[c]) * 0.6));
      streak &= dst[c] == oracle_clamp(oracle_round(blended * dim));
    }
    CHECK((plain || streak));
    streak_pixels += streak && !plain;
  }
  CHECK(streak_pixels > 0);
}

TEST_CASE("rain has no streaks at zero strength") {
  CHECK(geometry_plan::plan_rain(640, 480, 0.0, kSeed).streaks.empty());
  CHECK(geometry_plan::plan_snow(640, 480, 0.0, kSeed).empty());
}

TEST_CASE("seeded geometry is stable across strengths") {
  const auto full_rain = geometry_plan::plan_rain(320, 240, 1.0, kSeed);
  const auto full_snow = geometry_plan::plan_snow(320, 240, 1.0, kSeed);
  const auto quads = geometry_plan::plan_shadow(320, 240, kSeed);
  const auto flare = geometry_plan::plan_flare_center(320, 240, kSeed);
  CHECK(flare.y < 120.0);
  for (double i : {0.025, 0.2, 0.55, 0.9}) {
    const auto rain = geometry_plan::plan_rain(320, 240, i, kSeed);
    CHECK(rain.dir_x == full_rain.dir_x);
    REQUIRE(rain.streaks.size() <= full_rain.streaks.size());
    for (std::size_t k = 0; k < rain.streaks.size(); ++k) {
      CHECK(rain.streaks[k].x0 == full_rain.streaks[k].x0);
      CHECK(rain.streaks[k].y0 == full_rain.streaks[k].y0);
    }
    const auto snow = geometry_plan::plan_snow(320, 240, i, kSeed);
    for (std::size_t k = 0; k < snow.size(); ++k) {
      CHECK(snow[k].cx == full_snow[k].cx);
      CHECK(snow[k].radius == full_snow[k].radius);
    }
  }
  // Shadow region is fixed: the set of changed pixels is the same at any i.
  const auto img = ImageBuffer::uniform(120, 90, 180);
  const auto a = apply(OperatorKind::shadow, img, 0.3, kSeed);
  const auto b = apply(OperatorKind::shadow, img, 0.9, kSeed);
  std::size_t shaded = 0;
  for (std::size_t k = 0; k < img.data().size(); ++k) {
    CHECK((a.data()[k] != 180) == (b.data()[k] != 180));
    if (a.data()[k] != 180) {
      CHECK(a.data()[k] == oracle_round(180 * (1 - 0.7 * 0.3)));
      ++shaded;
    }
  }
  CHECK(shaded > 0);
}

TEST_CASE("snow flakes are white discs of radius 1 to 3") {
  for (const auto& f : geometry_plan::plan_snow(400, 300, 1.0, kSeed)) {
    CHECK(f.radius >= 1);
    CHECK(f.radius <= 3);
  }
  CHECK(geometry_plan::plan_snow(400, 300, 1.0, kSeed).size() == 180);
  // Dark image: the luminance threshold never triggers, only flakes appear.
  const auto out = apply(OperatorKind::snow, ImageBuffer::uniform(400, 300, 10), 0.5, kSeed);
  for (auto v : out.data()) CHECK((v == 10 || v == 255));
}

TEST_CASE("sun flare adds a radial falloff around the seeded center") {
  const auto img = ImageBuffer::uniform(100, 80, 0);
  const double i = 0.4;
  const auto out = apply(OperatorKind::sun_flare, img, i, kSeed);
  const auto c = geometry_plan::plan_flare_center(100, 80, kSeed);
  const double radius = 0.6 * 80;
  for (std::size_t y = 0; y < 80; y += 7) {
    for (std::size_t x = 0; x < 100; x += 7) {
      const double d = std::hypot(x + 0.5 - c.x, y + 0.5 - c.y);
      const auto expected = oracle_clamp(oracle_round(255 * i * std::max(0.0, 1 - d / radius)));
      CHECK(out.pixel(x, y)[0] == expected);
    }
  }
}

TEST_CASE("outputs keep shape, stay deterministic and vary with the seed") {
  const auto img = random_image(64, 48, 1);
  for (auto op : kAllOperators) {
    for (double i : {0.1, 0.65, 1.0}) {
      const auto a = apply(op, img, i, kSeed);
      CHECK(a.width() == img.width());
      CHECK(a.height() == img.height());
      CHECK(a == apply(op, img, i, kSeed));
    }
  }
  const auto s1 = apply(OperatorKind::shadow, img, 1.0, AugmentationSeed{1});
  const auto s2 = apply(OperatorKind::shadow, img, 1.0, AugmentationSeed{2});
  CHECK(s1 != s2);
}

TEST_CASE("photometric operators respond monotonically") {
  const auto grid = strength_grid(0.05);
  for (std::uint32_t s = 0; s < 3; ++s) {
    const auto img = random_image(48, 40, 100 + s);
    double prev_bright = img.mean_sample();
    double prev_dark = img.mean_sample();
    auto fog_distance = [](const ImageBuffer& im) {
      double sum = 0;
      for (auto v : im.data()) sum += std::abs(int(v) - 200);
      return sum / double(im.data().size());
    };
    double prev_fog = fog_distance(img);
    for (auto i : grid) {
      const double bright = apply(OperatorKind::brighten, img, i, kSeed).mean_sample();
      const double dark = apply(OperatorKind::darken, img, i, kSeed).mean_sample();
      const double fog = fog_distance(apply(OperatorKind::fog, img, i, kSeed));
      CHECK(bright >= prev_bright);
      CHECK(dark <= prev_dark);
      CHECK(fog <= prev_fog);
      prev_bright = bright;
      prev_dark = dark;
      prev_fog = fog;
    }
  }
}

TEST_CASE("invalid arguments are rejected") {
  const auto img = ImageBuffer::uniform(4, 4, 1);
  CHECK_THROWS_AS(apply(OperatorKind::fog, img, 1.5, kSeed), DomainError);
  CHECK_THROWS_AS(apply(OperatorKind::fog, img, -0.01, kSeed), DomainError);
  CHECK_THROWS_AS(apply(OperatorKind::fog, img, std::nan(""), kSeed), DomainError);
  CHECK_THROWS_AS(ImageBuffer(0, 4), StructuralError);
  CHECK_THROWS_AS(ImageBuffer(2, 2, std::vector<std::uint8_t>(11)), StructuralError);
}

TEST_CASE("strength grid") {
  const auto g = strength_grid(0.025);
  REQUIRE(g.size() == 40);
  CHECK(g.front().value() == 0.025);
  CHECK(g.back().value() == 1.0);
  CHECK(g[14].value() == 0.375);
  for (std::size_t k = 1; k < g.size(); ++k) CHECK(g[k - 1] < g[k]);

  const auto half = strength_grid(0.5);
  REQUIRE(half.size() == 2);
  CHECK(half[0].value() == 0.5);
  CHECK(half[1].value() == 1.0);

  CHECK_THROWS_AS(strength_grid(0.3), ConfigError);
  CHECK_THROWS_AS(strength_grid(0.0), ConfigError);
  CHECK_THROWS_AS(strength_grid(0.75), ConfigError);
  CHECK_THROWS_AS(strength_grid(-0.025), ConfigError);
}

TEST_CASE("smoothness audit") {
  const auto grid = strength_grid(0.025);
  const auto ramp = smoothness_audit(OperatorKind::darken, ImageBuffer::uniform(16, 16, 255),
                                     grid, kSeed);
  REQUIRE(ramp.size() == 39);
  for (const auto& s : ramp) CHECK(std::abs(s.mean_abs_delta - 0.025) <= 1.0 / 255 + 1e-12);

  const std::vector<Strength> single{Strength(0.5)};
  CHECK(smoothness_audit(OperatorKind::rain, ImageBuffer::uniform(8, 8, 9), single, kSeed).empty());

  for (const auto& s :
       smoothness_audit(OperatorKind::fog, ImageBuffer::uniform(40, 40, 200), grid, kSeed)) {
    CHECK(s.mean_abs_delta == 0.0);
  }
  CHECK_THROWS_AS(smoothness_audit(OperatorKind::fog, ImageBuffer::uniform(4, 4, 0), {}, kSeed),
                  ConfigError);
}

TEST_CASE("smoothness budget holds on uniform images") {
  const auto grid = strength_grid(0.025);
  for (int v : {0, 60, 128, 200, 255}) {
    const auto img = ImageBuffer::uniform(160, 120, static_cast<std::uint8_t>(v));
    for (auto op : kAllOperators) {
      for (const auto& s : smoothness_audit(op, img, grid, kSeed)) {
        CAPTURE(v);
        CAPTURE(to_string(op));
        CAPTURE(s.strength.value());
        CHECK(s.mean_abs_delta <= 3 * 0.025);
      }
    }
  }
}

TEST_CASE("smooth gradient images also ramp gradually under fog") {
  const auto img = gradient_image(96, 64);
  for (const auto& s : smoothness_audit(OperatorKind::fog, img, strength_grid(0.025), kSeed)) {
    CHECK(s.mean_abs_delta <= 3 * 0.025);
  }
}

TEST_CASE("derived seeds separate images and operators") {
  const auto a = derive_seed(1, "img_a.png", OperatorKind::rain);
  CHECK(a == derive_seed(1, "img_a.png", OperatorKind::rain));
  CHECK_FALSE(a == derive_seed(1, "img_b.png", OperatorKind::rain));
  CHECK_FALSE(a == derive_seed(1, "img_a.png", OperatorKind::snow));
  CHECK_FALSE(a == derive_seed(2, "img_a.png", OperatorKind::rain));
}
