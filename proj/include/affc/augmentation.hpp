// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "affc/image.hpp"

namespace affc {

enum class OperatorKind : std::uint8_t {
  fog,
  rain,
  snow,
  shadow,
  sun_flare,
  brighten,
  darken,
};

inline constexpr std::array<OperatorKind, 7> kAllOperators = {
    OperatorKind::fog,       OperatorKind::rain,     OperatorKind::snow,
    OperatorKind::shadow,    OperatorKind::sun_flare, OperatorKind::brighten,
    OperatorKind::darken,
};

std::string_view to_string(OperatorKind op) noexcept;
std::optional<OperatorKind> parse_operator(std::string_view name) noexcept;

/// Interference strength in [0, 1]; 0 leaves the image untouched.
class Strength {
 public:
  constexpr Strength() = default;
  /// Throws DomainError outside [0, 1] (NaN included).
  explicit Strength(double value);

  constexpr double value() const noexcept { return value_; }
  /// Strength scaled to integer thousandths, rounded.
  int millis() const noexcept;

  friend constexpr auto operator<=>(Strength, Strength) = default;

 private:
  double value_ = 0.0;
};

struct AugmentationSeed {
  std::uint64_t value = 0;
  friend constexpr bool operator==(AugmentationSeed, AugmentationSeed) = default;
};

/// Seed for one (image, operator) pair of a campaign. Identical at every
/// strength so stochastic geometry only scales with i.
AugmentationSeed derive_seed(std::uint64_t campaign_seed,
                             std::string_view image_id, OperatorKind op) noexcept;

/// phi(x, i). Throws DomainError when strength is outside [0, 1].
ImageBuffer apply(OperatorKind op, const ImageBuffer& image, Strength strength,
                  AugmentationSeed seed);
ImageBuffer apply(OperatorKind op, const ImageBuffer& image, double strength,
                  AugmentationSeed seed);

/// {step, 2 step, ..., 1.0}. Throws ConfigError unless 0 < step <= 0.5 and
/// 1/step is an integer to within one ulp.
std::vector<Strength> strength_grid(double step);

struct SmoothnessSample {
  Strength strength;       // upper end of the adjacent pair
  double mean_abs_delta;   // normalized to [0, 1]
};

/// Mean absolute per-sample change between consecutive grid strengths.
std::vector<SmoothnessSample> smoothness_audit(OperatorKind op,
                                               const ImageBuffer& image,
                                               std::span<const Strength> grid,
                                               AugmentationSeed seed);

/// Mean absolute per-sample difference of two equally sized images, / 255.
double mean_abs_delta(const ImageBuffer& a, const ImageBuffer& b);

/// Round half away from zero; the only rounding mode used on samples.
inline long round_half_away(double v) noexcept {
  return v < 0.0 ? -static_cast<long>(-v + 0.5) : static_cast<long>(v + 0.5);
}

inline std::uint8_t clamp_sample(long v) noexcept {
  return static_cast<std::uint8_t>(v < 0 ? 0 : (v > 255 ? 255 : v));
}

// Pixel-model constants.
namespace model {
inline constexpr int kFogGray = 200;
inline constexpr double kFogBlurDivisor = 64.0;

inline constexpr double kRainPerMegapixel = 800.0;
inline constexpr std::array<int, 3> kRainColor = {210, 215, 225};
inline constexpr double kRainBlend = 0.6;
inline constexpr double kRainDarken = 0.15;
inline constexpr int kRainWidth = 2;

inline constexpr double kSnowPerMegapixel = 1500.0;
inline constexpr int kSnowThresholdSpan = 140;
inline constexpr double kSnowBlend = 0.7;
/// Luminance width over which snow whitening ramps in above the threshold.
inline constexpr double kSnowRampWidth = 32.0;

inline constexpr int kShadowPolygons = 3;
inline constexpr double kShadowDepth = 0.7;

inline constexpr double kFlareRadiusFraction = 0.6;
}  // namespace model

// Seeded geometry, exposed so tests can check it is stable across strengths.
namespace geometry_plan {

struct Streak {
  double x0, y0;  // anchor
};
struct RainPlan {
  double dir_x, dir_y;  // unit direction, shared by all streaks
  int length;
  std::vector<Streak> streaks;
};
RainPlan plan_rain(std::size_t width, std::size_t height, double strength,
                   AugmentationSeed seed);

struct Flake {
  double cx, cy;
  int radius;
};
std::vector<Flake> plan_snow(std::size_t width, std::size_t height,
                             double strength, AugmentationSeed seed);

struct Point {
  double x, y;
};
using Quad = std::array<Point, 4>;
std::array<Quad, model::kShadowPolygons> plan_shadow(std::size_t width,
                                                     std::size_t height,
                                                     AugmentationSeed seed);

Point plan_flare_center(std::size_t width, std::size_t height,
                        AugmentationSeed seed);

/// Number of seeded elements present at `strength`: round(i * k * MP).
std::size_t element_count(double strength, double per_megapixel,
                          std::size_t width, std::size_t height) noexcept;

}  // namespace geometry_plan

}  // namespace affc
