// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace affc {

/// Axis-aligned box, top-left origin, pixels.
struct BoundingBox {
  double x = 0.0;
  double y = 0.0;
  double w = 1.0;
  double h = 1.0;

  double area() const noexcept { return w * h; }
  bool valid() const noexcept;

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

struct Detection {
  std::string class_label;
  BoundingBox box;
  double confidence = 1.0;

  bool valid() const noexcept;
  friend bool operator==(const Detection&, const Detection&) = default;
};

using DetectionSet = std::vector<Detection>;

/// Parameters of the detection-equivalence predicate. The overlap metric is
/// always intersection-over-union.
class EquivalenceConfig {
 public:
  static constexpr double kDefaultDelta = 0.5;

  EquivalenceConfig() = default;
  /// Throws ConfigError unless 0 < delta < 1.
  explicit EquivalenceConfig(double delta);

  double delta() const noexcept { return delta_; }

 private:
  double delta_ = kDefaultDelta;
};

double iou(const BoundingBox& a, const BoundingBox& b) noexcept;

/// Highest-confidence detection; ties go to the larger box, then the
/// lexicographically smaller label, then smaller x, then smaller y.
std::optional<Detection> primary_detection(std::span<const Detection> ds);

/// Top-1 equivalence: both empty, or same class and IoU strictly above delta.
bool equivalent(std::span<const Detection> r, std::span<const Detection> r2,
                const EquivalenceConfig& cfg);
bool equivalent(const std::optional<Detection>& d,
                const std::optional<Detection>& d2,
                const EquivalenceConfig& cfg);

}  // namespace affc
