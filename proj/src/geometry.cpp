// SPDX-License-Identifier: Apache-2.0
#include "affc/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "affc/errors.hpp"

namespace affc {

bool BoundingBox::valid() const noexcept {
  return std::isfinite(x) && std::isfinite(y) && std::isfinite(w) &&
         std::isfinite(h) && w > 0.0 && h > 0.0;
}

bool Detection::valid() const noexcept {
  return !class_label.empty() && box.valid() && confidence >= 0.0 &&
         confidence <= 1.0;
}

EquivalenceConfig::EquivalenceConfig(double delta) : delta_(delta) {
  if (!(delta > 0.0 && delta < 1.0)) {
    throw ConfigError("delta must lie in (0, 1), got " + std::to_string(delta));
  }
}

double iou(const BoundingBox& a, const BoundingBox& b) noexcept {
  const double ix = std::max(0.0, std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x));
  const double iy = std::max(0.0, std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y));
  const double inter = ix * iy;
  if (inter <= 0.0) return 0.0;
  const double uni = a.area() + b.area() - inter;
  return std::clamp(inter / uni, 0.0, 1.0);
}

namespace {

// True when `a` ranks ahead of `b`.
bool ranks_before(const Detection& a, const Detection& b) {
  if (a.confidence != b.confidence) return a.confidence > b.confidence;
  if (a.box.area() != b.box.area()) return a.box.area() > b.box.area();
  // Width last only makes the order total; equal area then fixes height.
  return std::tie(a.class_label, a.box.x, a.box.y, a.box.w) <
         std::tie(b.class_label, b.box.x, b.box.y, b.box.w);
}

}  // namespace

std::optional<Detection> primary_detection(std::span<const Detection> ds) {
  if (ds.empty()) return std::nullopt;
  return *std::min_element(ds.begin(), ds.end(), ranks_before);
}

bool equivalent(const std::optional<Detection>& d,
                const std::optional<Detection>& d2,
                const EquivalenceConfig& cfg) {
  if (!d && !d2) return true;
  if (!d || !d2) return false;
  return d->class_label == d2->class_label && iou(d->box, d2->box) > cfg.delta();
}

bool equivalent(std::span<const Detection> r, std::span<const Detection> r2,
                const EquivalenceConfig& cfg) {
  return equivalent(primary_detection(r), primary_detection(r2), cfg);
}

}  // namespace affc
