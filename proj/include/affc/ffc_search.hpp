// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "affc/augmentation.hpp"
#include "affc/cache.hpp"
#include "affc/detector.hpp"
#include "affc/geometry.hpp"

namespace affc {

struct TraceEntry {
  Strength strength;
  bool equivalent = true;
  /// Confidence of the primary detection when it still matches the clean
  /// baseline; absent otherwise.
  std::optional<double> confidence;
};

struct FfcResult {
  std::string image_id;
  OperatorKind op = OperatorKind::fog;
  Strength ffc{1.0};
  bool censored = false;
  std::size_t probes = 0;
  /// Primary detection confidence on the clean image.
  double clean_confidence = 0.0;
  /// Ordered by strength.
  std::vector<TraceEntry> trace;
};

/// Produces the probe images for one (image, operator) search.
class ProbeSource {
 public:
  virtual ~ProbeSource() = default;
  virtual OperatorKind op() const = 0;
  virtual Probe baseline() = 0;
  virtual Probe at(Strength strength) = 0;
};

/// Augments in memory on every call.
class DirectProbeSource final : public ProbeSource {
 public:
  DirectProbeSource(std::shared_ptr<const ImageBuffer> image, OperatorKind op,
                    AugmentationSeed seed);
  OperatorKind op() const override { return op_; }
  Probe baseline() override;
  Probe at(Strength strength) override;

 private:
  std::shared_ptr<const ImageBuffer> image_;
  OperatorKind op_;
  AugmentationSeed seed_;
};

/// Serves probes from an AugmentCache; the clean baseline is stored too.
class CachedProbeSource final : public ProbeSource {
 public:
  CachedProbeSource(AugmentCache& cache, const SourceImage& source,
                    OperatorKind op, AugmentationSeed seed);
  OperatorKind op() const override { return op_; }
  Probe baseline() override;
  Probe at(Strength strength) override;

 private:
  Probe load(Strength strength);

  AugmentCache& cache_;
  const SourceImage& source_;
  OperatorKind op_;
  AugmentationSeed seed_;
};

/// Linear sweep: first grid strength whose output is not equivalent to the
/// clean baseline. Throws ContractError when the clean image has no
/// detection; detector failures propagate as ProbeError.
FfcResult ffc_linear(DetectorHandle& detector, ProbeSource& source,
                     std::string image_id, std::span<const Strength> grid,
                     const EquivalenceConfig& cfg);

/// Lower-bound binary search over the grid. Matches ffc_linear whenever the
/// failure pattern is monotone.
FfcResult ffc_binary(DetectorHandle& detector, ProbeSource& source,
                     std::string image_id, std::span<const Strength> grid,
                     const EquivalenceConfig& cfg);

struct MonotonicityReport {
  std::vector<bool> pattern;  // equivalent? per grid point
  std::size_t violations = 0; // fail -> pass transitions
  FfcResult result;           // derived from the full sweep
};

/// Probes every grid point.
MonotonicityReport monotonicity_audit(DetectorHandle& detector,
                                      ProbeSource& source, std::string image_id,
                                      std::span<const Strength> grid,
                                      const EquivalenceConfig& cfg);

/// Fail -> pass transitions in an equivalence pattern.
std::size_t count_violations(std::span<const bool> pattern) noexcept;
std::size_t count_violations(const std::vector<bool>& pattern) noexcept;

// Overloads that augment in memory.
FfcResult ffc_linear(DetectorHandle& detector, const ImageBuffer& image,
                     OperatorKind op, std::span<const Strength> grid,
                     const EquivalenceConfig& cfg, AugmentationSeed seed);
FfcResult ffc_binary(DetectorHandle& detector, const ImageBuffer& image,
                     OperatorKind op, std::span<const Strength> grid,
                     const EquivalenceConfig& cfg, AugmentationSeed seed);
MonotonicityReport monotonicity_audit(DetectorHandle& detector,
                                      const ImageBuffer& image, OperatorKind op,
                                      std::span<const Strength> grid,
                                      const EquivalenceConfig& cfg,
                                      AugmentationSeed seed);

}  // namespace affc
