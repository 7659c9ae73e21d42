// SPDX-License-Identifier: Apache-2.0
#include "affc/ffc_search.hpp"

#include <algorithm>
#include <map>

#include "affc/errors.hpp"

namespace affc {

DirectProbeSource::DirectProbeSource(std::shared_ptr<const ImageBuffer> image,
                                     OperatorKind op, AugmentationSeed seed)
    : image_(std::move(image)), op_(op), seed_(seed) {}

Probe DirectProbeSource::baseline() {
  Probe p;
  p.image = image_;
  p.op = op_;
  return p;
}

Probe DirectProbeSource::at(Strength strength) {
  Probe p;
  p.image = std::make_shared<const ImageBuffer>(apply(op_, *image_, strength, seed_));
  p.op = op_;
  p.strength = strength.value();
  return p;
}

CachedProbeSource::CachedProbeSource(AugmentCache& cache, const SourceImage& source,
                                     OperatorKind op, AugmentationSeed seed)
    : cache_(cache), source_(source), op_(op), seed_(seed) {}

Probe CachedProbeSource::load(Strength strength) {
  const auto key = CacheKey::make(source_.sha256(), op_, strength, seed_);
  Probe p;
  p.image_path = cache_.get_or_generate(key, source_);
  p.image = std::make_shared<const ImageBuffer>(read_image(*p.image_path));
  p.op = op_;
  p.strength = strength.value();
  return p;
}

Probe CachedProbeSource::baseline() { return load(Strength(0.0)); }
Probe CachedProbeSource::at(Strength strength) { return load(strength); }

namespace {

void check_grid(std::span<const Strength> grid) {
  if (grid.empty()) throw ContractError("search grid is empty");
  if (grid.front().value() <= 0.0) throw ContractError("search grid must exclude strength 0");
  for (std::size_t k = 1; k < grid.size(); ++k) {
    if (!(grid[k - 1] < grid[k])) throw ContractError("search grid must be strictly increasing");
  }
}

// Shared state of one (image, operator) search: the clean baseline is
// evaluated exactly once, in the constructor.
class Search {
 public:
  Search(DetectorHandle& detector, ProbeSource& source, std::string image_id,
         std::span<const Strength> grid, const EquivalenceConfig& cfg)
      : detector_(detector), source_(source), grid_(grid), cfg_(cfg) {
    check_grid(grid);
    result_.image_id = std::move(image_id);
    result_.op = source.op();
    baseline_ = primary_detection(detector_.detect(source_.baseline()));
    result_.probes = 1;
    if (!baseline_) {
      throw ContractError("image " + result_.image_id +
                          " has no clean detection; FFC is undefined");
    }
    result_.clean_confidence = baseline_->confidence;
  }

  const TraceEntry& probe(std::size_t index) {
    const Strength s = grid_[index];
    const auto d = primary_detection(detector_.detect(source_.at(s)));
    ++result_.probes;
    TraceEntry entry{s, equivalent(baseline_, d, cfg_), std::nullopt};
    if (entry.equivalent && d) entry.confidence = d->confidence;
    return trace_.emplace(index, entry).first->second;
  }

  std::size_t size() const noexcept { return grid_.size(); }

  /// `first_failure == size()` means the grid was exhausted.
  FfcResult finish(std::size_t first_failure) {
    if (first_failure >= grid_.size()) {
      result_.ffc = Strength(1.0);
      result_.censored = true;
    } else {
      result_.ffc = grid_[first_failure];
      result_.censored = false;
    }
    result_.trace.clear();
    for (const auto& [index, entry] : trace_) result_.trace.push_back(entry);
    return std::move(result_);
  }

 private:
  DetectorHandle& detector_;
  ProbeSource& source_;
  std::span<const Strength> grid_;
  EquivalenceConfig cfg_;
  std::optional<Detection> baseline_;
  std::map<std::size_t, TraceEntry> trace_;
  FfcResult result_;
};

}  // namespace

FfcResult ffc_linear(DetectorHandle& detector, ProbeSource& source, std::string image_id,
                     std::span<const Strength> grid, const EquivalenceConfig& cfg) {
  Search search(detector, source, std::move(image_id), grid, cfg);
  for (std::size_t k = 0; k < search.size(); ++k) {
    if (!search.probe(k).equivalent) return search.finish(k);
  }
  return search.finish(search.size());
}

FfcResult ffc_binary(DetectorHandle& detector, ProbeSource& source, std::string image_id,
                     std::span<const Strength> grid, const EquivalenceConfig& cfg) {
  Search search(detector, source, std::move(image_id), grid, cfg);
  // Invariant: every probed index < lo passed, every probed index >= hi failed.
  std::size_t lo = 0;
  std::size_t hi = search.size();
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if (search.probe(mid).equivalent) {
      lo = mid + 1;
    } else {
      hi = mid;
    }
  }
  return search.finish(lo);
}

std::size_t count_violations(std::span<const bool> pattern) noexcept {
  std::size_t n = 0;
  for (std::size_t k = 1; k < pattern.size(); ++k) {
    if (!pattern[k - 1] && pattern[k]) ++n;
  }
  return n;
}

std::size_t count_violations(const std::vector<bool>& pattern) noexcept {
  std::size_t n = 0;
  for (std::size_t k = 1; k < pattern.size(); ++k) {
    if (!pattern[k - 1] && pattern[k]) ++n;
  }
  return n;
}

MonotonicityReport monotonicity_audit(DetectorHandle& detector, ProbeSource& source,
                                      std::string image_id,
                                      std::span<const Strength> grid,
                                      const EquivalenceConfig& cfg) {
  Search search(detector, source, std::move(image_id), grid, cfg);
  MonotonicityReport report;
  report.pattern.reserve(search.size());
  std::size_t first_failure = search.size();
  for (std::size_t k = 0; k < search.size(); ++k) {
    const bool ok = search.probe(k).equivalent;
    report.pattern.push_back(ok);
    if (!ok && first_failure == search.size()) first_failure = k;
  }
  report.violations = count_violations(report.pattern);
  report.result = search.finish(first_failure);
  return report;
}

FfcResult ffc_linear(DetectorHandle& detector, const ImageBuffer& image, OperatorKind op,
                     std::span<const Strength> grid, const EquivalenceConfig& cfg,
                     AugmentationSeed seed) {
  DirectProbeSource source(std::make_shared<const ImageBuffer>(image), op, seed);
  return ffc_linear(detector, source, "image", grid, cfg);
}

FfcResult ffc_binary(DetectorHandle& detector, const ImageBuffer& image, OperatorKind op,
                     std::span<const Strength> grid, const EquivalenceConfig& cfg,
                     AugmentationSeed seed) {
  DirectProbeSource source(std::make_shared<const ImageBuffer>(image), op, seed);
  return ffc_binary(detector, source, "image", grid, cfg);
}

MonotonicityReport monotonicity_audit(DetectorHandle& detector, const ImageBuffer& image,
                                      OperatorKind op, std::span<const Strength> grid,
                                      const EquivalenceConfig& cfg, AugmentationSeed seed) {
  DirectProbeSource source(std::make_shared<const ImageBuffer>(image), op, seed);
  return monotonicity_audit(detector, source, "image", grid, cfg);
}

}  // namespace affc
