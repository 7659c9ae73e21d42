// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "affc/augmentation.hpp"
#include "affc/detector.hpp"
#include "affc/ffc_search.hpp"
#include "affc/metrics.hpp"
#include "json.hpp"

namespace affc {

enum class SearchMode { linear, binary, exhaustive };

std::string_view to_string(SearchMode mode) noexcept;

struct CampaignConfig {
  std::filesystem::path dataset_dir;
  std::vector<OperatorKind> operators{kAllOperators.begin(), kAllOperators.end()};
  double step = 0.025;
  double delta = EquivalenceConfig::kDefaultDelta;
  std::vector<DetectorConfig> detectors;
  std::filesystem::path cache_dir;
  std::filesystem::path out_dir;
  SearchMode search_mode = SearchMode::linear;
  std::uint64_t campaign_seed = 0;
  /// 0 means one worker per hardware thread.
  std::size_t parallelism = 0;

  /// Throws ConfigError on any violated invariant.
  void validate() const;
};

/// Relative paths inside the file are resolved against `base_dir`.
CampaignConfig parse_campaign_config(const nlohmann::json& doc,
                                     const std::filesystem::path& base_dir = {});
CampaignConfig load_campaign_config(const std::filesystem::path& path);
nlohmann::json to_json(const CampaignConfig& config);

struct ManifestEntry {
  std::string image_id;
  std::filesystem::path path;
  std::string sha256;  // of the file bytes
  std::size_t width = 0;
  std::size_t height = 0;
  /// detector_id -> clean image has a primary detection
  std::map<std::string, bool> clean_detection_present;
  /// detector_id -> clean primary confidence, when present
  std::map<std::string, double> clean_confidence;
};

struct DatasetManifest {
  std::vector<ManifestEntry> entries;
  std::vector<std::string> warnings;
};

nlohmann::json to_json(const DatasetManifest& manifest);

/// Hashes and decodes every PNG/JPEG in `dir` (sorted by file name), then
/// probes each clean image once per detector. Throws ConfigError when no
/// image is readable.
DatasetManifest ingest_dataset(const std::filesystem::path& dir,
                               std::vector<DetectorHandle>& detectors);

struct FailedTriple {
  std::string detector_id;
  std::string image_id;
  OperatorKind op = OperatorKind::fog;
  std::string message;
};

struct ExcludedImage {
  std::string detector_id;
  std::string image_id;
};

struct DetectorRun {
  std::string detector_id;
  std::vector<FfcResult> results;  // image order, then operator order
  std::vector<MonotonicityReport> audits;  // exhaustive mode only
  std::vector<ExcludedImage> excluded;
};

struct CampaignOutcome {
  DatasetManifest manifest;
  std::vector<DetectorRun> runs;
  std::vector<FailedTriple> failures;
  std::vector<std::string> warnings;
  std::size_t cache_files_generated = 0;

  /// 0 success, 1 partial failures.
  int exit_status() const noexcept { return failures.empty() ? 0 : 1; }
};

/// Runs every (detector, usable image, operator) search and writes the
/// report bundle into config.out_dir.
CampaignOutcome run_campaign(const CampaignConfig& config);
/// As above with caller-supplied handles (one per config.detectors entry).
CampaignOutcome run_campaign(const CampaignConfig& config,
                             std::vector<DetectorHandle>& detectors);

// Report bundle file names.
inline constexpr const char* kResultsCsv = "results.csv";
inline constexpr const char* kSummaryJson = "summary.json";
inline constexpr const char* kCurvesCsv = "confidence_curves.csv";
inline constexpr const char* kMonotonicityCsv = "monotonicity.csv";
inline constexpr const char* kIssuesCsv = "issues.csv";
inline constexpr const char* kRunManifestJson = "run_manifest.json";
inline constexpr const char* kComparisonJson = "comparison.json";

inline constexpr const char* kResultsHeader =
    "image_id,detector_id,operator,ffc,censored,probes,clean_confidence";
inline constexpr const char* kCurvesHeader =
    "detector_id,operator,strength,mean_confidence,n";

/// Writes the report bundle for a finished campaign.
void write_report(const CampaignConfig& config, const CampaignOutcome& outcome);

struct ReportBundle {
  nlohmann::json run_manifest;
  std::vector<ModelSummary> models;
};

/// Rebuilds the model summaries of a run directory from its results CSV
/// and rewrites summary.json.
ReportBundle regenerate_report(const std::filesystem::path& run_dir);
ReportBundle load_report(const std::filesystem::path& run_dir);

/// Human-readable AFFC table in percent.
std::string format_summary_table(const std::vector<ModelSummary>& models);

/// Compares two run directories; writes comparison.json into `out_dir`
/// when non-empty. Throws ComparisonError if grid, delta or operator sets
/// differ, or no model pairs up.
std::vector<SummaryComparison> compare_reports(
    const std::filesystem::path& run_a, const std::filesystem::path& run_b,
    const std::filesystem::path& out_dir = {});

nlohmann::json to_json(const ModelSummary& summary);
ModelSummary model_summary_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const SummaryComparison& cmp);

/// Three decimal places, fixed.
std::string format3(double value);

}  // namespace affc
