// SPDX-License-Identifier: Apache-2.0
#include "affc/campaign.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <iostream>
#include <mutex>
#include <thread>

#include "affc/cache.hpp"
#include "affc/codec.hpp"
#include "affc/errors.hpp"

namespace affc {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct LoadedImage {
  ManifestEntry entry;
  SourceImage source;
};

bool is_image_file(const fs::path& p) {
  auto ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

void warn(std::vector<std::string>& sink, std::string message) {
  std::cerr << "warning: " << message << '\n';
  sink.push_back(std::move(message));
}

std::vector<LoadedImage> load_dataset(const fs::path& dir,
                                      std::vector<DetectorHandle>& detectors,
                                      std::vector<std::string>& warnings) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) {
    throw ConfigError("dataset directory " + dir.string() + " does not exist");
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && is_image_file(entry.path())) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename() < b.filename(); });

  std::vector<LoadedImage> images;
  for (const auto& path : files) {
    ManifestEntry entry;
    ImageBuffer pixels(1, 1);
    try {
      const auto bytes = read_file(path);
      entry.sha256 = sha256_hex(bytes);
      pixels = decode_image(bytes);
    } catch (const Error& e) {
      warn(warnings, "skipping unreadable image " + path.string() + ": " + e.what());
      continue;
    }
    entry.image_id = path.filename().string();
    entry.path = path;
    entry.width = pixels.width();
    entry.height = pixels.height();
    images.push_back({std::move(entry), SourceImage(std::move(pixels))});
  }
  if (images.empty()) throw ConfigError("no readable PNG/JPEG images in " + dir.string());

  for (auto& img : images) {
    for (auto& det : detectors) {
      Probe probe = clean_probe(img.source.shared());
      probe.image_path = img.entry.path;
      bool present = false;
      try {
        if (auto d = primary_detection(det.detect(probe))) {
          present = true;
          img.entry.clean_confidence[det.id()] = d->confidence;
        }
      } catch (const Error& e) {
        warn(warnings, det.id() + ": clean probe of " + img.entry.image_id +
                           " failed: " + e.what());
      }
      img.entry.clean_detection_present[det.id()] = present;
    }
  }
  return images;
}

struct Task {
  std::size_t detector;
  std::size_t image;
  OperatorKind op;
};

struct TaskOutcome {
  std::optional<MonotonicityReport> audit;
  std::optional<FfcResult> result;
  std::optional<std::string> failure;
};

}  // namespace

json to_json(const DatasetManifest& manifest) {
  json entries = json::array();
  for (const auto& e : manifest.entries) {
    entries.push_back({{"image_id", e.image_id},
                       {"path", e.path.string()},
                       {"sha256", e.sha256},
                       {"width", e.width},
                       {"height", e.height},
                       {"clean_detection_present", e.clean_detection_present}});
  }
  return {{"entries", entries}, {"warnings", manifest.warnings}};
}

DatasetManifest ingest_dataset(const fs::path& dir, std::vector<DetectorHandle>& detectors) {
  DatasetManifest manifest;
  for (auto& img : load_dataset(dir, detectors, manifest.warnings)) {
    manifest.entries.push_back(std::move(img.entry));
  }
  return manifest;
}

CampaignOutcome run_campaign(const CampaignConfig& config) {
  config.validate();
  std::vector<DetectorHandle> detectors;
  detectors.reserve(config.detectors.size());
  for (const auto& d : config.detectors) detectors.emplace_back(d);
  return run_campaign(config, detectors);
}

CampaignOutcome run_campaign(const CampaignConfig& config,
                             std::vector<DetectorHandle>& detectors) {
  config.validate();
  if (detectors.size() != config.detectors.size()) {
    throw ContractError("one detector handle per configured detector is required");
  }
  const auto grid = strength_grid(config.step);
  const EquivalenceConfig eq(config.delta);

  std::error_code ec;
  fs::create_directories(config.cache_dir, ec);
  if (ec) throw CacheError("cannot create cache dir " + config.cache_dir.string());
  fs::create_directories(config.out_dir, ec);
  if (ec) throw ConfigError("cannot create output dir " + config.out_dir.string());

  for (auto& d : detectors) d.handshake();

  CampaignOutcome outcome;
  auto images = load_dataset(config.dataset_dir, detectors, outcome.warnings);

  std::vector<Task> tasks;
  for (std::size_t di = 0; di < detectors.size(); ++di) {
    DetectorRun run;
    run.detector_id = detectors[di].id();
    for (std::size_t ii = 0; ii < images.size(); ++ii) {
      if (!images[ii].entry.clean_detection_present.at(run.detector_id)) {
        run.excluded.push_back({run.detector_id, images[ii].entry.image_id});
        continue;
      }
      for (auto op : config.operators) tasks.push_back({di, ii, op});
    }
    outcome.runs.push_back(std::move(run));
  }

  AugmentCache cache(config.cache_dir);
  std::vector<TaskOutcome> results(tasks.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> abort{false};
  std::exception_ptr fatal;
  std::mutex fatal_mutex;

  auto worker = [&] {
    for (;;) {
      const std::size_t k = next.fetch_add(1);
      if (k >= tasks.size() || abort.load()) return;
      const Task& t = tasks[k];
      const auto& img = images[t.image];
      auto& det = detectors[t.detector];
      const auto seed = derive_seed(config.campaign_seed, img.entry.image_id, t.op);
      CachedProbeSource source(cache, img.source, t.op, seed);
      try {
        switch (config.search_mode) {
          case SearchMode::linear:
            results[k].result = ffc_linear(det, source, img.entry.image_id, grid, eq);
            break;
          case SearchMode::binary:
            results[k].result = ffc_binary(det, source, img.entry.image_id, grid, eq);
            break;
          case SearchMode::exhaustive:
            results[k].audit = monotonicity_audit(det, source, img.entry.image_id, grid, eq);
            results[k].result = results[k].audit->result;
            break;
        }
      } catch (const CacheError&) {
        std::lock_guard lock(fatal_mutex);
        if (!fatal) fatal = std::current_exception();
        abort.store(true);
        return;
      } catch (const IntegrityError&) {
        std::lock_guard lock(fatal_mutex);
        if (!fatal) fatal = std::current_exception();
        abort.store(true);
        return;
      } catch (const std::exception& e) {
        results[k].failure = e.what();
      }
    }
  };

  std::size_t threads = config.parallelism;
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, std::max<std::size_t>(tasks.size(), 1));
  {
    std::vector<std::jthread> pool;
    for (std::size_t i = 0; i < threads; ++i) pool.emplace_back(worker);
  }
  if (fatal) std::rethrow_exception(fatal);

  for (std::size_t k = 0; k < tasks.size(); ++k) {
    const Task& t = tasks[k];
    auto& run = outcome.runs[t.detector];
    if (results[k].failure) {
      outcome.failures.push_back({run.detector_id, images[t.image].entry.image_id, t.op,
                                  *results[k].failure});
      continue;
    }
    run.results.push_back(std::move(*results[k].result));
    if (results[k].audit) run.audits.push_back(std::move(*results[k].audit));
  }

  for (auto& img : images) outcome.manifest.entries.push_back(std::move(img.entry));
  outcome.manifest.warnings = outcome.warnings;
  outcome.cache_files_generated = cache.generated();
  write_report(config, outcome);
  return outcome;
}

}  // namespace affc
