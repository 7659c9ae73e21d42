// SPDX-License-Identifier: Apache-2.0
#include <fstream>
#include <set>
#include <thread>

#include "affc/cache.hpp"
#include "affc/campaign.hpp"
#include "affc/errors.hpp"

namespace affc {

using nlohmann::json;
namespace fs = std::filesystem;

std::string_view to_string(SearchMode mode) noexcept {
  switch (mode) {
    case SearchMode::linear:
      return "linear";
    case SearchMode::binary:
      return "binary";
    case SearchMode::exhaustive:
      return "exhaustive";
  }
  return "linear";
}

namespace {

std::optional<SearchMode> parse_search_mode(std::string_view s) {
  if (s == "linear") return SearchMode::linear;
  if (s == "binary") return SearchMode::binary;
  if (s == "exhaustive") return SearchMode::exhaustive;
  return std::nullopt;
}

OperatorKind operator_from_json(const json& j) {
  if (!j.is_string()) throw ConfigError("operator names must be strings");
  auto op = parse_operator(j.get<std::string>());
  if (!op) throw ConfigError("unknown operator `" + j.get<std::string>() + "`");
  return *op;
}

template <typename T>
T field(const json& obj, const char* key, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config field `") + key + "`: " + e.what());
  }
}

Detection detection_from_json(const json& j) {
  Detection d;
  d.class_label = field<std::string>(j, "class", "car");
  auto bbox = field<std::vector<double>>(j, "bbox", {10.0, 10.0, 20.0, 20.0});
  if (bbox.size() != 4) throw ConfigError("base_detection.bbox must have four numbers");
  d.box = {bbox[0], bbox[1], bbox[2], bbox[3]};
  d.confidence = field<double>(j, "confidence", 0.9);
  return d;
}

OracleSpec oracle_from_json(const json& j) {
  OracleSpec spec;
  const auto kind = field<std::string>(j, "kind", "scripted_threshold");
  if (kind == "scripted_threshold") spec.kind = OracleKind::scripted_threshold;
  else if (kind == "luminance_band") spec.kind = OracleKind::luminance_band;
  else throw ConfigError("unknown oracle kind `" + kind + "`");

  if (j.contains("fail_threshold")) {
    for (const auto& [name, value] : j.at("fail_threshold").items()) {
      spec.fail_threshold[operator_from_json(name)] = value.get<double>();
    }
  }
  const auto mode = field<std::string>(j, "failure_mode", "disappear");
  if (mode == "disappear") spec.failure_mode = FailureMode::disappear;
  else if (mode == "class_flip") spec.failure_mode = FailureMode::class_flip;
  else if (mode == "box_drift") spec.failure_mode = FailureMode::box_drift;
  else throw ConfigError("unknown failure_mode `" + mode + "`");

  if (j.contains("base_detection")) spec.base_detection = detection_from_json(j.at("base_detection"));
  const auto conf = field<std::string>(j, "confidence_model", "constant");
  if (conf == "constant") spec.confidence_model = ConfidenceModel::constant;
  else if (conf == "linear_decay") spec.confidence_model = ConfidenceModel::linear_decay;
  else throw ConfigError("unknown confidence_model `" + conf + "`");

  if (j.contains("band")) {
    auto band = j.at("band").get<std::vector<double>>();
    if (band.size() != 2) throw ConfigError("oracle band must be [lo, hi]");
    spec.band_lo = band[0];
    spec.band_hi = band[1];
  }
  spec.validate();
  return spec;
}

json oracle_to_json(const OracleSpec& spec) {
  json thresholds = json::object();
  for (const auto& [op, t] : spec.fail_threshold) thresholds[std::string(to_string(op))] = t;
  static constexpr const char* kModes[] = {"disappear", "class_flip", "box_drift"};
  const auto& d = spec.base_detection;
  return {
      {"kind", spec.kind == OracleKind::scripted_threshold ? "scripted_threshold"
                                                            : "luminance_band"},
      {"fail_threshold", thresholds},
      {"failure_mode", kModes[static_cast<int>(spec.failure_mode)]},
      {"base_detection",
       {{"class", d.class_label}, {"bbox", {d.box.x, d.box.y, d.box.w, d.box.h}},
        {"confidence", d.confidence}}},
      {"confidence_model",
       spec.confidence_model == ConfidenceModel::constant ? "constant" : "linear_decay"},
      {"band", {spec.band_lo, spec.band_hi}},
  };
}

DetectorConfig detector_from_json(const json& j) {
  DetectorConfig d;
  d.detector_id = field<std::string>(j, "detector_id", "");
  const auto transport = field<std::string>(j, "transport", "builtin");
  auto t = parse_transport(transport);
  if (!t) throw ConfigError("unknown transport `" + transport + "`");
  d.transport = *t;
  d.endpoint = field<std::string>(j, "endpoint", "");
  const std::size_t default_concurrency =
      d.transport == Transport::builtin ? std::max(1u, std::thread::hardware_concurrency()) : 1;
  d.max_concurrency = field<std::size_t>(j, "max_concurrency", default_concurrency);
  d.timeout = std::chrono::milliseconds(field<long long>(j, "timeout", 30000));
  if (j.contains("oracle")) d.oracle = oracle_from_json(j.at("oracle"));
  d.validate();
  return d;
}

}  // namespace

void CampaignConfig::validate() const {
  const auto grid = strength_grid(step);
  for (const auto s : grid) {
    if (Strength(s.millis() / 1000.0) != s) {
      throw ConfigError("grid step " + std::to_string(step) +
                        " must be a whole number of thousandths");
    }
  }
  EquivalenceConfig{delta};
  if (operators.empty()) throw ConfigError("operators must be nonempty");
  std::set<OperatorKind> seen_ops;
  for (auto op : operators) {
    if (!seen_ops.insert(op).second) {
      throw ConfigError("operator " + std::string(to_string(op)) + " listed twice");
    }
  }
  if (detectors.empty()) throw ConfigError("at least one detector is required");
  std::set<std::string> ids;
  for (const auto& d : detectors) {
    d.validate();
    if (!ids.insert(d.detector_id).second) {
      throw ConfigError("duplicate detector_id " + d.detector_id);
    }
  }
  if (dataset_dir.empty()) throw ConfigError("dataset_dir is required");
  if (cache_dir.empty()) throw ConfigError("cache_dir is required");
  if (out_dir.empty()) throw ConfigError("out_dir is required");
}

CampaignConfig parse_campaign_config(const json& doc, const fs::path& base_dir) {
  if (!doc.is_object()) throw ConfigError("campaign config must be a JSON object");
  auto resolve = [&](const char* key) -> fs::path {
    fs::path p = field<std::string>(doc, key, "");
    if (!p.empty() && p.is_relative() && !base_dir.empty()) p = base_dir / p;
    return p;
  };

  CampaignConfig c;
  c.dataset_dir = resolve("dataset_dir");
  c.cache_dir = resolve("cache_dir");
  c.out_dir = resolve("out_dir");
  if (doc.contains("operators")) {
    c.operators.clear();
    for (const auto& op : doc.at("operators")) c.operators.push_back(operator_from_json(op));
  }
  c.step = field<double>(doc, "step", c.step);
  c.delta = field<double>(doc, "delta", c.delta);
  const auto mode = field<std::string>(doc, "search_mode", "linear");
  auto m = parse_search_mode(mode);
  if (!m) throw ConfigError("unknown search_mode `" + mode + "`");
  c.search_mode = *m;
  c.campaign_seed = field<std::uint64_t>(doc, "campaign_seed", 0);
  c.parallelism = field<std::size_t>(doc, "parallelism", 0);
  if (doc.contains("detectors")) {
    for (const auto& d : doc.at("detectors")) c.detectors.push_back(detector_from_json(d));
  }
  c.validate();
  return c;
}

CampaignConfig load_campaign_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_campaign_config(doc, path.parent_path());
}

json to_json(const CampaignConfig& c) {
  json ops = json::array();
  for (auto op : c.operators) ops.push_back(std::string(to_string(op)));
  json detectors = json::array();
  for (const auto& d : c.detectors) {
    json j = {{"detector_id", d.detector_id},
              {"transport", std::string(to_string(d.transport))},
              {"max_concurrency", d.max_concurrency},
              {"timeout", d.timeout.count()}};
    if (!d.endpoint.empty()) j["endpoint"] = d.endpoint;
    if (d.oracle) j["oracle"] = oracle_to_json(*d.oracle);
    detectors.push_back(std::move(j));
  }
  return {{"dataset_dir", c.dataset_dir.string()},
          {"operators", ops},
          {"step", c.step},
          {"delta", c.delta},
          {"detectors", detectors},
          {"cache_dir", c.cache_dir.string()},
          {"out_dir", c.out_dir.string()},
          {"search_mode", std::string(to_string(c.search_mode))},
          {"campaign_seed", c.campaign_seed},
          {"parallelism", c.parallelism}};
}

}  // namespace affc
