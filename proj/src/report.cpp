// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "affc/campaign.hpp"
#include "affc/errors.hpp"

namespace affc {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format3(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", value);
  // Avoid "-0.000".
  if (std::string_view(buf) == "-0.000") return "0.000";
  return buf;
}

namespace {

double round3(double v) { return std::round(v * 1000.0) / 1000.0; }

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

void write_text(const fs::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << body;
  if (!out) throw ConfigError("cannot write " + path.string());
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::vector<OperatorKind> operators_of(const json& config) {
  std::vector<OperatorKind> ops;
  for (const auto& name : config.at("operators")) {
    auto op = parse_operator(name.get<std::string>());
    if (!op) throw ConfigError("unknown operator in run manifest");
    ops.push_back(*op);
  }
  return ops;
}

// Summaries for every detector with a complete set of conditions; others
// are skipped with a warning.
std::vector<ModelSummary> summarize_runs(
    const std::vector<std::pair<std::string, std::vector<FfcResult>>>& runs,
    const std::vector<OperatorKind>& operators, std::vector<std::string>& warnings) {
  std::vector<ModelSummary> models;
  for (const auto& [detector_id, results] : runs) {
    if (results.empty()) {
      warnings.push_back(detector_id + ": no usable results; omitted from summary");
      continue;
    }
    std::vector<ConditionSummary> per_condition;
    bool complete = true;
    for (auto op : operators) {
      const bool any = std::any_of(results.begin(), results.end(),
                                   [&](const FfcResult& r) { return r.op == op; });
      if (!any) {
        warnings.push_back(detector_id + ": no results for " + std::string(to_string(op)) +
                           "; omitted from summary");
        complete = false;
        break;
      }
      per_condition.push_back(summarize_condition(op, results));
    }
    if (complete) models.push_back(summarize_model(detector_id, std::move(per_condition), operators));
  }
  return models;
}

json summary_document(const std::vector<ModelSummary>& models) {
  json arr = json::array();
  for (const auto& m : models) arr.push_back(to_json(m));
  return {{"models", arr}};
}

std::string timestamp_utc() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

json to_json(const ModelSummary& summary) {
  json per = json::array();
  for (const auto& c : summary.per_condition) {
    per.push_back({{"operator", std::string(to_string(c.op))},
                   {"affc", round3(c.affc)},
                   {"std_dev", round3(c.std_dev)},
                   {"n", c.n},
                   {"censored_count", c.censored_count}});
  }
  return {{"model_id", summary.model_id},
          {"per_condition", per},
          {"overall_affc", round3(summary.overall_affc)}};
}

ModelSummary model_summary_from_json(const json& doc) {
  ModelSummary m;
  try {
    m.model_id = doc.at("model_id").get<std::string>();
    for (const auto& c : doc.at("per_condition")) {
      ConditionSummary s;
      auto op = parse_operator(c.at("operator").get<std::string>());
      if (!op) throw ConfigError("unknown operator in summary");
      s.op = *op;
      s.affc = c.at("affc").get<double>();
      s.std_dev = c.at("std_dev").get<double>();
      s.n = c.at("n").get<std::size_t>();
      s.censored_count = c.at("censored_count").get<std::size_t>();
      m.per_condition.push_back(s);
    }
    m.overall_affc = doc.at("overall_affc").get<double>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed model summary: ") + e.what());
  }
  return m;
}

json to_json(const SummaryComparison& cmp) {
  json per = json::array();
  for (const auto& d : cmp.per_condition) {
    per.push_back({{"operator", std::string(to_string(d.op))}, {"delta", round3(d.delta)}});
  }
  return {{"model_a", cmp.model_a},
          {"model_b", cmp.model_b},
          {"per_condition", per},
          {"overall_delta", round3(cmp.overall_delta)}};
}

void write_report(const CampaignConfig& config, const CampaignOutcome& outcome) {
  const auto& dir = config.out_dir;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output dir " + dir.string());
  const auto grid = strength_grid(config.step);
  std::vector<std::string> warnings = outcome.warnings;

  std::ostringstream results;
  results << kResultsHeader << '\n';
  for (const auto& run : outcome.runs) {
    for (const auto& r : run.results) {
      results << csv_field(r.image_id) << ',' << csv_field(run.detector_id) << ','
              << to_string(r.op) << ',' << format3(r.ffc.value()) << ','
              << (r.censored ? "true" : "false") << ',' << r.probes << ','
              << format3(r.clean_confidence) << '\n';
    }
  }
  write_text(dir / kResultsCsv, results.str());

  std::vector<std::pair<std::string, std::vector<FfcResult>>> runs;
  for (const auto& run : outcome.runs) runs.emplace_back(run.detector_id, run.results);
  std::vector<std::string> summary_warnings;
  const auto models = summarize_runs(runs, config.operators, summary_warnings);
  for (auto& w : summary_warnings) {
    std::cerr << "warning: " << w << '\n';
    warnings.push_back(std::move(w));
  }
  write_text(dir / kSummaryJson, summary_document(models).dump(2) + "\n");

  std::ostringstream mono;
  mono << "detector_id,image_id,operator,violations,pattern\n";
  std::ostringstream curves;
  curves << kCurvesHeader << '\n';
  if (config.search_mode == SearchMode::exhaustive) {
    for (const auto& run : outcome.runs) {
      for (const auto& audit : run.audits) {
        std::string pattern;
        for (bool ok : audit.pattern) pattern += ok ? 'P' : 'F';
        mono << csv_field(run.detector_id) << ',' << csv_field(audit.result.image_id) << ','
             << to_string(audit.result.op) << ',' << audit.violations << ',' << pattern << '\n';
      }
      for (auto op : config.operators) {
        std::vector<FfcResult> subset;
        for (const auto& r : run.results) {
          if (r.op == op) subset.push_back(r);
        }
        if (subset.empty()) continue;
        const auto curve = confidence_curve(run.detector_id, op, subset, grid);
        for (const auto& p : curve.points) {
          curves << csv_field(run.detector_id) << ',' << to_string(op) << ','
                 << format3(p.strength.value()) << ',' << format3(p.mean_confidence) << ','
                 << p.sample_count << '\n';
        }
      }
    }
    write_text(dir / kCurvesCsv, curves.str());
  }
  write_text(dir / kMonotonicityCsv, mono.str());

  std::ostringstream issues;
  issues << "kind,detector_id,image_id,operator,message\n";
  for (const auto& run : outcome.runs) {
    for (const auto& ex : run.excluded) {
      issues << "excluded," << csv_field(ex.detector_id) << ',' << csv_field(ex.image_id)
             << ",,no clean detection\n";
    }
  }
  for (const auto& f : outcome.failures) {
    issues << "failed," << csv_field(f.detector_id) << ',' << csv_field(f.image_id) << ','
           << to_string(f.op) << ',' << csv_field(f.message) << '\n';
  }
  write_text(dir / kIssuesCsv, issues.str());

  json run_manifest = {
      {"tool", "affc"},
      {"version", AFFC_VERSION},
      {"created", timestamp_utc()},
      {"campaign_seed", config.campaign_seed},
      {"grid_size", grid.size()},
      {"config", to_json(config)},
      {"dataset", to_json(outcome.manifest)},
      {"failed_triples", outcome.failures.size()},
      {"warnings", warnings},
  };
  write_text(dir / kRunManifestJson, run_manifest.dump(2) + "\n");
}

ReportBundle load_report(const fs::path& run_dir) {
  ReportBundle bundle;
  bundle.run_manifest = read_json(run_dir / kRunManifestJson);
  const auto summary = read_json(run_dir / kSummaryJson);
  for (const auto& m : summary.at("models")) bundle.models.push_back(model_summary_from_json(m));
  return bundle;
}

ReportBundle regenerate_report(const fs::path& run_dir) {
  ReportBundle bundle;
  bundle.run_manifest = read_json(run_dir / kRunManifestJson);
  const auto operators = operators_of(bundle.run_manifest.at("config"));

  std::ifstream in(run_dir / kResultsCsv);
  if (!in) throw ConfigError("cannot open " + (run_dir / kResultsCsv).string());
  std::string line;
  std::getline(in, line);
  if (line != kResultsHeader) throw ConfigError("unexpected results header: " + line);

  std::vector<std::pair<std::string, std::vector<FfcResult>>> runs;
  for (const auto& d : bundle.run_manifest.at("config").at("detectors")) {
    runs.emplace_back(d.at("detector_id").get<std::string>(), std::vector<FfcResult>{});
  }
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 7) {
      throw ConfigError("results line " + std::to_string(line_no) + ": expected 7 fields");
    }
    auto op = parse_operator(f[2]);
    if (!op) throw ConfigError("results line " + std::to_string(line_no) + ": bad operator");
    FfcResult r;
    r.image_id = f[0];
    r.op = *op;
    r.ffc = Strength(std::stod(f[3]));
    r.censored = f[4] == "true";
    r.probes = std::stoul(f[5]);
    r.clean_confidence = std::stod(f[6]);
    auto it = std::find_if(runs.begin(), runs.end(),
                           [&](const auto& p) { return p.first == f[1]; });
    if (it == runs.end()) {
      runs.emplace_back(f[1], std::vector<FfcResult>{});
      it = std::prev(runs.end());
    }
    it->second.push_back(std::move(r));
  }

  std::vector<std::string> warnings;
  bundle.models = summarize_runs(runs, operators, warnings);
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
  write_text(run_dir / kSummaryJson, summary_document(bundle.models).dump(2) + "\n");
  return bundle;
}

std::string format_summary_table(const std::vector<ModelSummary>& models) {
  std::ostringstream out;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-24s %-10s %8s %8s %6s %9s\n", "model", "condition",
                "AFFC", "std", "n", "censored");
  out << buf;
  for (const auto& m : models) {
    for (const auto& c : m.per_condition) {
      std::snprintf(buf, sizeof buf, "%-24s %-10s %7.1f%% %7.1f%% %6zu %9zu\n",
                    m.model_id.c_str(), std::string(to_string(c.op)).c_str(), c.affc * 100.0,
                    c.std_dev * 100.0, c.n, c.censored_count);
      out << buf;
    }
    std::snprintf(buf, sizeof buf, "%-24s %-10s %7.1f%%\n", m.model_id.c_str(), "overall",
                  m.overall_affc * 100.0);
    out << buf;
  }
  return out.str();
}

std::vector<SummaryComparison> compare_reports(const fs::path& run_a, const fs::path& run_b,
                                               const fs::path& out_dir) {
  const auto a = load_report(run_a);
  const auto b = load_report(run_b);
  const auto& ca = a.run_manifest.at("config");
  const auto& cb = b.run_manifest.at("config");
  if (ca.at("step").get<double>() != cb.at("step").get<double>()) {
    throw ComparisonError("report bundles use different grid steps");
  }
  if (ca.at("delta").get<double>() != cb.at("delta").get<double>()) {
    throw ComparisonError("report bundles use different delta");
  }
  auto ops_a = operators_of(ca);
  auto ops_b = operators_of(cb);
  std::sort(ops_a.begin(), ops_a.end());
  std::sort(ops_b.begin(), ops_b.end());
  if (ops_a != ops_b) throw ComparisonError("report bundles cover different operators");

  std::vector<SummaryComparison> out;
  if (a.models.size() == 1 && b.models.size() == 1) {
    out.push_back(compare(a.models.front(), b.models.front()));
  } else {
    for (const auto& ma : a.models) {
      for (const auto& mb : b.models) {
        if (ma.model_id == mb.model_id) out.push_back(compare(ma, mb));
      }
    }
  }
  if (out.empty()) throw ComparisonError("no model appears in both report bundles");

  if (!out_dir.empty()) {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    json arr = json::array();
    for (const auto& c : out) arr.push_back(to_json(c));
    write_text(out_dir / kComparisonJson,
               json{{"a", run_a.string()}, {"b", run_b.string()}, {"comparisons", arr}}.dump(2) +
                   "\n");
  }
  return out;
}

}  // namespace affc
