#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "affc/campaign.hpp"
#include "affc/codec.hpp"
#include "affc/errors.hpp"
#include "doctest.h"

using namespace affc;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_dataset(const fs::path& dir, std::initializer_list<int> values) {
  fs::create_directories(dir);
  int k = 0;
  for (int v : values) {
    char name[32];
    std::snprintf(name, sizeof name, "img_%02d.png", k++);
    write_png(dir / name, ImageBuffer(24, 16, static_cast<std::uint8_t>(v),
                                      static_cast<std::uint8_t>(v / 2), 90));
  }
}

// Planted thresholds and their values on the 0.025 grid.
const std::map<OperatorKind, std::pair<double, double>> kPlanted = {
    {OperatorKind::fog, {0.37, 0.375}},      {OperatorKind::rain, {0.1, 0.1}},
    {OperatorKind::snow, {0.551, 0.575}},    {OperatorKind::shadow, {0.8, 0.8}},
    {OperatorKind::sun_flare, {0.999, 1.0}}, {OperatorKind::brighten, {0.24, 0.25}},
    {OperatorKind::darken, {0.5, 0.5}},
};

DetectorConfig scripted_detector(const std::string& id) {
  OracleSpec spec;
  for (const auto& [op, tq] : kPlanted) spec.fail_threshold[op] = tq.first;
  DetectorConfig d;
  d.detector_id = id;
  d.oracle = spec;
  d.max_concurrency = 4;
  return d;
}

DetectorConfig band_detector(const std::string& id, double lo, double hi) {
  OracleSpec spec;
  spec.kind = OracleKind::luminance_band;
  spec.band_lo = lo;
  spec.band_hi = hi;
  DetectorConfig d;
  d.detector_id = id;
  d.oracle = spec;
  return d;
}

CampaignConfig base_config(const fs::path& root) {
  CampaignConfig c;
  c.dataset_dir = root / "data";
  c.cache_dir = root / "cache";
  c.out_dir = root / "out";
  c.campaign_seed = 99;
  c.parallelism = 3;
  return c;
}

std::string without_created(std::string manifest) {
  std::istringstream in(manifest);
  std::string line, out;
  while (std::getline(in, line))
    if (line.find("\"created\"") == std::string::npos) out += line + "\n";
  return out;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(AFFC_CLI) + " " + args + " > /dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

TEST_CASE("ingest hashes, decodes and flags images") {
  const auto root = fresh_dir("affc_ingest");
  write_dataset(root, {100, 150, 30});
  fs::copy_file(root / "img_00.png", root / "img_copy.png");
  { std::ofstream(root / "broken.png") << "garbage"; }
  { std::ofstream(root / "notes.txt") << "ignored"; }

  std::vector<DetectorHandle> dets;
  DetectorConfig cfg = band_detector("band", 40, 220);
  dets.emplace_back(cfg);
  const auto m = ingest_dataset(root, dets);
  REQUIRE(m.entries.size() == 4);
  CHECK(m.entries[0].image_id == "img_00.png");
  CHECK(m.entries[3].image_id == "img_copy.png");
  CHECK(m.entries[0].sha256 == m.entries[3].sha256);
  CHECK(m.entries[0].sha256 == sha256_hex(read_file(root / "img_00.png")));
  CHECK(m.entries[1].width == 24);
  CHECK(m.entries[1].height == 16);
  CHECK(m.entries[0].clean_detection_present.at("band"));
  CHECK_FALSE(m.entries[2].clean_detection_present.at("band"));  // luminance ~ 48*... below 40
  CHECK(m.warnings.size() == 1);

  const auto empty = fresh_dir("affc_ingest_empty");
  CHECK_THROWS_AS(ingest_dataset(empty, dets), ConfigError);
  fs::remove_all(root);
  fs::remove_all(empty);
}

TEST_CASE("linear campaign recovers planted thresholds") {
  const auto root = fresh_dir("affc_campaign_linear");
  write_dataset(root / "data", {60, 90, 120, 150, 180});
  auto cfg = base_config(root);
  cfg.detectors = {scripted_detector("scripted")};
  const auto outcome = run_campaign(cfg);
  CHECK(outcome.exit_status() == 0);
  REQUIRE(outcome.runs.size() == 1);
  const auto& results = outcome.runs[0].results;
  CHECK(results.size() == 35);
  for (const auto& r : results) CHECK(r.ffc.value() == kPlanted.at(r.op).second);

  const auto bundle = load_report(cfg.out_dir);
  REQUIRE(bundle.models.size() == 1);
  double sum = 0;
  for (const auto& c : bundle.models[0].per_condition) {
    CHECK(c.affc == doctest::Approx(kPlanted.at(c.op).second).epsilon(1e-9));
    CHECK(c.n == 5);
    CHECK(c.censored_count == 0);
    sum += kPlanted.at(c.op).second;
  }
  CHECK(bundle.models[0].overall_affc == doctest::Approx(std::round(sum / 7 * 1000) / 1000));

  const auto csv = slurp(cfg.out_dir / kResultsCsv);
  CHECK(csv.rfind(std::string(kResultsHeader) + "\n", 0) == 0);
  CHECK(csv.find("img_00.png,scripted,fog,0.375,false,16,0.900") != std::string::npos);
  CHECK(fs::exists(cfg.out_dir / kRunManifestJson));
  CHECK(fs::exists(cfg.out_dir / kMonotonicityCsv));
  fs::remove_all(root);
}

TEST_CASE("reruns are deterministic and reuse the cache") {
  const auto root = fresh_dir("affc_campaign_rerun");
  write_dataset(root / "data", {70, 140});
  auto cfg = base_config(root);
  cfg.detectors = {band_detector("band", 45, 200)};
  cfg.search_mode = SearchMode::exhaustive;
  const auto first = run_campaign(cfg);
  CHECK(first.cache_files_generated == 2 * 7 * 41);
  CHECK(count_cache_files(cfg.cache_dir) == 2 * 7 * 41);
  const auto results = slurp(cfg.out_dir / kResultsCsv);
  const auto summary = slurp(cfg.out_dir / kSummaryJson);
  const auto curves = slurp(cfg.out_dir / kCurvesCsv);
  const auto manifest = slurp(cfg.out_dir / kRunManifestJson);

  const auto second = run_campaign(cfg);
  CHECK(second.cache_files_generated == 0);
  CHECK(slurp(cfg.out_dir / kResultsCsv) == results);
  CHECK(slurp(cfg.out_dir / kSummaryJson) == summary);
  CHECK(slurp(cfg.out_dir / kCurvesCsv) == curves);
  CHECK(without_created(slurp(cfg.out_dir / kRunManifestJson)) == without_created(manifest));

  // Worker count does not leak into the results.
  cfg.out_dir = root / "out_serial";
  cfg.parallelism = 1;
  run_campaign(cfg);
  CHECK(slurp(cfg.out_dir / kResultsCsv) == results);
  CHECK(slurp(cfg.out_dir / kCurvesCsv) == curves);
  CHECK(curves.rfind(std::string(kCurvesHeader) + "\n", 0) == 0);
  fs::remove_all(root);
}

TEST_CASE("search modes agree on a monotone oracle") {
  const auto root = fresh_dir("affc_campaign_modes");
  write_dataset(root / "data", {80, 160});
  auto cfg = base_config(root);
  cfg.detectors = {scripted_detector("s")};
  std::vector<std::string> bodies;
  for (auto mode : {SearchMode::linear, SearchMode::binary, SearchMode::exhaustive}) {
    cfg.search_mode = mode;
    cfg.out_dir = root / std::string(to_string(mode));
    const auto o = run_campaign(cfg);
    std::vector<double> ffcs;
    for (const auto& r : o.runs[0].results) ffcs.push_back(r.ffc.value());
    std::ostringstream s;
    for (double f : ffcs) s << f << ",";
    bodies.push_back(s.str());
    if (mode == SearchMode::exhaustive) {
      for (const auto& a : o.runs[0].audits) CHECK(a.violations == 0);
      CHECK(o.runs[0].audits.size() == 14);
    }
  }
  CHECK(bodies[0] == bodies[1]);
  CHECK(bodies[0] == bodies[2]);
  fs::remove_all(root);
}

TEST_CASE("exclusion is per detector") {
  const auto root = fresh_dir("affc_campaign_exclusion");
  write_dataset(root / "data", {30, 200});  // luminance roughly 32 and 130
  auto cfg = base_config(root);
  cfg.operators = {OperatorKind::darken, OperatorKind::brighten};
  cfg.detectors = {band_detector("dark", 0, 80), band_detector("bright", 80, 255)};
  const auto o = run_campaign(cfg);
  REQUIRE(o.runs.size() == 2);
  for (const auto& run : o.runs) {
    CHECK(run.results.size() == 2);
    REQUIRE(run.excluded.size() == 1);
  }
  CHECK(o.runs[0].excluded[0].image_id == "img_01.png");
  CHECK(o.runs[1].excluded[0].image_id == "img_00.png");
  const auto issues = slurp(cfg.out_dir / kIssuesCsv);
  CHECK(issues.find("excluded") != std::string::npos);
  fs::remove_all(root);
}

TEST_CASE("detector with no usable image is omitted from the summary") {
  const auto root = fresh_dir("affc_campaign_unusable");
  write_dataset(root / "data", {100});
  auto cfg = base_config(root);
  cfg.operators = {OperatorKind::fog};
  cfg.detectors = {scripted_detector("ok"), band_detector("never", 250, 255)};
  const auto o = run_campaign(cfg);
  const auto bundle = load_report(cfg.out_dir);
  REQUIRE(bundle.models.size() == 1);
  CHECK(bundle.models[0].model_id == "ok");
  (void)o;
  const auto manifest = nlohmann::json::parse(slurp(cfg.out_dir / kRunManifestJson));
  CHECK(manifest.at("warnings").dump().find("never") != std::string::npos);
  fs::remove_all(root);
}

TEST_CASE("all censored gives AFFC 1") {
  const auto root = fresh_dir("affc_campaign_censored");
  write_dataset(root / "data", {90, 110, 130});
  auto cfg = base_config(root);
  cfg.operators = {OperatorKind::rain, OperatorKind::shadow};
  DetectorConfig d;
  d.detector_id = "never";
  d.oracle = OracleSpec{};
  cfg.detectors = {d};
  run_campaign(cfg);
  for (const auto& c : load_report(cfg.out_dir).models.at(0).per_condition) {
    CHECK(c.affc == 1.0);
    CHECK(c.censored_count == 3);
  }
  fs::remove_all(root);
}

TEST_CASE("failed triples are reported and the run continues") {
  const auto root = fresh_dir("affc_campaign_failures");
  write_dataset(root / "data", {90, 110});
  auto cfg = base_config(root);
  cfg.operators = {OperatorKind::fog, OperatorKind::rain};
  DetectorConfig d;
  d.detector_id = "flaky";
  d.max_concurrency = 2;
  d.oracle = OracleSpec{};  // keeps the config valid; the handle below does the work
  cfg.detectors = {d};

  class Flaky final : public DetectorBackend {
   public:
    DetectorMetadata handshake() override { return {"flaky", kProtocolVersion, 2}; }
    DetectionSet detect(const Probe& p) override {
      if (p.op == OperatorKind::rain && p.strength > 0.5) throw ProbeError("boom", p.strength);
      return {Detection{"car", {1, 1, 5, 5}, 0.8}};
    }
  };
  std::vector<DetectorHandle> handles;
  handles.emplace_back(d, std::make_unique<Flaky>());
  const auto o = run_campaign(cfg, handles);
  CHECK(o.exit_status() == 1);
  CHECK(o.failures.size() == 2);
  CHECK(o.runs[0].results.size() == 2);  // fog only
  const auto issues = slurp(cfg.out_dir / kIssuesCsv);
  CHECK(issues.find("boom") != std::string::npos);
  fs::remove_all(root);
}

TEST_CASE("report regeneration and comparison") {
  const auto root = fresh_dir("affc_campaign_compare");
  write_dataset(root / "data", {100, 140});
  auto cfg = base_config(root);
  cfg.detectors = {scripted_detector("a")};
  run_campaign(cfg);
  const auto summary = slurp(cfg.out_dir / kSummaryJson);
  fs::remove(cfg.out_dir / kSummaryJson);
  regenerate_report(cfg.out_dir);
  CHECK(slurp(cfg.out_dir / kSummaryJson) == summary);

  const auto self = compare_reports(cfg.out_dir, cfg.out_dir, root / "cmp");
  REQUIRE(self.size() == 1);
  CHECK(self[0].overall_delta == 0.0);
  for (const auto& d : self[0].per_condition) CHECK(d.delta == 0.0);
  CHECK(fs::exists(root / "cmp" / kComparisonJson));

  auto other = cfg;
  other.out_dir = root / "out_delta";
  other.delta = 0.6;
  run_campaign(other);
  CHECK_THROWS_AS(compare_reports(cfg.out_dir, other.out_dir), ComparisonError);

  auto subset = cfg;
  subset.out_dir = root / "out_subset";
  subset.operators = {OperatorKind::fog};
  run_campaign(subset);
  CHECK_THROWS_AS(compare_reports(cfg.out_dir, subset.out_dir), ComparisonError);
  fs::remove_all(root);
}

TEST_CASE("config parsing and validation") {
  const auto doc = nlohmann::json::parse(R"({
    "dataset_dir": "data", "cache_dir": "/abs/cache", "out_dir": "out",
    "operators": ["fog", "darken"], "step": 0.05, "delta": 0.4,
    "search_mode": "binary", "campaign_seed": 5, "parallelism": 2,
    "detectors": [{"detector_id": "m", "transport": "builtin",
                   "oracle": {"kind": "scripted_threshold", "fail_threshold": {"fog": 0.3},
                              "failure_mode": "box_drift"}}]
  })");
  const auto c = parse_campaign_config(doc, "/base");
  CHECK(c.dataset_dir == fs::path("/base/data"));
  CHECK(c.cache_dir == fs::path("/abs/cache"));
  CHECK(c.operators == std::vector<OperatorKind>{OperatorKind::fog, OperatorKind::darken});
  CHECK(c.search_mode == SearchMode::binary);
  CHECK(c.detectors.at(0).oracle->failure_mode == FailureMode::box_drift);
  CHECK(c.detectors.at(0).oracle->fail_threshold.at(OperatorKind::fog) == 0.3);
  CHECK_NOTHROW(c.validate());

  const auto round = parse_campaign_config(to_json(c), "/elsewhere");
  CHECK(round.dataset_dir == c.dataset_dir);
  CHECK(round.step == c.step);
  CHECK(round.detectors.size() == 1);

  auto bad = c;
  bad.step = 0.3;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = c;
  bad.delta = 1.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = c;
  bad.operators.clear();
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = c;
  bad.detectors.push_back(bad.detectors[0]);
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  auto wrong_op = doc;
  wrong_op["operators"] = {"hail"};
  CHECK_THROWS_AS(parse_campaign_config(wrong_op), ConfigError);
}

TEST_CASE("benchmark cache size arithmetic") {
  // Per image and operator: the clean baseline plus every grid strength.
  const std::size_t per_set = 100 * kAllOperators.size() * (strength_grid(0.025).size() + 1);
  CHECK(per_set == 28700);
  CHECK(2 * per_set == 57400);
}

TEST_CASE("cli end to end") {
  const auto root = fresh_dir("affc_cli");
  write_dataset(root / "data", {100, 150});
  nlohmann::json cfg = {
      {"dataset_dir", "data"},
      {"cache_dir", "cache"},
      {"out_dir", "out"},
      {"operators", {"fog", "darken"}},
      {"campaign_seed", 3},
      {"detectors",
       {{{"detector_id", "mock"},
         {"transport", "subprocess"},
         {"endpoint", std::string(AFFC_MOCK_DETECTOR) + " --lo 40 --hi 220"},
         {"max_concurrency", 2}}}}};
  std::ofstream(root / "campaign.json") << cfg.dump(2);

  CHECK(run_cli("run --config " + (root / "campaign.json").string()) == 0);
  CHECK(fs::exists(root / "out" / kSummaryJson));
  CHECK(load_report(root / "out").models.at(0).model_id == "mock");
  CHECK(run_cli("report --run " + (root / "out").string()) == 0);
  CHECK(run_cli("compare --a " + (root / "out").string() + " --b " + (root / "out").string() +
                " --out " + root.string()) == 0);
  CHECK(fs::exists(root / kComparisonJson));
  CHECK(run_cli("ingest --config " + (root / "campaign.json").string() + " --out " +
                (root / "manifest.json").string()) == 0);
  CHECK(nlohmann::json::parse(slurp(root / "manifest.json")).dump().find("img_01.png") !=
        std::string::npos);

  const auto in = root / "data" / "img_00.png";
  const auto out = root / "aug.png";
  CHECK(run_cli("augment --op darken --strength 0.25 --seed 1 --in " + in.string() + " --out " +
                out.string()) == 0);
  CHECK(read_image(out) == apply(OperatorKind::darken, read_image(in), 0.25, {1}));
  CHECK(run_cli("augment --op hail --strength 0.25 --in " + in.string() + " --out " +
                out.string()) == 2);
  CHECK(run_cli("augment --op fog --strength 1.5 --in " + in.string() + " --out " +
                out.string()) == 2);
  CHECK(run_cli("audit-smoothness --op darken --in " + in.string()) == 0);
  CHECK(run_cli("run --config " + (root / "missing.json").string()) == 2);
  fs::remove_all(root);
}
