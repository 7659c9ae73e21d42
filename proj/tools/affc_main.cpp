// SPDX-License-Identifier: Apache-2.0
// affc: operational-robustness harness for object detectors.

#include <cstdio>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "affc/augmentation.hpp"
#include "affc/campaign.hpp"
#include "affc/errors.hpp"

namespace {

constexpr int kExitFatal = 2;

int cmd_augment(const std::string& op_name, double strength, std::uint64_t seed,
                const std::string& in, const std::string& out) {
  auto op = affc::parse_operator(op_name);
  if (!op) throw affc::ConfigError("unknown operator `" + op_name + "`");
  const auto image = affc::read_image(in);
  affc::write_png(out, affc::apply(*op, image, strength, affc::AugmentationSeed{seed}));
  return 0;
}

int cmd_audit(const std::string& in, const std::string& op_name, double step,
              std::uint64_t seed) {
  const auto image = affc::read_image(in);
  const auto grid = affc::strength_grid(step);
  std::vector<affc::OperatorKind> ops;
  if (op_name.empty()) {
    ops.assign(affc::kAllOperators.begin(), affc::kAllOperators.end());
  } else {
    auto op = affc::parse_operator(op_name);
    if (!op) throw affc::ConfigError("unknown operator `" + op_name + "`");
    ops.push_back(*op);
  }
  std::cout << "operator,strength,mean_abs_delta,budget_exceeded\n";
  int exceeded = 0;
  for (auto op : ops) {
    for (const auto& s : affc::smoothness_audit(op, image, grid, affc::AugmentationSeed{seed})) {
      const bool over = s.mean_abs_delta > 3.0 * step;
      exceeded += over;
      char line[128];
      std::snprintf(line, sizeof line, "%s,%.3f,%.6f,%s\n",
                    std::string(affc::to_string(op)).c_str(), s.strength.value(),
                    s.mean_abs_delta, over ? "true" : "false");
      std::cout << line;
    }
  }
  return exceeded == 0 ? 0 : 1;
}

int cmd_ingest(const std::string& config_path, const std::string& out) {
  const auto config = affc::load_campaign_config(config_path);
  std::vector<affc::DetectorHandle> detectors;
  for (const auto& d : config.detectors) detectors.emplace_back(d);
  for (auto& d : detectors) d.handshake();
  const auto manifest = affc::ingest_dataset(config.dataset_dir, detectors);
  const auto text = affc::to_json(manifest).dump(2) + "\n";
  if (out.empty()) {
    std::cout << text;
  } else {
    std::ofstream f(out);
    f << text;
    if (!f) throw affc::ConfigError("cannot write " + out);
  }
  return 0;
}

int cmd_run(const std::string& config_path) {
  const auto config = affc::load_campaign_config(config_path);
  const auto outcome = affc::run_campaign(config);
  std::vector<affc::ModelSummary> models = affc::load_report(config.out_dir).models;
  std::cout << affc::format_summary_table(models);
  std::cout << "cache files generated: " << outcome.cache_files_generated << '\n';
  for (const auto& f : outcome.failures) {
    std::cerr << "failed: " << f.detector_id << ' ' << f.image_id << ' '
              << affc::to_string(f.op) << ": " << f.message << '\n';
  }
  std::cout << "report written to " << config.out_dir.string() << '\n';
  return outcome.exit_status();
}

int cmd_report(const std::string& run_dir) {
  const auto bundle = affc::regenerate_report(run_dir);
  std::cout << affc::format_summary_table(bundle.models);
  return 0;
}

int cmd_compare(const std::string& a, const std::string& b, const std::string& out) {
  const auto comparisons = affc::compare_reports(a, b, out);
  for (const auto& c : comparisons) {
    std::cout << c.model_a << " vs " << c.model_b << '\n';
    for (const auto& d : c.per_condition) {
      std::cout << "  " << affc::to_string(d.op) << ": "
                << (d.delta >= 0 ? "+" : "") << affc::format3(d.delta) << '\n';
    }
    std::cout << "  overall: " << (c.overall_delta >= 0 ? "+" : "")
              << affc::format3(c.overall_delta) << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"affc: first-failure-coefficient robustness harness for object detectors"};
  app.require_subcommand(1);
  app.set_version_flag("--version", AFFC_VERSION);

  std::string op_name, in_path, out_path, config_path, run_dir, dir_a, dir_b;
  double strength = 0.0;
  double step = 0.025;
  std::uint64_t seed = 0;

  auto* augment = app.add_subcommand("augment", "Apply one augmentation operator to an image");
  augment->add_option("--op", op_name, "Operator kind")->required();
  augment->add_option("--strength", strength, "Interference strength in [0,1]")->required();
  augment->add_option("--seed", seed, "Augmentation seed");
  augment->add_option("--in", in_path, "Input PNG/JPEG")->required();
  augment->add_option("--out", out_path, "Output PNG")->required();

  auto* audit = app.add_subcommand("audit-smoothness",
                                   "Report mean per-step change of each operator on an image");
  audit->add_option("--in", in_path, "Input PNG/JPEG")->required();
  audit->add_option("--op", op_name, "Operator kind (default: all)");
  audit->add_option("--step", step, "Grid step");
  audit->add_option("--seed", seed, "Augmentation seed");

  auto* ingest = app.add_subcommand("ingest", "Hash, decode and clean-probe a dataset");
  ingest->add_option("--config", config_path, "Campaign config (JSON)")->required();
  ingest->add_option("--out", out_path, "Manifest output file (default: stdout)");

  auto* run = app.add_subcommand("run", "Run a campaign and write its report bundle");
  run->add_option("--config", config_path, "Campaign config (JSON)")->required();

  auto* report = app.add_subcommand("report", "Rebuild summary.json from a run's results");
  report->add_option("--run", run_dir, "Run output directory")->required();

  auto* cmp = app.add_subcommand("compare", "AFFC deltas between two runs (a minus b)");
  cmp->add_option("--a", dir_a, "First run directory")->required();
  cmp->add_option("--b", dir_b, "Second run directory")->required();
  cmp->add_option("--out", out_path, "Directory for comparison.json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitFatal;
  }

  try {
    if (*augment) return cmd_augment(op_name, strength, seed, in_path, out_path);
    if (*audit) return cmd_audit(in_path, op_name, step, seed);
    if (*ingest) return cmd_ingest(config_path, out_path);
    if (*run) return cmd_run(config_path);
    if (*report) return cmd_report(run_dir);
    if (*cmp) return cmd_compare(dir_a, dir_b, out_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFatal;
  }
  return kExitFatal;
}
