// SPDX-License-Identifier: Apache-2.0
#include "affc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "affc/errors.hpp"

namespace affc {

double affc(std::span<const double> ffcs) {
  if (ffcs.empty()) throw AggregationError("AFFC of an empty set");
  double sum = 0.0;
  for (double v : ffcs) {
    if (!(v > 0.0 && v <= 1.0)) {
      throw AggregationError("FFC value " + std::to_string(v) + " outside (0, 1]");
    }
    sum += v;
  }
  return sum / static_cast<double>(ffcs.size());
}

double std_dev(std::span<const double> ffcs) {
  if (ffcs.empty()) throw AggregationError("standard deviation of an empty set");
  if (ffcs.size() == 1) return 0.0;
  double mean = 0.0;
  for (double v : ffcs) mean += v;
  mean /= static_cast<double>(ffcs.size());
  double ss = 0.0;
  for (double v : ffcs) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(ffcs.size() - 1));
}

ConditionSummary summarize_condition(OperatorKind op, std::span<const FfcResult> results) {
  std::vector<double> values;
  ConditionSummary s;
  s.op = op;
  for (const auto& r : results) {
    if (r.op != op) continue;
    values.push_back(r.ffc.value());
    if (r.censored) ++s.censored_count;
  }
  if (values.empty()) {
    throw AggregationError("no results for condition " + std::string(to_string(op)));
  }
  s.affc = affc(values);
  s.std_dev = std_dev(values);
  s.n = values.size();
  return s;
}

double overall_affc(std::span<const ConditionSummary> per_condition,
                    std::span<const OperatorKind> expected) {
  if (expected.empty()) throw AggregationError("no conditions to average");
  if (per_condition.size() != expected.size()) {
    throw AggregationError("expected " + std::to_string(expected.size()) +
                           " conditions, got " + std::to_string(per_condition.size()));
  }
  std::map<OperatorKind, double> by_op;
  for (const auto& c : per_condition) {
    if (!by_op.emplace(c.op, c.affc).second) {
      throw AggregationError("duplicate condition " + std::string(to_string(c.op)));
    }
  }
  double sum = 0.0;
  for (auto op : expected) {
    auto it = by_op.find(op);
    if (it == by_op.end()) {
      throw AggregationError("missing condition " + std::string(to_string(op)));
    }
    sum += it->second;
  }
  return sum / static_cast<double>(expected.size());
}

double overall_affc(std::span<const ConditionSummary> per_condition) {
  return overall_affc(per_condition, kAllOperators);
}

ModelSummary summarize_model(std::string model_id,
                             std::vector<ConditionSummary> per_condition,
                             std::span<const OperatorKind> operators) {
  ModelSummary m;
  m.model_id = std::move(model_id);
  m.overall_affc = overall_affc(per_condition, operators);
  m.per_condition = std::move(per_condition);
  return m;
}

ConfidenceCurve confidence_curve(std::string model_id, OperatorKind op,
                                 std::span<const FfcResult> results,
                                 std::span<const Strength> grid) {
  if (results.empty()) throw AggregationError("confidence curve without traces");
  ConfidenceCurve curve;
  curve.op = op;
  curve.model_id = std::move(model_id);
  curve.points.reserve(grid.size());
  for (const auto s : grid) curve.points.push_back({s, 0.0, 0});

  for (const auto& r : results) {
    if (r.op != op) throw AggregationError("trace for a different operator");
    std::map<Strength, const TraceEntry*> by_strength;
    for (const auto& e : r.trace) by_strength.emplace(e.strength, &e);
    for (auto& point : curve.points) {
      auto it = by_strength.find(point.strength);
      if (it == by_strength.end()) {
        throw AggregationError("trace of " + r.image_id +
                               " does not cover the full grid; run an exhaustive sweep");
      }
      point.mean_confidence += it->second->confidence.value_or(0.0);
      ++point.sample_count;
    }
  }
  for (auto& point : curve.points) {
    point.mean_confidence /= static_cast<double>(point.sample_count);
  }
  return curve;
}

SummaryComparison compare(const ModelSummary& a, const ModelSummary& b) {
  if (a.per_condition.size() != b.per_condition.size()) {
    throw ComparisonError("summaries cover different condition sets");
  }
  std::map<OperatorKind, double> b_by_op;
  for (const auto& c : b.per_condition) b_by_op.emplace(c.op, c.affc);

  SummaryComparison out;
  out.model_a = a.model_id;
  out.model_b = b.model_id;
  for (const auto& c : a.per_condition) {
    auto it = b_by_op.find(c.op);
    if (it == b_by_op.end()) {
      throw ComparisonError("condition " + std::string(to_string(c.op)) +
                            " missing from " + b.model_id);
    }
    out.per_condition.push_back({c.op, c.affc - it->second});
  }
  out.overall_delta = a.overall_affc - b.overall_affc;
  return out;
}

}  // namespace affc
