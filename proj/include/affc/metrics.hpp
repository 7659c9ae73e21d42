// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "affc/augmentation.hpp"
#include "affc/ffc_search.hpp"

namespace affc {

struct ConditionSummary {
  OperatorKind op = OperatorKind::fog;
  double affc = 0.0;
  double std_dev = 0.0;
  std::size_t n = 0;
  std::size_t censored_count = 0;
};

struct ModelSummary {
  std::string model_id;
  std::vector<ConditionSummary> per_condition;
  double overall_affc = 0.0;
};

struct CurvePoint {
  Strength strength;
  double mean_confidence = 0.0;
  std::size_t sample_count = 0;
};

struct ConfidenceCurve {
  OperatorKind op = OperatorKind::fog;
  std::string model_id;
  std::vector<CurvePoint> points;
};

/// Arithmetic mean. Throws AggregationError on an empty list or a value
/// outside (0, 1].
double affc(std::span<const double> ffcs);

/// Sample standard deviation (n - 1 denominator); 0 for a single value.
double std_dev(std::span<const double> ffcs);

/// Summarises the results of one operator.
ConditionSummary summarize_condition(OperatorKind op,
                                     std::span<const FfcResult> results);

/// Unweighted mean over exactly the seven conditions, one per operator.
double overall_affc(std::span<const ConditionSummary> per_condition);

/// Unweighted mean over `expected`, each present exactly once. Campaigns run
/// on an operator subset aggregate through this.
double overall_affc(std::span<const ConditionSummary> per_condition,
                    std::span<const OperatorKind> expected);

/// Builds a model summary from per-condition entries over `operators`.
ModelSummary summarize_model(std::string model_id,
                             std::vector<ConditionSummary> per_condition,
                             std::span<const OperatorKind> operators);

/// Mean matched-detection confidence per grid strength; missing detections
/// count as 0. Every trace must cover every grid strength.
ConfidenceCurve confidence_curve(std::string model_id, OperatorKind op,
                                 std::span<const FfcResult> results,
                                 std::span<const Strength> grid);

struct ConditionDelta {
  OperatorKind op = OperatorKind::fog;
  double delta = 0.0;
};

struct SummaryComparison {
  std::string model_a;
  std::string model_b;
  std::vector<ConditionDelta> per_condition;
  double overall_delta = 0.0;
};

/// Per-condition and overall AFFC differences, a minus b. Throws
/// ComparisonError when the operator sets differ.
SummaryComparison compare(const ModelSummary& a, const ModelSummary& b);

}  // namespace affc
