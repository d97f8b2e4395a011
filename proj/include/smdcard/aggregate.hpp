#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "smdcard/core.hpp"
#include "smdcard/ingest.hpp"

namespace smdcard {

// Analytic bounds for bounded metrics. Vendi and Inception scores depend on
// the sample and class counts, passed in `context` as diagnostics "n" and
// "classes".
std::optional<Bounds> default_bounds(const MetricDescriptor& metric, const Diagnostics& context = {});

// Config bounds win over defaults. ANOVA needs none.
std::optional<Bounds> resolve_bounds(const MetricDescriptor& metric, const EvalConfig& config,
                                     const Diagnostics& context = {});

bool needs_bounds(const MetricDescriptor& metric);

// 0..100 score oriented so that higher is better. Undefined values stay
// undefined.
std::optional<double> normalize(const MetricDescriptor& metric, const MetricValue& value,
                                const std::optional<Bounds>& bounds);

inline constexpr double kGeometricFloor = 0.01;

struct WeightedScore {
  std::string name;
  std::optional<double> normalized;
  double weight = 1.0;
};

CriterionAggregate aggregate_criterion(Criterion criterion, std::span<const WeightedScore> scores,
                                       AggregationMode mode, const Thresholds& thresholds);

Verdict verdict(double score, const Thresholds& thresholds);

// Normalizes every metric in each scope, fills the per-criterion aggregates,
// and attaches the config digest, seed, and declared privacy record.
QualityReport assemble_report(std::vector<ScopeReport> scopes, const EvalConfig& config);

// Notes printed on every card and report.
std::vector<std::string> interpretation_notes(const EvalConfig& config);

}  // namespace smdcard
