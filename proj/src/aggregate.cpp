#include "smdcard/aggregate.hpp"

#include <algorithm>
#include <cmath>

#include "smdcard/compliance.hpp"

namespace smdcard {

namespace {

std::optional<double> context_value(const Diagnostics& context, const char* key) {
  const auto it = context.find(key);
  if (it == context.end()) return std::nullopt;
  return it->second;
}

}  // namespace

std::optional<Bounds> default_bounds(const MetricDescriptor& metric, const Diagnostics& context) {
  const std::string_view n = metric.name;
  if (n == "CosineSimilarity" || n == "StructuralSimilarityIndex") return Bounds{-1.0, 1.0};
  if (n == "JensenShannonDivergence" || n == "Precision" || n == "Recall" || n == "Coverage" ||
      n == "ClusterBalance" || n == "ConstraintViolationRate" || n == "ProportionOfRequiredFields" ||
      n == "MissingDataPercentage" || n == "DifferentialPrivacyScore" || n == "TCloseness") {
    return Bounds{0.0, 1.0};
  }
  if (n == "DocumentationClarityScore") return Bounds{1.0, 10.0};
  if (n == "MaxMinDifference") return Bounds{0.0, 100.0};
  // Population variance of values in [0, 100] peaks at 50^2.
  if (n == "SubgroupVariance") return Bounds{0.0, 2500.0};
  if (n == "VendiScore") {
    if (auto count = context_value(context, "n"); count && *count > 1) return Bounds{1.0, *count};
    return std::nullopt;
  }
  if (n == "InceptionScore") {
    if (auto classes = context_value(context, "classes"); classes && *classes > 1) return Bounds{1.0, *classes};
    return std::nullopt;
  }
  return std::nullopt;
}

bool needs_bounds(const MetricDescriptor& metric) { return metric.direction != Direction::kStatSig; }

std::optional<Bounds> resolve_bounds(const MetricDescriptor& metric, const EvalConfig& config,
                                     const Diagnostics& context) {
  if (auto it = config.bounds.find(std::string(metric.name)); it != config.bounds.end()) return it->second;
  return default_bounds(metric, context);
}

std::optional<double> normalize(const MetricDescriptor& metric, const MetricValue& value,
                                const std::optional<Bounds>& bounds) {
  if (!value.is_defined()) return std::nullopt;
  if (metric.direction == Direction::kStatSig) {
    if (!value.is_finite()) return std::nullopt;
    return 100.0 * std::clamp(value.value, 0.0, 1.0);
  }
  const bool maximize = metric.raw_orientation == Direction::kMaximize;
  if (value.kind == MetricValue::Kind::kPositiveInfinity) return maximize ? 100.0 : 0.0;
  if (!bounds || !(bounds->lo < bounds->hi)) return std::nullopt;
  const double t = (value.value - bounds->lo) / (bounds->hi - bounds->lo);
  return 100.0 * std::clamp(maximize ? t : 1.0 - t, 0.0, 1.0);
}

Verdict verdict(double score, const Thresholds& thresholds) {
  if (score >= thresholds.good) return Verdict::kGood;
  if (score >= thresholds.moderate) return Verdict::kModerate;
  return Verdict::kLow;
}

CriterionAggregate aggregate_criterion(Criterion criterion, std::span<const WeightedScore> scores,
                                       AggregationMode mode, const Thresholds& thresholds) {
  CriterionAggregate out;
  out.criterion = criterion;
  double total_weight = 0.0, acc = 0.0;
  for (const auto& s : scores) {
    if (!s.normalized) {
      out.excluded.push_back(s.name);
      continue;
    }
    out.included.push_back(s.name);
    if (s.weight <= 0.0) continue;
    total_weight += s.weight;
    acc += mode == AggregationMode::kArithmetic ? s.weight * *s.normalized
                                                : s.weight * std::log(std::max(*s.normalized, kGeometricFloor));
  }
  if (total_weight <= 0.0) return out;
  const double mean = acc / total_weight;
  const double score = std::clamp(mode == AggregationMode::kArithmetic ? mean : std::exp(mean), 0.0, 100.0);
  out.score = score;
  out.verdict = verdict(score, thresholds);
  return out;
}

std::vector<std::string> interpretation_notes(const EvalConfig& config) {
  std::vector<std::string> notes;
  notes.push_back(
      "Nearest Invalid Datapoint is reported as the mean margin between valid rows and the nearest rule "
      "boundary. Read literally, a distance to the nearest invalid exemplar that is minimized would reward "
      "synthetic data sitting next to invalid data, which contradicts keeping data inside acceptable ranges.");
  notes.push_back(
      "Frechet distance is computed on the supplied embeddings and reported as FrechetDistance(embeddings); "
      "no Inception network is involved.");
  notes.push_back("Inception Score is computed from externally supplied class probabilities.");
  notes.push_back(
      "Differential privacy parameters are declared by the generator and not verified. The computed "
      "Compliance signal for that row is the nearest-neighbour leakage rate.");
  notes.push_back(
      "T-Closeness: the raw distance is minimized; its normalized score is 100 at distance 0.");
  notes.push_back("ANOVA replicates come from seeded bootstrap resampling of each subgroup's rows (B=" +
                  std::to_string(config.bootstrap_replicates) + ").");
  notes.push_back(
      "Metrics within a criterion carry equal weight unless configured; undefined metrics are excluded "
      "and the remaining weights renormalized.");
  return notes;
}

QualityReport assemble_report(std::vector<ScopeReport> scopes, const EvalConfig& config) {
  QualityReport report;
  report.config_digest = config.digest;
  report.seed = config.seed;
  report.thresholds = config.thresholds;
  report.aggregation = config.aggregation;
  report.declared_privacy = declared_privacy_record(config.declared_privacy);
  report.notes = interpretation_notes(config);
  for (auto& scope : scopes) {
    for (auto& m : scope.metrics) {
      m.normalized = normalize(*m.descriptor, m.value, resolve_bounds(*m.descriptor, config, m.diagnostics));
    }
    scope.criteria.clear();
    for (auto c : all_criteria()) {
      std::vector<WeightedScore> scores;
      for (const auto& m : scope.metrics) {
        if (m.descriptor->criterion != c) continue;
        scores.push_back({std::string(m.descriptor->name), m.normalized, config.weight_for(m.descriptor->name)});
      }
      scope.criteria.push_back(aggregate_criterion(c, scores, config.aggregation, config.thresholds));
    }
    report.scopes.push_back(std::move(scope));
  }
  return report;
}

}  // namespace smdcard
