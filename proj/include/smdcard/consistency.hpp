#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "smdcard/core.hpp"

namespace smdcard {

struct EvalConfig;
struct EvalInputs;

struct Dispersion {
  double variance = 0.0;  // population variance
  double max_min_difference = 0.0;
  std::size_t excluded = 0;
};

// Spread of per-subgroup values; undefined entries (nullopt) are excluded
// and counted. Returns nullopt with fewer than two defined values.
std::optional<Dispersion> dispersion(std::span<const std::optional<double>> values);

struct AnovaResult {
  MetricValue f;
  MetricValue p;
  double ss_between = 0.0;
  double ss_within = 0.0;
  double df_between = 0.0;
  double df_within = 0.0;
};

// Classic one-way ANOVA. Needs at least two groups of at least two samples.
AnovaResult one_way_anova(std::span<const std::vector<double>> groups);

// Upper tail P(F >= f) of the F(d1, d2) distribution.
double f_distribution_sf(double f, double d1, double d2);

inline constexpr std::size_t kDefaultBootstrapReplicates = 200;

// Row indices drawn with replacement.
std::vector<std::size_t> bootstrap_rows(std::size_t n, std::uint64_t seed);

// Each base metric recomputed on every subgroup; real rows are restricted
// to the same subgroup value. Throws when the synthetic set has no
// subgroup labels.
std::map<std::string, std::vector<MetricResult>> per_subgroup_metrics(
    const EvalInputs& inputs, const EvalConfig& config, std::span<const MetricDescriptor* const> base_metrics);

// Bootstrap replicate values of one metric for one subgroup. Undefined
// replicates are dropped.
std::vector<double> bootstrap_metric(const EvalInputs& subgroup_inputs, const MetricDescriptor& metric,
                                     const EvalConfig& config, const std::string& label, std::size_t replicates);

}  // namespace smdcard
