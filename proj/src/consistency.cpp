#include "smdcard/consistency.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/special_functions/beta.hpp>

#include "smdcard/evaluate.hpp"
#include "smdcard/random.hpp"

namespace smdcard {

std::optional<Dispersion> dispersion(std::span<const std::optional<double>> values) {
  Dispersion d;
  std::vector<double> defined;
  for (const auto& v : values) {
    if (v) {
      defined.push_back(*v);
    } else {
      ++d.excluded;
    }
  }
  if (defined.size() < 2) return std::nullopt;
  double mean = 0.0;
  for (double v : defined) mean += v;
  mean /= static_cast<double>(defined.size());
  double ss = 0.0;
  for (double v : defined) ss += (v - mean) * (v - mean);
  d.variance = ss / static_cast<double>(defined.size());
  const auto [lo, hi] = std::minmax_element(defined.begin(), defined.end());
  d.max_min_difference = *hi - *lo;
  return d;
}

double f_distribution_sf(double f, double d1, double d2) {
  if (!(f > 0.0)) return 1.0;
  if (std::isinf(f)) return 0.0;
  // P(F >= f) = I_{d2/(d2 + d1 f)}(d2/2, d1/2)
  return boost::math::ibeta(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * f));
}

AnovaResult one_way_anova(std::span<const std::vector<double>> groups) {
  AnovaResult r;
  std::size_t k = 0, n = 0;
  double grand = 0.0;
  for (const auto& g : groups) {
    if (g.size() < 2) throw Error(ErrorCode::kInvalidArgument, "ANOVA: every group needs at least two samples");
    ++k;
    n += g.size();
    for (double v : g) grand += v;
  }
  if (k < 2) throw Error(ErrorCode::kInvalidArgument, "ANOVA: needs at least two groups");
  grand /= static_cast<double>(n);
  for (const auto& g : groups) {
    double mean = 0.0;
    for (double v : g) mean += v;
    mean /= static_cast<double>(g.size());
    r.ss_between += static_cast<double>(g.size()) * (mean - grand) * (mean - grand);
    for (double v : g) r.ss_within += (v - mean) * (v - mean);
  }
  r.df_between = static_cast<double>(k - 1);
  r.df_within = static_cast<double>(n - k);
  const double scale = std::max(1.0, std::abs(grand));
  const double eps = 1e-24 * scale * scale * static_cast<double>(n);
  const bool no_within = r.ss_within <= eps;
  const bool no_between = r.ss_between <= eps;
  if (no_within && no_between) {
    r.f = MetricValue::undefined("all replicate values identical");
    r.p = MetricValue::undefined("all replicate values identical");
    return r;
  }
  if (no_within) {
    r.f = MetricValue::infinity();
    r.p = MetricValue::finite(0.0);
    return r;
  }
  const double f = (r.ss_between / r.df_between) / (r.ss_within / r.df_within);
  r.f = MetricValue::finite(f);
  r.p = MetricValue::finite(f_distribution_sf(f, r.df_between, r.df_within));
  return r;
}

std::vector<std::size_t> bootstrap_rows(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> rows(n);
  if (n == 0) return rows;
  Rng rng(seed);
  for (auto& r : rows) r = static_cast<std::size_t>(rng.index(n));
  return rows;
}

std::map<std::string, std::vector<MetricResult>> per_subgroup_metrics(
    const EvalInputs& inputs, const EvalConfig& config, std::span<const MetricDescriptor* const> base_metrics) {
  const auto labels = subgroup_labels(inputs, config);
  if (labels.empty()) throw Error(ErrorCode::kConfig, "no subgroup labels in the inputs");
  std::vector<EvalInputs> restricted;
  restricted.reserve(labels.size());
  for (const auto& l : labels) restricted.push_back(restrict_inputs(inputs, config, Scope::subgroup(l)));

  const std::size_t m = base_metrics.size();
  std::vector<MetricResult> slots(labels.size() * m);
  parallel_for(slots.size(), config.threads, [&](std::size_t t) {
    const auto s = t / m;
    const auto& metric = *base_metrics[t % m];
    const auto scope = Scope::subgroup(labels[s]);
    auto meas = compute_metric(metric, restricted[s], config, metric_seed(config.seed, scope, metric.name));
    MetricResult r;
    r.descriptor = &metric;
    r.value = std::move(meas.value);
    r.diagnostics = std::move(meas.diagnostics);
    r.scope = scope;
    slots[t] = std::move(r);
  });

  std::map<std::string, std::vector<MetricResult>> out;
  for (std::size_t s = 0; s < labels.size(); ++s) {
    auto& row = out[labels[s]];
    for (std::size_t j = 0; j < m; ++j) row.push_back(std::move(slots[s * m + j]));
  }
  return out;
}

std::vector<double> bootstrap_metric(const EvalInputs& subgroup_inputs, const MetricDescriptor& metric,
                                     const EvalConfig& config, const std::string& label, std::size_t replicates) {
  std::vector<double> values;
  const std::string stream = "bootstrap/" + std::string(metric.name) + "/" + label;
  for (std::size_t r = 0; r < replicates; ++r) {
    const auto seed = derive_seed(config.seed, stream, r);
    // Only the synthetic side is resampled; the reference stays fixed.
    EvalInputs sample = subgroup_inputs;
    if (sample.synthetic) {
      const auto rows = bootstrap_rows(sample.synthetic->size(), seed);
      Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), sample.synthetic->data().cols());
      for (std::size_t i = 0; i < rows.size(); ++i) {
        x.row(static_cast<Eigen::Index>(i)) = sample.synthetic->data().row(static_cast<Eigen::Index>(rows[i]));
      }
      sample.synthetic = EmbeddingSet::from_matrix(std::move(x));
    }
    if (sample.table) sample.table = sample.table->select_rows(bootstrap_rows(sample.table->rows(), seed ^ 0x5bd1e995ULL));
    const auto meas = compute_metric(metric, sample, config, seed);
    if (meas.value.is_finite()) values.push_back(meas.value.value);
  }
  return values;
}

}  // namespace smdcard
