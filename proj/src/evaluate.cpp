#include "smdcard/evaluate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <set>
#include <thread>

#include "smdcard/aggregate.hpp"
#include "smdcard/card.hpp"
#include "smdcard/completeness.hpp"
#include "smdcard/compliance.hpp"
#include "smdcard/consistency.hpp"
#include "smdcard/coverage.hpp"
#include "smdcard/linalg.hpp"
#include "smdcard/random.hpp"

namespace smdcard {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

bool csv_has_column(const fs::path& path, const std::string& name) {
  if (path.extension() == ".jsonl" || path.extension() == ".ndjson") return false;
  const auto rows = read_delimited(path);
  if (rows.empty()) return false;
  return std::find(rows.front().begin(), rows.front().end(), name) != rows.front().end();
}

std::string cell_label(const Cell& cell) {
  if (const auto* s = std::get_if<std::string>(&cell)) return *s;
  if (const auto* d = std::get_if<double>(&cell)) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.15g", *d);
    return buf;
  }
  return {};
}

std::optional<EmbeddingSet> rows_with(const EmbeddingSet& set, const std::vector<std::string>& labels,
                                      const std::string& tag) {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == tag) rows.push_back(i);
  }
  if (rows.empty()) return std::nullopt;
  return set.select_rows(rows);
}

std::optional<RecordTable> table_rows_with(const RecordTable& table, std::size_t col, const std::string& tag) {
  std::vector<std::size_t> rows;
  for (std::size_t r = 0; r < table.rows(); ++r) {
    if (!table.missing(r, col) && cell_label(table.at(r, col)) == tag) rows.push_back(r);
  }
  if (rows.empty()) return std::nullopt;
  return table.select_rows(rows);
}

bool embedding_input(const MetricDescriptor& m) {
  return m.input == InputKind::kEmbeddings || m.input == InputKind::kDeclaration;
}

bool is_constraint_metric(std::string_view n) {
  return n == "NearestInvalidDatapoint" || n == "DistanceToConstraintBoundary" || n == "ConstraintViolationRate";
}

std::vector<std::string> required_fields(const EvalInputs& inputs, const EvalConfig& config) {
  if (!config.required_fields.empty()) return config.required_fields;
  std::vector<std::string> out;
  if (inputs.reference_table) {
    for (const auto& c : inputs.reference_table->columns()) out.push_back(c.name);
  }
  return out;
}

Diagnostics bounds_context(const EvalInputs& inputs) {
  Diagnostics ctx;
  if (inputs.synthetic) ctx["n"] = static_cast<double>(inputs.synthetic->size());
  if (inputs.class_probs) ctx["classes"] = static_cast<double>(inputs.class_probs->cols());
  return ctx;
}

}  // namespace

// ---------------------------------------------------------------------------
// Loading
// ---------------------------------------------------------------------------

EvalInputs load_inputs(const InputPaths& paths, const EvalConfig& config) {
  EvalInputs in;
  if (paths.synthetic) {
    in.synthetic = read_embeddings(*paths.synthetic, config.id_column, config.subgroup_column, config.region_column);
  }
  if (paths.real) {
    // Labels on the real set are optional; when present they restrict the
    // real rows used for subgroup and region scopes.
    std::optional<std::string> sub, reg;
    if (config.subgroup_column && csv_has_column(*paths.real, *config.subgroup_column)) sub = config.subgroup_column;
    if (config.region_column && csv_has_column(*paths.real, *config.region_column)) reg = config.region_column;
    in.real = read_embeddings(*paths.real, config.id_column, sub, reg);
  }
  if (paths.table) in.table = read_record_table(*paths.table, config.table_schema, config.missing_sentinel);
  if (config.reference_table) {
    in.reference_table = read_record_table(*config.reference_table, config.table_schema, config.missing_sentinel);
  }
  if (paths.images) {
    for (const auto& pair : read_image_manifest(*paths.images)) {
      in.images.push_back({read_pgm(pair.real), read_pgm(pair.synthetic)});
    }
  }
  if (config.class_probabilities) in.class_probs = read_class_probabilities(*config.class_probabilities, config.id_column);
  if (config.documentation_manifest) {
    in.documentation_clarity = documentation_clarity(read_card_manifest(*config.documentation_manifest)).score;
  }

  in.rules = config.declared_rules;
  if (config.derive_rules) {
    if (!in.reference_table) {
      throw Error(ErrorCode::kConfig, "constraints.derive_from_reference needs table.reference");
    }
    auto derived = derive_range_rules(*in.reference_table, config.derive_rules->fields,
                                      config.derive_rules->quantile_margin);
    if (in.rules.rules.empty()) in.rules.source = RuleSource::kDerivedFromReference;
    for (auto& r : derived.rules) in.rules.rules.push_back(std::move(r));
  }
  apply_shared_reduction(in, config);
  return in;
}

void apply_shared_reduction(EvalInputs& inputs, const EvalConfig& config) {
  if (!config.reduce_to || !inputs.synthetic) return;
  if (inputs.real && inputs.real->dim() != inputs.synthetic->dim()) return;  // reported by validation
  if (*config.reduce_to > inputs.synthetic->dim()) {
    throw Error(ErrorCode::kConfig, "embeddings.reduce_to=" + std::to_string(*config.reduce_to) +
                                        " exceeds the embedding dimension " + std::to_string(inputs.synthetic->dim()));
  }
  std::vector<const EmbeddingSet*> sets{&*inputs.synthetic};
  if (inputs.real) sets.push_back(&*inputs.real);
  const auto model = fit_pca(sets, *config.reduce_to);
  inputs.synthetic = model.project(*inputs.synthetic);
  if (inputs.real) inputs.real = model.project(*inputs.real);
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

std::vector<const MetricDescriptor*> consistency_base_metrics(const EvalConfig& config) {
  std::vector<const MetricDescriptor*> out;
  if (!config.consistency_base.empty()) {
    for (const auto& m : metric_catalog()) {
      if (std::find(config.consistency_base.begin(), config.consistency_base.end(), m.name) !=
          config.consistency_base.end()) {
        out.push_back(&m);
      }
    }
    return out;
  }
  for (const auto* m : config.metrics) {
    if (m->criterion == Criterion::kConsistency || m->criterion == Criterion::kComprehension) continue;
    if (embedding_input(*m) || m->input == InputKind::kRecordTable) out.push_back(m);
  }
  return out;
}

std::vector<std::string> subgroup_labels(const EvalInputs& inputs, const EvalConfig& config) {
  std::set<std::string> labels;
  if (inputs.synthetic && inputs.synthetic->subgroup()) {
    labels.insert(inputs.synthetic->subgroup()->begin(), inputs.synthetic->subgroup()->end());
  }
  if (inputs.table && config.table_subgroup_column) {
    if (auto col = inputs.table->find_column(*config.table_subgroup_column)) {
      for (std::size_t r = 0; r < inputs.table->rows(); ++r) {
        if (!inputs.table->missing(r, *col)) labels.insert(cell_label(inputs.table->at(r, *col)));
      }
    }
  }
  labels.erase(std::string());
  return {labels.begin(), labels.end()};
}

ValidationOutcome validate_inputs(const EvalInputs& inputs, const EvalConfig& config) {
  ValidationOutcome out;
  std::set<std::string> seen;
  auto add = [&](ErrorCode code, std::string msg) {
    if (seen.insert(msg).second) out.violations.push_back({code, std::move(msg)});
  };

  if (config.metrics.empty()) add(ErrorCode::kConfig, "no metrics selected");

  if (inputs.real && inputs.synthetic && inputs.real->dim() != inputs.synthetic->dim()) {
    add(ErrorCode::kDimensionMismatch, "dimension mismatch: real has d=" + std::to_string(inputs.real->dim()) +
                                           ", synthetic has d=" + std::to_string(inputs.synthetic->dim()));
  }
  auto check_finite = [&](const std::optional<EmbeddingSet>& set, const char* which) {
    if (!set) return;
    std::size_t reported = 0;
    const auto& x = set->data();
    for (Eigen::Index i = 0; i < x.rows() && reported < 20; ++i) {
      for (Eigen::Index j = 0; j < x.cols(); ++j) {
        if (!std::isfinite(x(i, j))) {
          add(ErrorCode::kNonFinite, std::string(which) + " row id \"" + set->ids()[static_cast<std::size_t>(i)] +
                                         "\" column " + std::to_string(j + 1) + ": non-finite value");
          ++reported;
        }
      }
    }
  };
  check_finite(inputs.real, "real");
  check_finite(inputs.synthetic, "synthetic");
  if (inputs.synthetic && inputs.synthetic->subgroup()) {
    for (std::size_t i = 0; i < inputs.synthetic->size(); ++i) {
      if ((*inputs.synthetic->subgroup())[i].empty()) {
        add(ErrorCode::kEmptySubgroup, "empty subgroup: synthetic row id \"" + inputs.synthetic->ids()[i] +
                                           "\" has no subgroup label");
        break;
      }
    }
  }

  const auto context = bounds_context(inputs);
  const auto labels = subgroup_labels(inputs, config);
  for (const auto* m : config.metrics) {
    const std::string name(m->name);
    const auto& p = config.params_for(name);
    switch (m->input) {
      case InputKind::kEmbeddings:
        if (!inputs.synthetic) add(ErrorCode::kMissingInput, name + ": requires synthetic embeddings (--synthetic)");
        if (m->needs_real_embeddings && !inputs.real) {
          add(ErrorCode::kMissingReference, name + ": binary metric requires reference set (--real)");
        }
        if (name == "EarthMoversDistance" && p.transport == TransportMode::kExactMatching && inputs.real &&
            inputs.synthetic) {
          if (inputs.real->size() != inputs.synthetic->size()) {
            add(ErrorCode::kInvalidArgument, name + ": exact-matching mode needs equal sample counts (real n=" +
                                                 std::to_string(inputs.real->size()) + ", synthetic n=" +
                                                 std::to_string(inputs.synthetic->size()) +
                                                 "); use mode \"per-dimension\"");
          } else if (inputs.real->size() > kMaxExactMatching) {
            add(ErrorCode::kInvalidArgument, name + ": exact-matching mode supports n <= " +
                                                 std::to_string(kMaxExactMatching) + "; use mode \"per-dimension\"");
          }
        }
        break;
      case InputKind::kImagePairs:
        if (inputs.images.empty()) add(ErrorCode::kMissingInput, name + ": requires paired images (--images)");
        break;
      case InputKind::kClassProbabilities:
        if (!inputs.class_probs) {
          add(ErrorCode::kMissingInput, name + ": requires class probabilities (embeddings.class_probabilities)");
        }
        break;
      case InputKind::kDeclaration:
        if (!inputs.real || !inputs.synthetic) {
          add(ErrorCode::kMissingReference,
              name + ": leakage rate requires reference set (--real) and synthetic embeddings (--synthetic)");
        }
        break;
      case InputKind::kManifest:
        if (!inputs.documentation_clarity) add(ErrorCode::kMissingInput, name + ": requires documentation.manifest");
        break;
      case InputKind::kSubgroupResults:
        if (labels.empty()) {
          add(ErrorCode::kConfig, name + ": requires subgroup labels (embeddings.subgroup_column or "
                                         "table.subgroup_column)");
        }
        if (consistency_base_metrics(config).empty()) add(ErrorCode::kConfig, name + ": no consistency base metrics");
        break;
      case InputKind::kRecordTable: {
        if (!inputs.table) {
          add(ErrorCode::kMissingInput, name + ": requires a synthetic record table (--table)");
          break;
        }
        const auto& table = *inputs.table;
        if (is_constraint_metric(name)) {
          if (inputs.rules.rules.empty()) {
            add(ErrorCode::kConfig, name + ": no constraint rules (constraints.rules or "
                                           "constraints.derive_from_reference)");
          } else {
            try {
              check_rules(inputs.rules, table);
            } catch (const Error& e) {
              add(e.code(), std::string("constraints: ") + e.what());
            }
          }
        } else if (name == "ProportionOfRequiredFields") {
          if (required_fields(inputs, config).empty()) {
            add(ErrorCode::kConfig, name + ": no required fields (completeness.required_fields or table.reference)");
          }
        } else if (name == "KAnonymity" || name == "LDiversity" || name == "TCloseness") {
          if (config.quasi_identifiers.empty()) add(ErrorCode::kConfig, name + ": compliance.quasi_identifiers is empty");
          for (const auto& q : config.quasi_identifiers) {
            if (!table.find_column(q)) add(ErrorCode::kConfig, name + ": quasi-identifier \"" + q + "\" not in table");
          }
          if (name != "KAnonymity") {
            if (config.sensitive_column.empty()) {
              add(ErrorCode::kConfig, name + ": compliance.sensitive_column is not set");
            } else if (auto col = table.find_column(config.sensitive_column); !col) {
              add(ErrorCode::kConfig, name + ": sensitive column \"" + config.sensitive_column + "\" not in table");
            } else if (name == "LDiversity" && table.columns()[*col].kind == ColumnKind::kNumeric) {
              add(ErrorCode::kConfig, name + ": sensitive column \"" + config.sensitive_column + "\" must be categorical");
            }
          }
        }
        break;
      }
    }
    if (needs_bounds(*m) && !resolve_bounds(*m, config, context)) {
      add(ErrorCode::kMissingBounds, name + ": no normalization bounds; set normalization." + name +
                                         " or run calibrate");
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Scopes
// ---------------------------------------------------------------------------

EvalInputs restrict_inputs(const EvalInputs& inputs, const EvalConfig& config, const Scope& scope) {
  if (scope.kind == Scope::Kind::kGlobal) return inputs;
  EvalInputs out;
  out.rules = inputs.rules;
  if (scope.kind == Scope::Kind::kRegion) {
    if (inputs.synthetic && inputs.synthetic->region()) {
      out.synthetic = rows_with(*inputs.synthetic, *inputs.synthetic->region(), scope.tag);
    }
    if (inputs.real) {
      out.real = inputs.real->region() ? rows_with(*inputs.real, *inputs.real->region(), scope.tag) : inputs.real;
    }
    return out;
  }
  if (inputs.synthetic && inputs.synthetic->subgroup()) {
    out.synthetic = rows_with(*inputs.synthetic, *inputs.synthetic->subgroup(), scope.tag);
  }
  if (inputs.real) {
    out.real = inputs.real->subgroup() ? rows_with(*inputs.real, *inputs.real->subgroup(), scope.tag) : inputs.real;
  }
  if (config.table_subgroup_column) {
    if (inputs.table) {
      if (auto col = inputs.table->find_column(*config.table_subgroup_column)) {
        out.table = table_rows_with(*inputs.table, *col, scope.tag);
      }
    }
    if (inputs.reference_table) {
      auto col = inputs.reference_table->find_column(*config.table_subgroup_column);
      out.reference_table = col ? table_rows_with(*inputs.reference_table, *col, scope.tag) : inputs.reference_table;
    }
  } else {
    out.reference_table = inputs.reference_table;
  }
  return out;
}

std::uint64_t metric_seed(std::uint64_t seed, const Scope& scope, std::string_view metric) {
  return derive_seed(seed, scope.to_string() + "/" + std::string(metric), 0);
}

// ---------------------------------------------------------------------------
// Metric dispatch
// ---------------------------------------------------------------------------

Measurement compute_metric(const MetricDescriptor& metric, const EvalInputs& inputs, const EvalConfig& config,
                           std::uint64_t seed) {
  const std::string_view n = metric.name;
  const auto& p = config.params_for(n);

  if (metric.input == InputKind::kSubgroupResults) return Measurement::undefined("computed from subgroup results");
  if (metric.input == InputKind::kImagePairs) {
    if (inputs.images.empty()) return Measurement::undefined("no image pairs in this scope");
    return n == "PeakSignalToNoiseRatio" ? psnr(inputs.images) : ssim(inputs.images);
  }
  if (metric.input == InputKind::kClassProbabilities) {
    if (!inputs.class_probs) return Measurement::undefined("no class probabilities in this scope");
    auto m = inception_style_score(*inputs.class_probs);
    m.diagnostics["classes"] = static_cast<double>(inputs.class_probs->cols());
    return m;
  }
  if (metric.input == InputKind::kManifest) {
    if (!inputs.documentation_clarity) return Measurement::undefined("no documentation manifest in this scope");
    return Measurement::of(static_cast<double>(*inputs.documentation_clarity));
  }

  try {
    if (embedding_input(metric)) {
      if (!inputs.synthetic) return Measurement::undefined("empty subgroup: no synthetic rows in this scope");
      if (metric.needs_real_embeddings && !inputs.real) {
        return Measurement::undefined("empty subgroup: no real rows in this scope");
      }
      const auto& syn = inputs.synthetic->data();
      static const Eigen::MatrixXd kNone;
      const auto& real = inputs.real ? inputs.real->data() : kNone;
      if (n == "CosineSimilarity") return cosine_centroid(real, syn);
      if (n == "EarthMoversDistance") return wasserstein1(real, syn, p.transport);
      if (n == "JensenShannonDivergence") return jensen_shannon(real, syn, p.bins);
      if (n == "FrechetDistance") return frechet_distance(real, syn);
      if (n == "CentroidDistance") return centroid_distance(real, syn);
      if (n == "Precision") return manifold_precision(real, syn, p.k.value_or(3));
      if (n == "Recall") return manifold_recall(real, syn, p.k.value_or(3));
      if (n == "Coverage") return manifold_coverage(real, syn, p.k.value_or(5));
      if (n == "MeanDistanceToCentroid") return mean_distance_to_centroid(real, syn);
      if (n == "ConvexHullVolume") {
        return convex_hull_volume(syn, std::min<std::size_t>(p.reduce_to.value_or(3), inputs.synthetic->dim()));
      }
      if (n == "DPPScore") return dpp_logdet(syn, p.ridge.value_or(kDefaultDppRidge));
      if (n == "VendiScore") {
        auto m = vendi_score(syn);
        m.diagnostics["n"] = static_cast<double>(syn.rows());
        return m;
      }
      if (n == "Variance") return total_variance(syn);
      if (n == "Entropy") return embedding_entropy(syn, p.bins);
      if (n == "RarityScore") return rarity_score(real, syn, p.k.value_or(3));
      if (n == "ClusterBalance") return cluster_balance(syn, p.k_clusters, seed);
      if (n == "DifferentialPrivacyScore") return leakage_rate(real, syn, p.tau);
    } else if (metric.input == InputKind::kRecordTable) {
      if (!inputs.table) return Measurement::undefined("empty subgroup: no table rows in this scope");
      const auto& table = *inputs.table;
      if (n == "ConstraintViolationRate") return violation_rate(table, inputs.rules);
      if (n == "DistanceToConstraintBoundary") return violation_magnitude(table, inputs.rules);
      if (n == "NearestInvalidDatapoint") return margin_to_boundary(table, inputs.rules);
      if (n == "ProportionOfRequiredFields") {
        const auto required = required_fields(inputs, config);
        if (required.empty()) return Measurement::undefined("no required fields");
        return required_field_proportion(table, required, config.populated_fraction);
      }
      if (n == "MissingDataPercentage") return missing_data_percentage(table);
      if (n == "KAnonymity") return k_anonymity(table, config.quasi_identifiers);
      if (n == "LDiversity") return l_diversity(table, config.quasi_identifiers, config.sensitive_column);
      if (n == "TCloseness") return t_closeness(table, config.quasi_identifiers, config.sensitive_column);
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kInvalidArgument || e.code() == ErrorCode::kDimensionMismatch) {
      return Measurement::undefined(e.what());
    }
    throw;
  }
  throw Error(ErrorCode::kInternal, "no computation registered for " + std::string(n));
}

// ---------------------------------------------------------------------------
// Parallel execution
// ---------------------------------------------------------------------------

void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min(std::max<std::size_t>(threads, 1), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto work = [&] {
    while (!failed.load()) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        failed = true;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (std::size_t t = 1; t < workers; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

namespace {

MetricResult make_result(const MetricDescriptor& m, Measurement meas, const Scope& scope) {
  MetricResult r;
  r.descriptor = &m;
  r.value = std::move(meas.value);
  r.diagnostics = std::move(meas.diagnostics);
  r.scope = scope;
  return r;
}

// Spread and ANOVA rows built from the per-subgroup base metric results.
std::vector<MetricResult> consistency_rows(const EvalInputs& inputs, const EvalConfig& config,
                                           const std::vector<const MetricDescriptor*>& base,
                                           const std::vector<std::string>& labels,
                                           const std::map<std::string, std::vector<MetricResult>>& per_subgroup) {
  std::vector<MetricResult> out;
  const bool want_spread = config.selected("SubgroupVariance") || config.selected("MaxMinDifference");
  Diagnostics spread_diag;
  std::optional<double> worst_variance, worst_max_min;
  if (want_spread) {
    for (std::size_t b = 0; b < base.size(); ++b) {
      std::vector<std::optional<double>> values;
      for (const auto& label : labels) {
        const auto& r = per_subgroup.at(label)[b];
        values.push_back(normalize(*r.descriptor, r.value, resolve_bounds(*r.descriptor, config, r.diagnostics)));
      }
      const std::string name(base[b]->name);
      const auto d = dispersion(values);
      const auto excluded = std::count(values.begin(), values.end(), std::nullopt);
      spread_diag["excluded:" + name] = static_cast<double>(excluded);
      if (!d) continue;
      spread_diag["variance:" + name] = d->variance;
      spread_diag["max_min:" + name] = d->max_min_difference;
      worst_variance = std::max(worst_variance.value_or(d->variance), d->variance);
      worst_max_min = std::max(worst_max_min.value_or(d->max_min_difference), d->max_min_difference);
    }
    spread_diag["subgroups"] = static_cast<double>(labels.size());
  }
  const std::string spread_reason = "fewer than two subgroups with defined values";
  if (config.selected("SubgroupVariance")) {
    out.push_back(make_result(metric("SubgroupVariance"),
                              worst_variance ? Measurement::of(*worst_variance, spread_diag)
                                             : Measurement::undefined(spread_reason, spread_diag),
                              Scope::global()));
  }
  if (config.selected("MaxMinDifference")) {
    out.push_back(make_result(metric("MaxMinDifference"),
                              worst_max_min ? Measurement::of(*worst_max_min, spread_diag)
                                            : Measurement::undefined(spread_reason, spread_diag),
                              Scope::global()));
  }
  if (config.selected("ANOVA")) {
    // One bootstrap task per (base metric, subgroup).
    std::vector<std::vector<double>> samples(base.size() * labels.size());
    std::vector<EvalInputs> restricted;
    restricted.reserve(labels.size());
    for (const auto& label : labels) restricted.push_back(restrict_inputs(inputs, config, Scope::subgroup(label)));
    parallel_for(samples.size(), config.threads, [&](std::size_t t) {
      const auto b = t / labels.size(), s = t % labels.size();
      samples[t] = bootstrap_metric(restricted[s], *base[b], config, labels[s], config.bootstrap_replicates);
    });
    Diagnostics diag;
    std::optional<double> min_p;
    for (std::size_t b = 0; b < base.size(); ++b) {
      std::vector<std::vector<double>> groups;
      for (std::size_t s = 0; s < labels.size(); ++s) {
        if (samples[b * labels.size() + s].size() >= 2) groups.push_back(samples[b * labels.size() + s]);
      }
      const std::string name(base[b]->name);
      diag["groups:" + name] = static_cast<double>(groups.size());
      if (groups.size() < 2) continue;
      const auto a = one_way_anova(groups);
      if (a.f.kind == MetricValue::Kind::kFinite) diag["F:" + name] = a.f.value;
      if (a.f.kind == MetricValue::Kind::kPositiveInfinity) diag["F:" + name] = INFINITY;
      if (!a.p.is_finite()) continue;
      diag["p:" + name] = a.p.value;
      min_p = std::min(min_p.value_or(a.p.value), a.p.value);
    }
    diag["replicates"] = static_cast<double>(config.bootstrap_replicates);
    out.push_back(make_result(metric("ANOVA"),
                              min_p ? Measurement::of(*min_p, diag)
                                    : Measurement::undefined("no base metric has two subgroups with varying replicates",
                                                             diag),
                              Scope::global()));
  }
  return out;
}

}  // namespace

QualityReport evaluate(const EvalInputs& inputs, const EvalConfig& config) {
  const auto validation = validate_inputs(inputs, config);
  if (!validation.ok()) {
    std::string msg;
    for (const auto& v : validation.violations) msg += (msg.empty() ? "" : "; ") + v.message;
    throw Error(validation.violations.front().code, msg);
  }

  std::vector<ScopeReport> scopes;

  // Global and region scopes: one task per (scope, metric).
  std::vector<Scope> scope_list{Scope::global()};
  if (inputs.synthetic && inputs.synthetic->region()) {
    for (const auto& tag : inputs.synthetic->region_labels()) {
      if (!tag.empty()) scope_list.push_back(Scope::region(tag));
    }
  }
  std::vector<EvalInputs> scope_inputs;
  scope_inputs.reserve(scope_list.size());
  for (const auto& s : scope_list) scope_inputs.push_back(restrict_inputs(inputs, config, s));

  const auto& selected = config.metrics;
  std::vector<MetricResult> slots(scope_list.size() * selected.size());
  parallel_for(slots.size(), config.threads, [&](std::size_t t) {
    const auto s = t / selected.size();
    const auto& m = *selected[t % selected.size()];
    const auto& scope = scope_list[s];
    Measurement meas;
    if (m.input == InputKind::kSubgroupResults && scope.kind == Scope::Kind::kGlobal) {
      meas = Measurement::undefined("pending");  // filled below
    } else if (scope.kind == Scope::Kind::kRegion && !embedding_input(m)) {
      meas = Measurement::undefined("not evaluated in region scope");
    } else {
      meas = compute_metric(m, scope_inputs[s], config, metric_seed(config.seed, scope, m.name));
    }
    slots[t] = make_result(m, std::move(meas), scope);
  });

  // Subgroup scopes.
  const auto labels = subgroup_labels(inputs, config);
  const auto base = consistency_base_metrics(config);
  std::map<std::string, std::vector<MetricResult>> per_subgroup;
  if (!labels.empty() && !base.empty()) per_subgroup = per_subgroup_metrics(inputs, config, base);

  bool any_consistency = false;
  for (const auto* m : selected) any_consistency = any_consistency || m->input == InputKind::kSubgroupResults;
  std::vector<MetricResult> consistency;
  if (any_consistency && !per_subgroup.empty()) {
    consistency = consistency_rows(inputs, config, base, labels, per_subgroup);
  }

  for (std::size_t s = 0; s < scope_list.size(); ++s) {
    ScopeReport sr{scope_list[s], {}, {}};
    for (std::size_t j = 0; j < selected.size(); ++j) {
      auto r = std::move(slots[s * selected.size() + j]);
      if (s == 0 && r.descriptor->input == InputKind::kSubgroupResults) {
        auto it = std::find_if(consistency.begin(), consistency.end(),
                               [&](const MetricResult& c) { return c.descriptor == r.descriptor; });
        r = it != consistency.end()
                ? *it
                : make_result(*r.descriptor, Measurement::undefined("no subgroup results available"), Scope::global());
      }
      sr.metrics.push_back(std::move(r));
    }
    scopes.push_back(std::move(sr));
  }

  for (const auto& label : labels) {
    ScopeReport sr{Scope::subgroup(label), {}, {}};
    for (const auto* m : selected) {
      const auto it = std::find(base.begin(), base.end(), m);
      if (it != base.end() && per_subgroup.contains(label)) {
        sr.metrics.push_back(per_subgroup.at(label)[static_cast<std::size_t>(it - base.begin())]);
      } else {
        const char* why = m->input == InputKind::kSubgroupResults ? "computed at global scope"
                                                                   : "not a consistency base metric";
        sr.metrics.push_back(make_result(*m, Measurement::undefined(why), sr.scope));
      }
    }
    scopes.push_back(std::move(sr));
  }
  return assemble_report(std::move(scopes), config);
}

// ---------------------------------------------------------------------------
// Calibration
// ---------------------------------------------------------------------------

namespace {

std::vector<std::size_t> shuffled(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  Rng rng(seed);
  for (std::size_t i = n; i > 1; --i) std::swap(idx[i - 1], idx[rng.index(i)]);
  return idx;
}

}  // namespace

json calibrate(const EvalInputs& reference, const EvalConfig& config) {
  if (!reference.real) throw Error(ErrorCode::kMissingInput, "calibration needs a reference set (--real)");
  const auto& real = *reference.real;
  if (real.size() < 4) {
    throw Error(ErrorCode::kInvalidArgument,
                "reference set too small to split (n=" + std::to_string(real.size()) + ", need at least 4)");
  }
  const std::size_t splits = std::max<std::size_t>(config.calibration_splits, 1);
  std::map<std::string, std::vector<double>> observed;

  for (std::size_t r = 0; r < splits; ++r) {
    EvalInputs split;
    const auto order = shuffled(real.size(), derive_seed(config.seed, "calibrate/split", r));
    const auto half = real.size() / 2;
    const std::vector<std::size_t> a(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(half));
    const std::vector<std::size_t> b(order.begin() + static_cast<std::ptrdiff_t>(half), order.end());
    split.real = real.select_rows(a);
    split.synthetic = real.select_rows(b);
    split.documentation_clarity = reference.documentation_clarity;
    split.class_probs = reference.class_probs;
    split.rules = config.declared_rules;
    if (reference.reference_table && reference.reference_table->rows() >= 2) {
      const auto& t = *reference.reference_table;
      const auto torder = shuffled(t.rows(), derive_seed(config.seed, "calibrate/table-split", r));
      const auto thalf = t.rows() / 2;
      const std::vector<std::size_t> ta(torder.begin(), torder.begin() + static_cast<std::ptrdiff_t>(thalf));
      const std::vector<std::size_t> tb(torder.begin() + static_cast<std::ptrdiff_t>(thalf), torder.end());
      split.reference_table = t.select_rows(ta);
      split.table = t.select_rows(tb);
      if (config.derive_rules) {
        for (auto& rule :
             derive_range_rules(*split.reference_table, config.derive_rules->fields, config.derive_rules->quantile_margin)
                 .rules) {
          split.rules.rules.push_back(std::move(rule));
        }
      }
    }
    for (const auto* m : config.metrics) {
      if (m->input == InputKind::kSubgroupResults || m->input == InputKind::kImagePairs) continue;
      if (m->input == InputKind::kRecordTable && !split.table) continue;
      if (m->input == InputKind::kRecordTable && split.rules.rules.empty() && is_constraint_metric(m->name)) continue;
      Measurement meas;
      try {
        meas = compute_metric(*m, split, config, metric_seed(config.seed, Scope::global(), m->name));
      } catch (const Error&) {
        continue;  // metric not computable on the reference alone
      }
      if (meas.value.is_finite()) observed[std::string(m->name)].push_back(meas.value.value);
    }
  }

  const double good = config.thresholds.good < 100.0 ? config.thresholds.good / 100.0 : 0.8;
  json normalization = json::object(), obs = json::object(), uncalibrated = json::array();
  for (const auto* m : config.metrics) {
    const std::string name(m->name);
    if (!needs_bounds(*m)) continue;
    const auto it = observed.find(name);
    if (it == observed.end() || it->second.empty()) {
      if (auto d = default_bounds(*m, {{"n", static_cast<double>(real.size() - real.size() / 2)}})) {
        normalization[name] = {d->lo, d->hi};
      } else {
        uncalibrated.push_back(name);
      }
      continue;
    }
    const auto [mn, mx] = std::minmax_element(it->second.begin(), it->second.end());
    double spread = *mx - *mn;
    const double scale = std::max({std::abs(*mn), std::abs(*mx), 1e-12});
    if (spread <= 1e-12 * scale) spread = 0.05 * scale;
    // Worst reference value lands on the "good" threshold.
    Bounds bounds;
    if (m->raw_orientation == Direction::kMinimize) {
      bounds.lo = *mn;
      bounds.hi = *mn + spread / (1.0 - good);
    } else {
      bounds.hi = *mx;
      bounds.lo = *mx - spread / (1.0 - good);
    }
    normalization[name] = {bounds.lo, bounds.hi};
    obs[name] = {{"min", *mn}, {"max", *mx}, {"count", it->second.size()}};
  }
  return {{"format", "smd-calibration/1"}, {"seed", config.seed},     {"splits", splits},
          {"normalization", normalization}, {"observed", obs},        {"uncalibrated", uncalibrated}};
}

}  // namespace smdcard
