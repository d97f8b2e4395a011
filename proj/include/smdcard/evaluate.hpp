#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "smdcard/congruence.hpp"
#include "smdcard/constraint.hpp"
#include "smdcard/core.hpp"
#include "smdcard/error.hpp"
#include "smdcard/ingest.hpp"

namespace smdcard {

// Everything one scope's metrics are computed from. Absent members mean
// the input was not supplied (or is empty after scope restriction).
struct EvalInputs {
  std::optional<EmbeddingSet> real;
  std::optional<EmbeddingSet> synthetic;
  std::optional<RecordTable> table;
  std::optional<RecordTable> reference_table;
  std::vector<LoadedPair> images;
  std::optional<Eigen::MatrixXd> class_probs;
  std::optional<int> documentation_clarity;
  ConstraintRuleSet rules;  // declared plus derived
};

struct InputPaths {
  std::optional<std::filesystem::path> real;
  std::optional<std::filesystem::path> synthetic;
  std::optional<std::filesystem::path> table;
  std::optional<std::filesystem::path> images;
};

// Reads every input named by `paths` and `config`, derives reference range
// rules, scores the documentation manifest, and applies the shared PCA when
// configured.
EvalInputs load_inputs(const InputPaths& paths, const EvalConfig& config);

// Shared-basis PCA over real and synthetic; no-op without config.reduce_to.
void apply_shared_reduction(EvalInputs& inputs, const EvalConfig& config);

struct Violation {
  ErrorCode code;
  std::string message;
};

struct ValidationOutcome {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
};

// Plan and input checks; never throws for data problems.
ValidationOutcome validate_inputs(const EvalInputs& inputs, const EvalConfig& config);

// Base metrics for consistency: the configured list, or every selected
// metric that can be recomputed per subgroup.
std::vector<const MetricDescriptor*> consistency_base_metrics(const EvalConfig& config);

// Restricts inputs to one subgroup or region. Sources without labels for
// the scope's kind are kept whole (real, reference table) or dropped.
EvalInputs restrict_inputs(const EvalInputs& inputs, const EvalConfig& config, const Scope& scope);

// Sorted distinct subgroup labels across synthetic embeddings and table.
std::vector<std::string> subgroup_labels(const EvalInputs& inputs, const EvalConfig& config);

// One metric on one set of inputs. Consistency rows are not computed here.
// Precondition failures become undefined values, never exceptions.
Measurement compute_metric(const MetricDescriptor& metric, const EvalInputs& inputs, const EvalConfig& config,
                           std::uint64_t seed);

std::uint64_t metric_seed(std::uint64_t seed, const Scope& scope, std::string_view metric);

// Runs fn(0..count-1) on up to `threads` workers. Each index must write to
// its own slot; the first exception is rethrown after all workers stop.
void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& fn);

// Full evaluation: global scope, region scopes, subgroup scopes,
// consistency rows, normalization, aggregation.
QualityReport evaluate(const EvalInputs& inputs, const EvalConfig& config);

// Reference self-run: seeded 50/50 splits of the real set stand in for
// real vs synthetic. Returns {"normalization": {...}, "observed": {...}, ...}.
nlohmann::json calibrate(const EvalInputs& reference, const EvalConfig& config);

}  // namespace smdcard
