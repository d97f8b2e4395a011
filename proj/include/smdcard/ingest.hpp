#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "smdcard/compliance.hpp"
#include "smdcard/congruence.hpp"
#include "smdcard/constraint.hpp"
#include "smdcard/core.hpp"

namespace smdcard {

// ---------------------------------------------------------------------------
// Evaluation plan
// ---------------------------------------------------------------------------

struct MetricParams {
  std::optional<std::size_t> k;
  std::optional<std::size_t> bins;
  std::optional<std::size_t> reduce_to;
  std::optional<std::size_t> k_clusters;
  std::optional<double> ridge;
  std::optional<double> tau;
  TransportMode transport = TransportMode::kPerDimension;
};

struct Bounds {
  double lo = 0.0;
  double hi = 1.0;
};

struct DeriveRangeSpec {
  std::vector<std::string> fields;
  double quantile_margin = 0.0;
};

inline constexpr const char* kSeedEnvironmentVariable = "SMDCARD_SEED";

struct EvalConfig {
  // Selected metrics in catalog order.
  std::vector<const MetricDescriptor*> metrics;
  std::map<std::string, MetricParams> params;

  // Embedding files
  std::string id_column = "id";
  std::optional<std::string> subgroup_column;
  std::optional<std::string> region_column;
  std::optional<std::size_t> reduce_to;  // shared PCA before evaluation
  std::optional<std::filesystem::path> class_probabilities;

  // Record tables
  std::map<std::string, ColumnKind> table_schema;
  std::string missing_sentinel;
  std::optional<std::filesystem::path> reference_table;
  std::optional<std::string> table_subgroup_column;

  ConstraintRuleSet declared_rules;
  std::optional<DeriveRangeSpec> derive_rules;

  std::vector<std::string> required_fields;  // empty: reference table's columns
  double populated_fraction = 1.0;

  std::vector<std::string> quasi_identifiers;
  std::string sensitive_column;
  DeclaredPrivacy declared_privacy;

  std::vector<std::string> consistency_base;  // empty: every eligible selected metric
  std::size_t bootstrap_replicates = 200;

  std::optional<std::filesystem::path> documentation_manifest;

  std::map<std::string, Bounds> bounds;
  std::map<std::string, double> weights;  // per metric, default 1
  Thresholds thresholds;
  AggregationMode aggregation = AggregationMode::kArithmetic;

  std::uint64_t seed = 0;
  std::size_t threads = 1;
  std::size_t calibration_splits = 5;

  std::string digest;  // SHA-256 of the canonical config document

  bool selected(std::string_view name) const;
  const MetricParams& params_for(std::string_view name) const;
  double weight_for(std::string_view name) const;
};

// Strict parse: unknown keys, unknown metric names, and malformed values
// are errors. Relative paths resolve against `base_dir`.
EvalConfig parse_eval_config(const nlohmann::json& doc, const std::filesystem::path& base_dir);
EvalConfig read_eval_config(const std::filesystem::path& path);

void check_thresholds(const Thresholds& t);

// ---------------------------------------------------------------------------
// Delimited text
// ---------------------------------------------------------------------------

// Splits a delimiter-separated file into rows of fields. Double-quoted
// fields may contain the delimiter, quotes ("") and newlines. The delimiter
// is a tab for .tsv files and a comma otherwise.
std::vector<std::vector<std::string>> read_delimited(const std::filesystem::path& path);

// Locale-independent strict number parse; nullopt when `text` is not a
// complete number.
std::optional<double> parse_number(std::string_view text);

// Header-row CSV (or JSON lines with "id", "features", and optional
// "subgroup"/"region" keys for .jsonl/.ndjson). A missing id column yields
// ids "0".."n-1".
EmbeddingSet read_embeddings(const std::filesystem::path& path, const std::string& id_column = "id",
                             const std::optional<std::string>& subgroup_column = std::nullopt,
                             const std::optional<std::string>& region_column = std::nullopt);

// CSV text as written by write_embeddings / write_record_table.
std::string embeddings_csv(const EmbeddingSet& set, const std::string& id_column = "id");
std::string record_table_csv(const RecordTable& table);

void write_embeddings(const EmbeddingSet& set, const std::filesystem::path& path,
                      const std::string& id_column = "id");

// Unlisted columns are inferred: numeric when every present cell parses,
// categorical otherwise.
RecordTable read_record_table(const std::filesystem::path& path,
                              const std::map<std::string, ColumnKind>& schema = {},
                              const std::string& missing_sentinel = "");

void write_record_table(const RecordTable& table, const std::filesystem::path& path);

// Class-probability matrix: every column except `id_column` is a class.
Eigen::MatrixXd read_class_probabilities(const std::filesystem::path& path, const std::string& id_column = "id");

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

inline constexpr const char* kReportFormat = "smd-quality-report/1";

nlohmann::json report_to_json(const QualityReport& report);
QualityReport report_from_json(const nlohmann::json& doc);

// Canonical bytes: sorted keys, two-space indent, floats at 9 significant
// digits.
std::string serialize_report(const QualityReport& report);
QualityReport parse_report(const std::string& text);

void write_report(const QualityReport& report, const std::filesystem::path& path);
QualityReport read_report(const std::filesystem::path& path);

std::string report_digest(const QualityReport& report);

// ---------------------------------------------------------------------------
// Files
// ---------------------------------------------------------------------------

std::string read_text_file(const std::filesystem::path& path);

// Writes to a sibling temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

// JSON with sorted keys, two-space indent, and doubles at 9 significant
// digits.
std::string dump_canonical_json(const nlohmann::json& doc);

nlohmann::json parse_json_file(const std::filesystem::path& path);

}  // namespace smdcard
