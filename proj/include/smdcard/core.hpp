#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace smdcard {

// ---------------------------------------------------------------------------
// Criteria and metric descriptors
// ---------------------------------------------------------------------------

enum class Criterion {
  kCongruence,
  kCoverage,
  kConstraint,
  kCompleteness,
  kCompliance,
  kComprehension,
  kConsistency,
};

inline constexpr std::size_t kCriterionCount = 7;

enum class Space { kEmbedding, kImage, kMetadata, kDataAttribute, kDocumentation, kQualityMetrics };
enum class Arity { kUnary, kBinary };
enum class Direction { kMaximize, kMinimize, kStatSig };

std::string_view to_string(Criterion c);
std::string_view to_string(Space s);
std::string_view to_string(Arity a);
std::string_view to_string(Direction d);
std::optional<Criterion> parse_criterion(std::string_view name);
std::span<const Criterion, kCriterionCount> all_criteria();

// Where a metric's inputs come from. Drives input validation and the
// per-scope restriction logic in the evaluator.
enum class InputKind {
  kEmbeddings,
  kImagePairs,
  kClassProbabilities,
  kRecordTable,
  kDeclaration,
  kManifest,
  kSubgroupResults,
};

// One row of the metric catalog. `label` is the catalog's display name;
// `name` is the unique identifier used in configs and reports (the catalog
// repeats "Distance to Centroid" and "Variance" under different criteria).
struct MetricDescriptor {
  std::string_view name;
  std::string_view label;
  Criterion criterion;
  Space space;
  Arity arity;
  Direction direction;
  bool image_only;
  InputKind input;
  // Orientation used when mapping raw values onto 0..100. Equals
  // `direction` except where the raw quantity is a distance whose
  // catalog direction refers to the normalized compliance score.
  Direction raw_orientation;
  // True when the computation needs the real embedding set. Differs from
  // `arity == kBinary` for the privacy row, whose computed signal is the
  // real-vs-synthetic leakage rate.
  bool needs_real_embeddings;
};

std::span<const MetricDescriptor> metric_catalog();
const MetricDescriptor* find_metric(std::string_view name);
const MetricDescriptor& metric(std::string_view name);  // throws kUnknownMetric

// ---------------------------------------------------------------------------
// Datasets
// ---------------------------------------------------------------------------

// n x d embedding matrix with per-row ids and optional labels.
// Structure is checked on construction; finiteness is reported by
// validate_inputs so that the offending row and column can be named.
class EmbeddingSet {
 public:
  EmbeddingSet() = default;
  EmbeddingSet(std::vector<std::string> ids, Eigen::MatrixXd data,
               std::optional<std::vector<std::string>> subgroup = std::nullopt,
               std::optional<std::vector<std::string>> region = std::nullopt);

  // Convenience constructor with ids "0".."n-1".
  static EmbeddingSet from_matrix(Eigen::MatrixXd data,
                                  std::optional<std::vector<std::string>> subgroup = std::nullopt,
                                  std::optional<std::vector<std::string>> region = std::nullopt);

  std::size_t size() const { return static_cast<std::size_t>(data_.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(data_.cols()); }
  const Eigen::MatrixXd& data() const { return data_; }
  const std::vector<std::string>& ids() const { return ids_; }
  const std::optional<std::vector<std::string>>& subgroup() const { return subgroup_; }
  const std::optional<std::vector<std::string>>& region() const { return region_; }

  EmbeddingSet select_rows(std::span<const std::size_t> rows) const;
  EmbeddingSet with_data(Eigen::MatrixXd data) const;

  // Distinct labels in sorted order.
  std::vector<std::string> subgroup_labels() const;
  std::vector<std::string> region_labels() const;

 private:
  std::vector<std::string> ids_;
  Eigen::MatrixXd data_;
  std::optional<std::vector<std::string>> subgroup_;
  std::optional<std::vector<std::string>> region_;
};

enum class ColumnKind { kNumeric, kCategorical, kText };
std::string_view to_string(ColumnKind k);
std::optional<ColumnKind> parse_column_kind(std::string_view s);

struct Column {
  std::string name;
  ColumnKind kind;
};

// A cell is absent (monostate), numeric, or a string for categorical/text.
using Cell = std::variant<std::monostate, double, std::string>;

class RecordTable {
 public:
  RecordTable() = default;
  RecordTable(std::vector<Column> columns, std::vector<std::vector<Cell>> rows);

  std::size_t rows() const { return rows_.size(); }
  std::size_t cols() const { return columns_.size(); }
  const std::vector<Column>& columns() const { return columns_; }
  const std::vector<std::vector<Cell>>& cells() const { return rows_; }
  const Cell& at(std::size_t row, std::size_t col) const { return rows_[row][col]; }

  std::optional<std::size_t> find_column(std::string_view name) const;
  std::size_t column_index(std::string_view name) const;  // throws

  bool missing(std::size_t row, std::size_t col) const {
    return std::holds_alternative<std::monostate>(rows_[row][col]);
  }
  std::vector<std::vector<bool>> missing_mask() const;
  std::size_t missing_count() const;

  // Observed value set of a categorical column, sorted.
  std::vector<std::string> domain(std::string_view column) const;

  RecordTable select_rows(std::span<const std::size_t> rows) const;
  RecordTable without_column(std::string_view name) const;
  RecordTable with_cell(std::size_t row, std::size_t col, Cell value) const;
  void set_cell(std::size_t row, std::size_t col, Cell value);

 private:
  std::vector<Column> columns_;
  std::vector<std::vector<Cell>> rows_;
};

// ---------------------------------------------------------------------------
// Results
// ---------------------------------------------------------------------------

struct MetricValue {
  enum class Kind { kFinite, kPositiveInfinity, kUndefined };
  Kind kind = Kind::kUndefined;
  double value = 0.0;
  std::string reason;  // set for undefined values

  static MetricValue finite(double v) { return {Kind::kFinite, v, {}}; }
  static MetricValue infinity() { return {Kind::kPositiveInfinity, 0.0, {}}; }
  static MetricValue undefined(std::string why) { return {Kind::kUndefined, 0.0, std::move(why)}; }

  bool is_finite() const { return kind == Kind::kFinite; }
  bool is_defined() const { return kind != Kind::kUndefined; }
};

using Diagnostics = std::map<std::string, double>;

// A metric value with its diagnostics, as produced by the metric modules.
struct Measurement {
  MetricValue value;
  Diagnostics diagnostics;

  static Measurement of(double v, Diagnostics d = {}) { return {MetricValue::finite(v), std::move(d)}; }
  static Measurement undefined(std::string why, Diagnostics d = {}) {
    return {MetricValue::undefined(std::move(why)), std::move(d)};
  }
};

struct Scope {
  enum class Kind { kGlobal, kRegion, kSubgroup };
  Kind kind = Kind::kGlobal;
  std::string tag;

  static Scope global() { return {}; }
  static Scope region(std::string t) { return {Kind::kRegion, std::move(t)}; }
  static Scope subgroup(std::string t) { return {Kind::kSubgroup, std::move(t)}; }
  std::string to_string() const;
  static Scope parse(std::string_view s);
  bool operator==(const Scope&) const = default;
};

struct MetricResult {
  const MetricDescriptor* descriptor = nullptr;
  MetricValue value;
  std::optional<double> normalized;
  Scope scope;
  Diagnostics diagnostics;
};

enum class Verdict { kGood, kModerate, kLow, kNotEvaluated };
std::string_view to_string(Verdict v);
std::optional<Verdict> parse_verdict(std::string_view s);

struct Thresholds {
  double good = 80.0;
  double moderate = 70.0;
};

enum class AggregationMode { kArithmetic, kGeometric };
std::string_view to_string(AggregationMode m);
std::optional<AggregationMode> parse_aggregation_mode(std::string_view s);

struct CriterionAggregate {
  Criterion criterion = Criterion::kCongruence;
  std::optional<double> score;
  Verdict verdict = Verdict::kNotEvaluated;
  std::vector<std::string> included;
  std::vector<std::string> excluded;
};

struct ScopeReport {
  Scope scope;
  std::vector<MetricResult> metrics;
  std::vector<CriterionAggregate> criteria;  // one per criterion, catalog order
};

struct QualityReport {
  std::string config_digest;
  std::uint64_t seed = 0;
  Thresholds thresholds;
  AggregationMode aggregation = AggregationMode::kArithmetic;
  std::map<std::string, std::string> declared_privacy;
  std::vector<std::string> notes;
  std::vector<ScopeReport> scopes;  // global first, then regions, then subgroups

  const ScopeReport& global() const;
  const ScopeReport* find_scope(const Scope& s) const;
};

}  // namespace smdcard
