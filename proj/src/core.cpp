#include "smdcard/core.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <set>
#include <unordered_set>

#include "smdcard/error.hpp"

namespace smdcard {

namespace {

using C = Criterion;
using S = Space;
using A = Arity;
using D = Direction;
using I = InputKind;

// Rows in catalog order: name, label, criterion, space, arity, direction,
// image-only, input, raw orientation, needs real embeddings.
constexpr std::array<MetricDescriptor, 32> kCatalog{{
    {"CosineSimilarity", "Cosine Similarity", C::kCongruence, S::kEmbedding, A::kBinary, D::kMaximize, false, I::kEmbeddings, D::kMaximize, true},
    {"EarthMoversDistance", "Earth Mover's Distance", C::kCongruence, S::kEmbedding, A::kBinary, D::kMinimize, false, I::kEmbeddings, D::kMinimize, true},
    {"JensenShannonDivergence", "Jensen-Shannon Divergence", C::kCongruence, S::kEmbedding, A::kBinary, D::kMinimize, false, I::kEmbeddings, D::kMinimize, true},
    {"PeakSignalToNoiseRatio", "Peak Signal-to-Noise Ratio", C::kCongruence, S::kImage, A::kBinary, D::kMaximize, true, I::kImagePairs, D::kMaximize, false},
    {"StructuralSimilarityIndex", "Structural Similarity Index", C::kCongruence, S::kImage, A::kBinary, D::kMaximize, true, I::kImagePairs, D::kMaximize, false},
    {"FrechetDistance", "Fréchet Inception Distance", C::kCongruence, S::kEmbedding, A::kBinary, D::kMinimize, true, I::kEmbeddings, D::kMinimize, true},
    {"CentroidDistance", "Distance to Centroid", C::kCongruence, S::kEmbedding, A::kBinary, D::kMinimize, false, I::kEmbeddings, D::kMinimize, true},
    {"Precision", "Precision", C::kCongruence, S::kEmbedding, A::kBinary, D::kMaximize, false, I::kEmbeddings, D::kMaximize, true},

    {"InceptionScore", "Inception Score", C::kCoverage, S::kImage, A::kUnary, D::kMaximize, true, I::kClassProbabilities, D::kMaximize, false},
    {"Recall", "Recall", C::kCoverage, S::kEmbedding, A::kBinary, D::kMaximize, false, I::kEmbeddings, D::kMaximize, true},
    {"Coverage", "Coverage", C::kCoverage, S::kEmbedding, A::kBinary, D::kMaximize, false, I::kEmbeddings, D::kMaximize, true},
    {"MeanDistanceToCentroid", "Distance to Centroid", C::kCoverage, S::kEmbedding, A::kBinary, D::kMaximize, false, I::kEmbeddings, D::kMaximize, true},
    {"ConvexHullVolume", "Convex Hull Volume", C::kCoverage, S::kEmbedding, A::kUnary, D::kMaximize, false, I::kEmbeddings, D::kMaximize, false},
    {"DPPScore", "Determinantal Point Processes Score", C::kCoverage, S::kEmbedding, A::kUnary, D::kMaximize, false, I::kEmbeddings, D::kMaximize, false},
    {"VendiScore", "Vendi Score", C::kCoverage, S::kEmbedding, A::kUnary, D::kMaximize, false, I::kEmbeddings, D::kMaximize, false},
    {"Variance", "Variance", C::kCoverage, S::kEmbedding, A::kUnary, D::kMaximize, false, I::kEmbeddings, D::kMaximize, false},
    {"Entropy", "Entropy", C::kCoverage, S::kEmbedding, A::kUnary, D::kMaximize, false, I::kEmbeddings, D::kMaximize, false},
    {"RarityScore", "Rarity Score", C::kCoverage, S::kEmbedding, A::kBinary, D::kMinimize, false, I::kEmbeddings, D::kMinimize, true},
    {"ClusterBalance", "Clustering-Based Metrics", C::kCoverage, S::kEmbedding, A::kUnary, D::kMaximize, false, I::kEmbeddings, D::kMaximize, false},

    {"NearestInvalidDatapoint", "Nearest Invalid Datapoint", C::kConstraint, S::kEmbedding, A::kBinary, D::kMinimize, false, I::kRecordTable, D::kMinimize, false},
    {"DistanceToConstraintBoundary", "Distance to Constraint Boundary", C::kConstraint, S::kEmbedding, A::kBinary, D::kMinimize, false, I::kRecordTable, D::kMinimize, false},
    {"ConstraintViolationRate", "Constraint Violation Rate", C::kConstraint, S::kEmbedding, A::kBinary, D::kMinimize, false, I::kRecordTable, D::kMinimize, false},

    {"ProportionOfRequiredFields", "Proportion of Required Fields", C::kCompleteness, S::kMetadata, A::kBinary, D::kMaximize, false, I::kRecordTable, D::kMaximize, false},
    {"MissingDataPercentage", "Missing Data Percentage", C::kCompleteness, S::kMetadata, A::kBinary, D::kMinimize, false, I::kRecordTable, D::kMinimize, false},

    {"DifferentialPrivacyScore", "Differential Privacy Score", C::kCompliance, S::kDataAttribute, A::kUnary, D::kMinimize, false, I::kDeclaration, D::kMinimize, true},
    {"KAnonymity", "K-Anonymity Level", C::kCompliance, S::kDataAttribute, A::kUnary, D::kMaximize, false, I::kRecordTable, D::kMaximize, false},
    {"LDiversity", "L-Diversity Score", C::kCompliance, S::kDataAttribute, A::kUnary, D::kMaximize, false, I::kRecordTable, D::kMaximize, false},
    {"TCloseness", "T-Closeness Level", C::kCompliance, S::kDataAttribute, A::kUnary, D::kMaximize, false, I::kRecordTable, D::kMinimize, false},

    {"DocumentationClarityScore", "Documentation Clarity Score", C::kComprehension, S::kDocumentation, A::kUnary, D::kMaximize, false, I::kManifest, D::kMaximize, false},

    {"SubgroupVariance", "Variance", C::kConsistency, S::kQualityMetrics, A::kUnary, D::kMinimize, false, I::kSubgroupResults, D::kMinimize, false},
    {"MaxMinDifference", "Maximum-Minimum Difference", C::kConsistency, S::kQualityMetrics, A::kUnary, D::kMinimize, false, I::kSubgroupResults, D::kMinimize, false},
    {"ANOVA", "Analysis of Variance", C::kConsistency, S::kQualityMetrics, A::kUnary, D::kStatSig, false, I::kSubgroupResults, D::kStatSig, false},
}};

constexpr std::array<Criterion, kCriterionCount> kCriteria{
    C::kCongruence, C::kCoverage,      C::kConstraint,  C::kCompleteness,
    C::kCompliance, C::kComprehension, C::kConsistency,
};

void check_labels(const std::optional<std::vector<std::string>>& labels, std::size_t n,
                  std::string_view what) {
  if (labels && labels->size() != n) {
    throw Error(ErrorCode::kInvalidArgument,
                std::string(what) + " labels have " + std::to_string(labels->size()) +
                    " entries, expected " + std::to_string(n));
  }
}

std::vector<std::string> distinct_sorted(const std::optional<std::vector<std::string>>& v) {
  if (!v) return {};
  std::set<std::string> s(v->begin(), v->end());
  return {s.begin(), s.end()};
}

template <typename T>
std::optional<std::vector<T>> pick(const std::optional<std::vector<T>>& v,
                                   std::span<const std::size_t> rows) {
  if (!v) return std::nullopt;
  std::vector<T> out;
  out.reserve(rows.size());
  for (auto r : rows) out.push_back((*v)[r]);
  return out;
}

}  // namespace

std::string_view to_string(Criterion c) {
  switch (c) {
    case C::kCongruence: return "Congruence";
    case C::kCoverage: return "Coverage";
    case C::kConstraint: return "Constraint";
    case C::kCompleteness: return "Completeness";
    case C::kCompliance: return "Compliance";
    case C::kComprehension: return "Comprehension";
    case C::kConsistency: return "Consistency";
  }
  return "?";
}

std::string_view to_string(Space s) {
  switch (s) {
    case S::kEmbedding: return "Embedding";
    case S::kImage: return "Image";
    case S::kMetadata: return "Metadata";
    case S::kDataAttribute: return "Data Attribute";
    case S::kDocumentation: return "Documentation";
    case S::kQualityMetrics: return "Quality Metrics";
  }
  return "?";
}

std::string_view to_string(Arity a) { return a == A::kUnary ? "Unary" : "Binary"; }

std::string_view to_string(Direction d) {
  switch (d) {
    case D::kMaximize: return "Maximize";
    case D::kMinimize: return "Minimize";
    case D::kStatSig: return "Stat. Sig.";
  }
  return "?";
}

std::optional<Criterion> parse_criterion(std::string_view name) {
  for (auto c : kCriteria) {
    if (to_string(c) == name) return c;
  }
  return std::nullopt;
}

std::span<const Criterion, kCriterionCount> all_criteria() { return kCriteria; }

std::span<const MetricDescriptor> metric_catalog() { return kCatalog; }

const MetricDescriptor* find_metric(std::string_view name) {
  for (const auto& m : kCatalog) {
    if (m.name == name) return &m;
  }
  return nullptr;
}

const MetricDescriptor& metric(std::string_view name) {
  if (const auto* m = find_metric(name)) return *m;
  throw Error(ErrorCode::kUnknownMetric, "unknown metric \"" + std::string(name) + "\"");
}

// ---------------------------------------------------------------------------

EmbeddingSet::EmbeddingSet(std::vector<std::string> ids, Eigen::MatrixXd data,
                           std::optional<std::vector<std::string>> subgroup,
                           std::optional<std::vector<std::string>> region)
    : ids_(std::move(ids)),
      data_(std::move(data)),
      subgroup_(std::move(subgroup)),
      region_(std::move(region)) {
  const auto n = static_cast<std::size_t>(data_.rows());
  if (n == 0 || data_.cols() == 0) {
    throw Error(ErrorCode::kInvalidArgument, "embedding set must have at least one row and one column");
  }
  if (ids_.size() != n) {
    throw Error(ErrorCode::kInvalidArgument, "embedding set has " + std::to_string(ids_.size()) +
                                                 " ids for " + std::to_string(n) + " rows");
  }
  std::unordered_set<std::string> seen;
  for (const auto& id : ids_) {
    if (!seen.insert(id).second) {
      throw Error(ErrorCode::kInvalidArgument, "duplicate row id \"" + id + "\"");
    }
  }
  check_labels(subgroup_, n, "subgroup");
  check_labels(region_, n, "region");
}

EmbeddingSet EmbeddingSet::from_matrix(Eigen::MatrixXd data,
                                       std::optional<std::vector<std::string>> subgroup,
                                       std::optional<std::vector<std::string>> region) {
  std::vector<std::string> ids(static_cast<std::size_t>(data.rows()));
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = std::to_string(i);
  return EmbeddingSet(std::move(ids), std::move(data), std::move(subgroup), std::move(region));
}

EmbeddingSet EmbeddingSet::select_rows(std::span<const std::size_t> rows) const {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), data_.cols());
  std::vector<std::string> ids;
  ids.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = data_.row(static_cast<Eigen::Index>(rows[i]));
    ids.push_back(ids_[rows[i]]);
  }
  return EmbeddingSet(std::move(ids), std::move(out), pick(subgroup_, rows), pick(region_, rows));
}

EmbeddingSet EmbeddingSet::with_data(Eigen::MatrixXd data) const {
  return EmbeddingSet(ids_, std::move(data), subgroup_, region_);
}

std::vector<std::string> EmbeddingSet::subgroup_labels() const { return distinct_sorted(subgroup_); }
std::vector<std::string> EmbeddingSet::region_labels() const { return distinct_sorted(region_); }

// ---------------------------------------------------------------------------

std::string_view to_string(ColumnKind k) {
  switch (k) {
    case ColumnKind::kNumeric: return "numeric";
    case ColumnKind::kCategorical: return "categorical";
    case ColumnKind::kText: return "text";
  }
  return "?";
}

std::optional<ColumnKind> parse_column_kind(std::string_view s) {
  if (s == "numeric") return ColumnKind::kNumeric;
  if (s == "categorical") return ColumnKind::kCategorical;
  if (s == "text") return ColumnKind::kText;
  return std::nullopt;
}

RecordTable::RecordTable(std::vector<Column> columns, std::vector<std::vector<Cell>> rows)
    : columns_(std::move(columns)), rows_(std::move(rows)) {
  std::unordered_set<std::string> seen;
  for (const auto& c : columns_) {
    if (!seen.insert(c.name).second) {
      throw Error(ErrorCode::kInvalidArgument, "duplicate column name \"" + c.name + "\"");
    }
  }
  for (std::size_t r = 0; r < rows_.size(); ++r) {
    if (rows_[r].size() != columns_.size()) {
      throw Error(ErrorCode::kInvalidArgument, "row " + std::to_string(r + 1) + " has " +
                                                   std::to_string(rows_[r].size()) + " cells, expected " +
                                                   std::to_string(columns_.size()));
    }
    for (std::size_t c = 0; c < columns_.size(); ++c) {
      const auto& cell = rows_[r][c];
      const bool numeric = columns_[c].kind == ColumnKind::kNumeric;
      if ((numeric && std::holds_alternative<std::string>(cell)) ||
          (!numeric && std::holds_alternative<double>(cell))) {
        throw Error(ErrorCode::kInvalidArgument, "cell at row " + std::to_string(r + 1) + " column \"" +
                                                     columns_[c].name + "\" does not match its column kind");
      }
    }
  }
}

std::optional<std::size_t> RecordTable::find_column(std::string_view name) const {
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    if (columns_[i].name == name) return i;
  }
  return std::nullopt;
}

std::size_t RecordTable::column_index(std::string_view name) const {
  if (auto i = find_column(name)) return *i;
  throw Error(ErrorCode::kInvalidArgument, "unknown column \"" + std::string(name) + "\"");
}

std::vector<std::vector<bool>> RecordTable::missing_mask() const {
  std::vector<std::vector<bool>> mask(rows_.size(), std::vector<bool>(columns_.size()));
  for (std::size_t r = 0; r < rows_.size(); ++r) {
    for (std::size_t c = 0; c < columns_.size(); ++c) mask[r][c] = missing(r, c);
  }
  return mask;
}

std::size_t RecordTable::missing_count() const {
  std::size_t n = 0;
  for (std::size_t r = 0; r < rows_.size(); ++r) {
    for (std::size_t c = 0; c < columns_.size(); ++c) n += missing(r, c) ? 1 : 0;
  }
  return n;
}

std::vector<std::string> RecordTable::domain(std::string_view column) const {
  const auto c = column_index(column);
  std::set<std::string> values;
  for (const auto& row : rows_) {
    if (const auto* s = std::get_if<std::string>(&row[c])) values.insert(*s);
  }
  return {values.begin(), values.end()};
}

RecordTable RecordTable::select_rows(std::span<const std::size_t> rows) const {
  std::vector<std::vector<Cell>> out;
  out.reserve(rows.size());
  for (auto r : rows) out.push_back(rows_[r]);
  return RecordTable(columns_, std::move(out));
}

RecordTable RecordTable::without_column(std::string_view name) const {
  const auto drop = column_index(name);
  std::vector<Column> cols;
  for (std::size_t c = 0; c < columns_.size(); ++c) {
    if (c != drop) cols.push_back(columns_[c]);
  }
  std::vector<std::vector<Cell>> out;
  out.reserve(rows_.size());
  for (const auto& row : rows_) {
    std::vector<Cell> r;
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c != drop) r.push_back(row[c]);
    }
    out.push_back(std::move(r));
  }
  return RecordTable(std::move(cols), std::move(out));
}

RecordTable RecordTable::with_cell(std::size_t row, std::size_t col, Cell value) const {
  RecordTable copy = *this;
  copy.set_cell(row, col, std::move(value));
  return copy;
}

void RecordTable::set_cell(std::size_t row, std::size_t col, Cell value) {
  rows_.at(row).at(col) = std::move(value);
}

// ---------------------------------------------------------------------------

std::string Scope::to_string() const {
  switch (kind) {
    case Kind::kGlobal: return "global";
    case Kind::kRegion: return "region:" + tag;
    case Kind::kSubgroup: return "subgroup:" + tag;
  }
  return "global";
}

Scope Scope::parse(std::string_view s) {
  if (s == "global") return global();
  if (s.starts_with("region:")) return region(std::string(s.substr(7)));
  if (s.starts_with("subgroup:")) return subgroup(std::string(s.substr(9)));
  throw Error(ErrorCode::kParse, "invalid scope \"" + std::string(s) + "\"");
}

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::kGood: return "good";
    case Verdict::kModerate: return "moderate";
    case Verdict::kLow: return "low";
    case Verdict::kNotEvaluated: return "not evaluated";
  }
  return "?";
}

std::optional<Verdict> parse_verdict(std::string_view s) {
  for (auto v : {Verdict::kGood, Verdict::kModerate, Verdict::kLow, Verdict::kNotEvaluated}) {
    if (to_string(v) == s) return v;
  }
  return std::nullopt;
}

std::string_view to_string(AggregationMode m) {
  return m == AggregationMode::kArithmetic ? "arithmetic" : "geometric";
}

std::optional<AggregationMode> parse_aggregation_mode(std::string_view s) {
  if (s == "arithmetic") return AggregationMode::kArithmetic;
  if (s == "geometric") return AggregationMode::kGeometric;
  return std::nullopt;
}

const ScopeReport& QualityReport::global() const {
  if (scopes.empty() || scopes.front().scope.kind != Scope::Kind::kGlobal) {
    throw Error(ErrorCode::kInternal, "report has no global scope");
  }
  return scopes.front();
}

const ScopeReport* QualityReport::find_scope(const Scope& s) const {
  for (const auto& sc : scopes) {
    if (sc.scope == s) return &sc;
  }
  return nullptr;
}

}  // namespace smdcard
