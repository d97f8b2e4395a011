#pragma once

#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "smdcard/core.hpp"

namespace smdcard {

struct RangeRule {
  std::string field;
  std::optional<double> min;
  std::optional<double> max;
};

struct AllowedSetRule {
  std::string field;
  std::vector<std::string> values;
};

enum class Sense { kLessEqual, kGreaterEqual };

// sum(weight * field) <= bound  (or >=)
struct LinearRule {
  std::vector<std::pair<std::string, double>> weights;
  double bound = 0.0;
  Sense sense = Sense::kLessEqual;
};

// Categorical predicate: field value is one of `values`.
struct Predicate {
  std::string field;
  std::vector<std::string> values;
};

struct RuleBody;

struct ImplicationRule {
  Predicate when;
  std::shared_ptr<const RuleBody> then;
};

struct RuleBody {
  std::variant<RangeRule, AllowedSetRule, LinearRule, ImplicationRule> kind;
};

struct ConstraintRule {
  std::string id;
  std::string severity = "info";
  RuleBody body;
};

enum class RuleSource { kDeclared, kDerivedFromReference };

struct ConstraintRuleSet {
  std::vector<ConstraintRule> rules;
  RuleSource source = RuleSource::kDeclared;
};

inline constexpr int kMaxImplicationDepth = 2;

int implication_depth(const RuleBody& body);

// Plan-time check against a table: ids unique, every referenced field
// exists with a compatible kind, ranges bounded, nesting within limits.
void check_rules(const ConstraintRuleSet& rules, const RecordTable& table);

// One range rule "range:<field>" per field. margin q widens the observed
// [min, max] outward by q * (Q(1-q) - Q(q)) on each side; q = 0 gives the
// exact observed range.
ConstraintRuleSet derive_range_rules(const RecordTable& real, std::span<const std::string> fields,
                                     double quantile_margin = 0.0);

struct RuleOutcome {
  enum class Status { kSatisfied, kViolated, kVacuous, kUnevaluable };
  Status status = Status::kSatisfied;
  double magnitude = 0.0;        // distance to validity when violated
  std::optional<double> margin;  // distance to the boundary when satisfied and bounded
};

RuleOutcome evaluate_rule(const RuleBody& body, const RecordTable& table, std::size_t row);

struct ConstraintEvaluation {
  std::vector<bool> row_violated;
  std::vector<double> row_magnitude;                  // 0 for valid rows
  std::vector<std::optional<double>> row_margin;      // valid rows with a bounded rule
  std::map<std::string, std::size_t> violations_per_rule;
  std::size_t vacuous = 0;
  std::size_t unevaluable = 0;
};

ConstraintEvaluation evaluate_constraints(const RecordTable& table, const ConstraintRuleSet& rules);

// Fraction of rows violating at least one rule.
Measurement violation_rate(const RecordTable& table, const ConstraintRuleSet& rules);

// Mean over violating rows of the distance to validity; categorical
// violations count one unit.
Measurement violation_magnitude(const RecordTable& table, const ConstraintRuleSet& rules);

// Mean over valid rows of the distance to the nearest rule boundary.
Measurement margin_to_boundary(const RecordTable& table, const ConstraintRuleSet& rules);

}  // namespace smdcard
