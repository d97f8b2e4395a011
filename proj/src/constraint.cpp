#include "smdcard/constraint.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "smdcard/error.hpp"
#include "smdcard/linalg.hpp"

namespace smdcard {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void require_field(const RecordTable& table, const std::string& rule, const std::string& field,
                   bool numeric) {
  const auto c = table.find_column(field);
  if (!c) {
    throw Error(ErrorCode::kConfig, "constraint \"" + rule + "\" references unknown field \"" + field + "\"");
  }
  const bool is_numeric = table.columns()[*c].kind == ColumnKind::kNumeric;
  if (numeric != is_numeric) {
    throw Error(ErrorCode::kConfig, "constraint \"" + rule + "\" needs a " +
                                        (numeric ? "numeric" : "categorical") + " field, \"" + field +
                                        "\" is " + std::string(to_string(table.columns()[*c].kind)));
  }
}

void check_body(const RuleBody& body, const RecordTable& table, const std::string& id) {
  std::visit(Overloaded{
                 [&](const RangeRule& r) {
                   if (!r.min && !r.max) {
                     throw Error(ErrorCode::kConfig, "range constraint \"" + id + "\" has no bound");
                   }
                   if (r.min && r.max && *r.min > *r.max) {
                     throw Error(ErrorCode::kConfig, "range constraint \"" + id + "\" has min > max");
                   }
                   require_field(table, id, r.field, true);
                 },
                 [&](const AllowedSetRule& r) { require_field(table, id, r.field, false); },
                 [&](const LinearRule& r) {
                   if (r.weights.empty()) {
                     throw Error(ErrorCode::kConfig, "linear constraint \"" + id + "\" has no weights");
                   }
                   for (const auto& [f, w] : r.weights) require_field(table, id, f, true);
                 },
                 [&](const ImplicationRule& r) {
                   require_field(table, id, r.when.field, false);
                   if (!r.then) throw Error(ErrorCode::kConfig, "implication \"" + id + "\" has no consequent");
                   check_body(*r.then, table, id);
                 },
             },
             body.kind);
}

const double* numeric_cell(const RecordTable& table, std::size_t row, const std::string& field) {
  return std::get_if<double>(&table.at(row, table.column_index(field)));
}

const std::string* string_cell(const RecordTable& table, std::size_t row, const std::string& field) {
  return std::get_if<std::string>(&table.at(row, table.column_index(field)));
}

}  // namespace

int implication_depth(const RuleBody& body) {
  if (const auto* imp = std::get_if<ImplicationRule>(&body.kind)) {
    return 1 + (imp->then ? implication_depth(*imp->then) : 0);
  }
  return 0;
}

void check_rules(const ConstraintRuleSet& rules, const RecordTable& table) {
  std::set<std::string> ids;
  for (const auto& rule : rules.rules) {
    if (rule.id.empty()) throw Error(ErrorCode::kConfig, "constraint without an id");
    if (!ids.insert(rule.id).second) {
      throw Error(ErrorCode::kConfig, "duplicate constraint id \"" + rule.id + "\"");
    }
    if (implication_depth(rule.body) > kMaxImplicationDepth) {
      throw Error(ErrorCode::kConfig, "constraint \"" + rule.id + "\" nests implications deeper than " +
                                          std::to_string(kMaxImplicationDepth));
    }
    check_body(rule.body, table, rule.id);
  }
}

ConstraintRuleSet derive_range_rules(const RecordTable& real, std::span<const std::string> fields,
                                     double quantile_margin) {
  if (quantile_margin < 0 || quantile_margin >= 0.5) {
    throw Error(ErrorCode::kConfig, "quantile margin must be in [0, 0.5)");
  }
  ConstraintRuleSet set;
  set.source = RuleSource::kDerivedFromReference;
  for (const auto& field : fields) {
    const auto c = real.column_index(field);
    if (real.columns()[c].kind != ColumnKind::kNumeric) {
      throw Error(ErrorCode::kConfig, "cannot derive a range for non-numeric field \"" + field + "\"");
    }
    std::vector<double> values;
    for (std::size_t r = 0; r < real.rows(); ++r) {
      if (const auto* v = std::get_if<double>(&real.at(r, c))) values.push_back(*v);
    }
    if (values.empty()) {
      throw Error(ErrorCode::kConfig, "field \"" + field + "\" is entirely missing in the reference table");
    }
    const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
    double widen = 0.0;
    if (quantile_margin > 0) {
      widen = quantile_margin * (quantile(values, 1.0 - quantile_margin) - quantile(values, quantile_margin));
    }
    set.rules.push_back({"range:" + field, "info", RuleBody{RangeRule{field, *mn - widen, *mx + widen}}});
  }
  return set;
}

RuleOutcome evaluate_rule(const RuleBody& body, const RecordTable& table, std::size_t row) {
  using Status = RuleOutcome::Status;
  return std::visit(
      Overloaded{
          [&](const RangeRule& r) -> RuleOutcome {
            const double* v = numeric_cell(table, row, r.field);
            if (!v) return {Status::kUnevaluable, 0.0, std::nullopt};
            if (r.min && *v < *r.min) return {Status::kViolated, *r.min - *v, std::nullopt};
            if (r.max && *v > *r.max) return {Status::kViolated, *v - *r.max, std::nullopt};
            double margin = std::numeric_limits<double>::infinity();
            if (r.min) margin = std::min(margin, *v - *r.min);
            if (r.max) margin = std::min(margin, *r.max - *v);
            return {Status::kSatisfied, 0.0, margin};
          },
          [&](const AllowedSetRule& r) -> RuleOutcome {
            const std::string* v = string_cell(table, row, r.field);
            if (!v) return {Status::kUnevaluable, 0.0, std::nullopt};
            const bool ok = std::find(r.values.begin(), r.values.end(), *v) != r.values.end();
            return ok ? RuleOutcome{Status::kSatisfied, 0.0, std::nullopt}
                      : RuleOutcome{Status::kViolated, 1.0, std::nullopt};
          },
          [&](const LinearRule& r) -> RuleOutcome {
            double s = 0.0, norm2 = 0.0;
            for (const auto& [f, w] : r.weights) {
              const double* v = numeric_cell(table, row, f);
              if (!v) return {Status::kUnevaluable, 0.0, std::nullopt};
              s += w * *v;
              norm2 += w * w;
            }
            const double norm = std::sqrt(norm2);
            // signed slack: positive inside the half-space
            const double slack = (r.sense == Sense::kLessEqual ? r.bound - s : s - r.bound) / norm;
            if (slack < 0) return {Status::kViolated, -slack, std::nullopt};
            return {Status::kSatisfied, 0.0, slack};
          },
          [&](const ImplicationRule& r) -> RuleOutcome {
            const std::string* v = string_cell(table, row, r.when.field);
            if (!v) return {Status::kVacuous, 0.0, std::nullopt};
            const bool holds = std::find(r.when.values.begin(), r.when.values.end(), *v) != r.when.values.end();
            if (!holds) return {Status::kSatisfied, 0.0, std::nullopt};
            return evaluate_rule(*r.then, table, row);
          },
      },
      body.kind);
}

ConstraintEvaluation evaluate_constraints(const RecordTable& table, const ConstraintRuleSet& rules) {
  check_rules(rules, table);
  ConstraintEvaluation ev;
  const auto n = table.rows();
  ev.row_violated.assign(n, false);
  ev.row_magnitude.assign(n, 0.0);
  ev.row_margin.assign(n, std::nullopt);
  for (const auto& rule : rules.rules) ev.violations_per_rule[rule.id] = 0;

  for (std::size_t row = 0; row < n; ++row) {
    double sq = 0.0;
    std::optional<double> margin;
    for (const auto& rule : rules.rules) {
      const auto out = evaluate_rule(rule.body, table, row);
      switch (out.status) {
        case RuleOutcome::Status::kViolated:
          ev.row_violated[row] = true;
          ++ev.violations_per_rule[rule.id];
          sq += out.magnitude * out.magnitude;
          break;
        case RuleOutcome::Status::kVacuous:
          ++ev.vacuous;
          break;
        case RuleOutcome::Status::kUnevaluable:
          ++ev.unevaluable;
          break;
        case RuleOutcome::Status::kSatisfied:
          if (out.margin) margin = margin ? std::min(*margin, *out.margin) : *out.margin;
          break;
      }
    }
    // Violated rules are combined as independent displacements.
    ev.row_magnitude[row] = std::sqrt(sq);
    if (!ev.row_violated[row]) ev.row_margin[row] = margin;
  }
  return ev;
}

namespace {

Diagnostics rule_diagnostics(const ConstraintEvaluation& ev) {
  Diagnostics d;
  for (const auto& [id, count] : ev.violations_per_rule) d["violations:" + id] = static_cast<double>(count);
  d["vacuous_implications"] = static_cast<double>(ev.vacuous);
  d["unevaluable_cells"] = static_cast<double>(ev.unevaluable);
  return d;
}

}  // namespace

Measurement violation_rate(const RecordTable& table, const ConstraintRuleSet& rules) {
  if (table.rows() == 0) return Measurement::undefined("empty table");
  const auto ev = evaluate_constraints(table, rules);
  const auto violating = std::count(ev.row_violated.begin(), ev.row_violated.end(), true);
  auto diag = rule_diagnostics(ev);
  diag["violating_rows"] = static_cast<double>(violating);
  return Measurement::of(static_cast<double>(violating) / static_cast<double>(table.rows()), std::move(diag));
}

Measurement violation_magnitude(const RecordTable& table, const ConstraintRuleSet& rules) {
  if (table.rows() == 0) return Measurement::undefined("empty table");
  const auto ev = evaluate_constraints(table, rules);
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t r = 0; r < table.rows(); ++r) {
    if (ev.row_violated[r]) {
      sum += ev.row_magnitude[r];
      ++count;
    }
  }
  auto diag = rule_diagnostics(ev);
  diag["violating_rows"] = static_cast<double>(count);
  return Measurement::of(count == 0 ? 0.0 : sum / static_cast<double>(count), std::move(diag));
}

Measurement margin_to_boundary(const RecordTable& table, const ConstraintRuleSet& rules) {
  if (table.rows() == 0) return Measurement::undefined("empty table");
  const auto ev = evaluate_constraints(table, rules);
  std::vector<double> margins;
  std::size_t valid = 0;
  for (std::size_t r = 0; r < table.rows(); ++r) {
    if (ev.row_violated[r]) continue;
    ++valid;
    if (ev.row_margin[r]) margins.push_back(*ev.row_margin[r]);
  }
  Diagnostics diag{{"valid_rows", static_cast<double>(valid)},
                   {"rows_with_bounded_rule", static_cast<double>(margins.size())}};
  if (valid == 0) return Measurement::undefined("all rows invalid", std::move(diag));
  if (margins.empty()) return Measurement::undefined("no bounded rule applies to a valid row", std::move(diag));
  double sum = 0.0;
  for (double m : margins) sum += m;
  diag["margin_min"] = *std::min_element(margins.begin(), margins.end());
  diag["margin_q25"] = quantile(margins, 0.25);
  diag["margin_median"] = quantile(margins, 0.5);
  diag["margin_q75"] = quantile(margins, 0.75);
  diag["margin_max"] = *std::max_element(margins.begin(), margins.end());
  return Measurement::of(sum / static_cast<double>(margins.size()), std::move(diag));
}

}  // namespace smdcard
