#include "smdcard/compliance.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

#include "smdcard/congruence.hpp"
#include "smdcard/error.hpp"
#include "smdcard/linalg.hpp"

namespace smdcard {

namespace {

const std::string kMissingToken = "\x01missing";

std::string token(const Cell& cell) {
  if (const auto* d = std::get_if<double>(&cell)) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", *d);
    return buf;
  }
  if (const auto* s = std::get_if<std::string>(&cell)) return *s;
  return kMissingToken;
}

std::size_t sensitive_index(const RecordTable& data, const std::string& column) {
  const auto c = data.find_column(column);
  if (!c) throw Error(ErrorCode::kConfig, "sensitive column \"" + column + "\" not found");
  return *c;
}

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  std::string out = buf;
  if (out.find_first_of(".en") == std::string::npos) out += ".0";  // 1 -> "1.0"
  return out;
}

}  // namespace

EquivalenceClasses equivalence_classes(const RecordTable& data, std::span<const std::string> quasi_identifiers) {
  if (quasi_identifiers.empty()) throw Error(ErrorCode::kConfig, "quasi-identifier list is empty");
  if (data.rows() == 0) throw Error(ErrorCode::kInvalidArgument, "empty table");
  std::vector<std::size_t> cols;
  for (const auto& q : quasi_identifiers) {
    const auto c = data.find_column(q);
    if (!c) throw Error(ErrorCode::kConfig, "quasi-identifier \"" + q + "\" not found");
    cols.push_back(*c);
  }
  EquivalenceClasses out;
  for (std::size_t r = 0; r < data.rows(); ++r) {
    std::vector<std::string> key;
    bool missing = false;
    for (auto c : cols) {
      key.push_back(token(data.at(r, c)));
      missing = missing || data.missing(r, c);
    }
    out.rows_with_missing_qi += missing ? 1 : 0;
    out.classes[std::move(key)].push_back(r);
  }
  return out;
}

Measurement k_anonymity(const RecordTable& data, std::span<const std::string> quasi_identifiers) {
  const auto eq = equivalence_classes(data, quasi_identifiers);
  std::size_t k = data.rows();
  for (const auto& [key, rows] : eq.classes) k = std::min(k, rows.size());
  return Measurement::of(static_cast<double>(k), {{"classes", static_cast<double>(eq.classes.size())},
                                                  {"rows_with_missing_qi", static_cast<double>(eq.rows_with_missing_qi)}});
}

Measurement l_diversity(const RecordTable& data, std::span<const std::string> quasi_identifiers,
                        const std::string& sensitive_column) {
  const auto s = sensitive_index(data, sensitive_column);
  if (data.columns()[s].kind == ColumnKind::kNumeric) {
    throw Error(ErrorCode::kConfig, "l-diversity needs a categorical sensitive column");
  }
  const auto eq = equivalence_classes(data, quasi_identifiers);
  std::size_t l = data.rows();
  for (const auto& [key, rows] : eq.classes) {
    std::set<std::string> distinct;
    for (auto r : rows) distinct.insert(token(data.at(r, s)));
    l = std::min(l, distinct.size());
  }
  return Measurement::of(static_cast<double>(l), {{"classes", static_cast<double>(eq.classes.size())},
                                                  {"rows_with_missing_qi", static_cast<double>(eq.rows_with_missing_qi)}});
}

Measurement t_closeness(const RecordTable& data, std::span<const std::string> quasi_identifiers,
                        const std::string& sensitive_column) {
  const auto s = sensitive_index(data, sensitive_column);
  const auto eq = equivalence_classes(data, quasi_identifiers);
  Diagnostics diag{{"classes", static_cast<double>(eq.classes.size())}};
  double worst = 0.0;

  if (data.columns()[s].kind == ColumnKind::kNumeric) {
    std::vector<double> global;
    for (std::size_t r = 0; r < data.rows(); ++r) {
      if (const auto* v = std::get_if<double>(&data.at(r, s))) global.push_back(*v);
    }
    if (global.empty()) return Measurement::undefined("sensitive column entirely missing", std::move(diag));
    const auto [mn, mx] = std::minmax_element(global.begin(), global.end());
    const double range = *mx - *mn;
    diag["ground_distance"] = 1.0;  // ordered EMD
    if (range == 0) return Measurement::of(0.0, std::move(diag));
    for (const auto& [key, rows] : eq.classes) {
      std::vector<double> cls;
      for (auto r : rows) {
        if (const auto* v = std::get_if<double>(&data.at(r, s))) cls.push_back(*v);
      }
      if (cls.empty()) continue;
      worst = std::max(worst, wasserstein1_1d(cls, global) / range);
    }
    return Measurement::of(worst, std::move(diag));
  }

  std::map<std::string, double> global;
  double total = 0.0;
  for (std::size_t r = 0; r < data.rows(); ++r) {
    if (const auto* v = std::get_if<std::string>(&data.at(r, s))) {
      global[*v] += 1.0;
      total += 1.0;
    }
  }
  diag["ground_distance"] = 0.0;  // total variation
  if (global.size() <= 1) return Measurement::of(0.0, std::move(diag));
  for (const auto& [key, rows] : eq.classes) {
    std::map<std::string, double> cls;
    double n = 0.0;
    for (auto r : rows) {
      if (const auto* v = std::get_if<std::string>(&data.at(r, s))) {
        cls[*v] += 1.0;
        n += 1.0;
      }
    }
    if (n == 0) continue;
    double tv = 0.0;
    for (const auto& [value, count] : global) {
      const auto it = cls.find(value);
      const double p = it == cls.end() ? 0.0 : it->second / n;
      tv += std::abs(p - count / total);
    }
    worst = std::max(worst, 0.5 * tv);
  }
  return Measurement::of(worst, std::move(diag));
}

Measurement leakage_rate(const Eigen::MatrixXd& real, const Eigen::MatrixXd& synthetic, std::optional<double> tau) {
  if (real.cols() != synthetic.cols()) {
    throw Error(ErrorCode::kDimensionMismatch, "real and synthetic differ in dimension");
  }
  Diagnostics diag;
  if (!tau) {
    if (real.rows() < 2) throw Error(ErrorCode::kInvalidArgument, "default leakage threshold needs real n >= 2");
    const Eigen::VectorXd nn = knn_radii(real, 1);
    tau = quantile(std::vector<double>(nn.data(), nn.data() + nn.size()), kLeakagePercentile);
    diag["tau_default"] = 1.0;
  } else {
    diag["tau_default"] = 0.0;
  }
  diag["tau"] = *tau;
  const Eigen::VectorXd nearest = nearest_distances(synthetic, real);
  std::size_t close = 0;
  for (Eigen::Index i = 0; i < nearest.size(); ++i) close += nearest[i] <= *tau ? 1 : 0;
  return Measurement::of(static_cast<double>(close) / static_cast<double>(synthetic.rows()), std::move(diag));
}

std::map<std::string, std::string> declared_privacy_record(const DeclaredPrivacy& declared) {
  std::map<std::string, std::string> out;
  out["epsilon"] = declared.epsilon ? "ε=" + format_number(*declared.epsilon) + " (declared)" : "not declared";
  out["delta"] = declared.delta ? "δ=" + format_number(*declared.delta) + " (declared)" : "not declared";
  out["anonymization_method"] =
      declared.anonymization_method.empty() ? "not declared" : declared.anonymization_method + " (declared)";
  std::string standards;
  for (const auto& s : declared.standards) standards += (standards.empty() ? "" : ", ") + s;
  out["standards"] = standards.empty() ? "not declared" : standards + " (declared)";
  out["data_format"] = declared.data_format.empty() ? "not declared" : declared.data_format + " (declared)";
  out["verification"] = "declared, not verified";
  return out;
}

}  // namespace smdcard
