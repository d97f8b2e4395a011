#pragma once

#include <Eigen/Dense>

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "smdcard/core.hpp"

namespace smdcard {

// Rows grouped by their joint quasi-identifier values. Missing QI values
// form their own token, so such rows group only with each other.
struct EquivalenceClasses {
  std::map<std::vector<std::string>, std::vector<std::size_t>> classes;
  std::size_t rows_with_missing_qi = 0;
};

EquivalenceClasses equivalence_classes(const RecordTable& data, std::span<const std::string> quasi_identifiers);

// Smallest equivalence-class size.
Measurement k_anonymity(const RecordTable& data, std::span<const std::string> quasi_identifiers);

// Smallest count of distinct sensitive values within a class.
Measurement l_diversity(const RecordTable& data, std::span<const std::string> quasi_identifiers,
                        const std::string& sensitive_column);

// Largest distance between a class's sensitive distribution and the global
// one: total variation for categorical columns, range-normalized 1-D
// earth mover's distance for numeric ones.
Measurement t_closeness(const RecordTable& data, std::span<const std::string> quasi_identifiers,
                        const std::string& sensitive_column);

inline constexpr double kLeakagePercentile = 0.01;

// Fraction of synthetic rows whose nearest real row lies within tau. The
// default tau is the 1st percentile of real nearest-neighbor distances.
Measurement leakage_rate(const Eigen::MatrixXd& real, const Eigen::MatrixXd& synthetic,
                         std::optional<double> tau = std::nullopt);

// Generator-declared privacy parameters. Never verified against the data.
struct DeclaredPrivacy {
  std::optional<double> epsilon;
  std::optional<double> delta;
  std::string anonymization_method;
  std::vector<std::string> standards;
  std::string data_format;
};

// Card-ready entries; every key is always present.
std::map<std::string, std::string> declared_privacy_record(const DeclaredPrivacy& declared);

}  // namespace smdcard
