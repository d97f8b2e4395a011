#pragma once

// Directional sensitivity: each injected defect must move its metric the
// expected way relative to the clean baseline. Shared by the unit tests and
// the acceptance binary.

#include <string>
#include <vector>

#include "smdcard/compliance.hpp"
#include "smdcard/completeness.hpp"
#include "smdcard/constraint.hpp"
#include "smdcard/coverage.hpp"
#include "smdcard/evaluate.hpp"
#include "smdcard/harness.hpp"

namespace directional {

struct Check {
  std::string name;
  double baseline;
  double defective;
  bool pass;
};

inline smdcard::MixtureSpec three_modes(std::uint64_t seed) {
  smdcard::MixtureSpec spec;
  spec.n = 300;
  spec.d = 2;
  spec.seed = seed;
  for (double x : {-6.0, 0.0, 6.0}) {
    Eigen::VectorXd mean(2);
    mean << x, 0.0;
    spec.modes.push_back({mean, 1.0, 1.0});
  }
  return spec;
}

inline double max_min_difference(const smdcard::EmbeddingSet& real, const smdcard::EmbeddingSet& synthetic) {
  using namespace smdcard;
  const auto cfg = parse_eval_config({{"metrics",
                                       {{"Precision", nlohmann::json::object()},
                                        {"Recall", nlohmann::json::object()},
                                        {"Coverage", nlohmann::json::object()},
                                        {"MaxMinDifference", nlohmann::json::object()}}},
                                      {"seed", 11},
                                      {"threads", 2}},
                                     ".");
  EvalInputs in;
  in.real = real;
  in.synthetic = synthetic;
  const auto report = evaluate(in, cfg);
  for (const auto& m : report.global().metrics) {
    if (m.descriptor->name == "MaxMinDifference") return m.value.is_finite() ? m.value.value : -1.0;
  }
  return -1.0;
}

inline std::vector<Check> run(std::uint64_t seed) {
  using namespace smdcard;
  std::vector<Check> out;
  const auto spec = three_modes(seed);
  const auto real = make_gaussian_mixture(spec.n, spec.d, spec.modes, seed);
  const double n = static_cast<double>(spec.n);

  {
    const auto d = inject_defect(spec, real, {DefectKind::kModeDrop, "mode2", 0.0}, seed);
    const double rb = manifold_recall(real.data(), d.baseline.data()).value.value;
    const double rd = manifold_recall(real.data(), d.defective.data()).value.value;
    out.push_back({"mode_drop lowers Recall", rb, rd, rd < rb});
    const double cb = manifold_coverage(real.data(), d.baseline.data()).value.value;
    const double cd = manifold_coverage(real.data(), d.defective.data()).value.value;
    out.push_back({"mode_drop lowers Coverage", cb, cd, cd < cb});
  }
  for (double f : {0.1, 0.3}) {
    const auto d = inject_defect(spec, real, {DefectKind::kDuplicateReal, "", f}, seed);
    const double lb = leakage_rate(real.data(), d.baseline.data()).value.value;
    const double ld = leakage_rate(real.data(), d.defective.data()).value.value;
    out.push_back({"duplicate_real(" + std::to_string(f) + ") leakage >= f", lb, ld, ld >= f && ld > lb});
  }

  const auto table = embeddings_to_table(real);
  const std::vector<std::string> fields = {"f0", "f1"};
  const auto rules = derive_range_rules(table, fields);
  for (double f : {0.05, 0.2}) {
    const auto d = inject_defect(table, {DefectKind::kOutOfRange, "f1", f, 2.0}, seed);
    const double vb = violation_rate(d.baseline, rules).value.value;
    const double vd = violation_rate(d.defective, rules).value.value;
    out.push_back({"out_of_range(" + std::to_string(f) + ") violation >= f - 1/n", vb, vd,
                   vd >= f - 1.0 / n && vd > vb});
  }
  for (double f : {0.1, 0.25}) {
    const auto d = inject_defect(table, {DefectKind::kMaskCells, "", f}, seed);
    const double mb = missing_data_percentage(d.baseline).value.value;
    const double md = missing_data_percentage(d.defective).value.value;
    const double cells = n * static_cast<double>(table.cols());
    out.push_back({"mask_cells(" + std::to_string(f) + ") missing within 1/(n*m)", mb, md,
                   std::abs(md - f) <= 1.0 / cells + 1e-12 && md > mb});
  }
  {
    const auto d = inject_defect(spec, real, {DefectKind::kSubgroupSkew, "mode1", 0.0, 1.0, 3.0}, seed);
    const double sb = max_min_difference(real, d.baseline);
    const double sd = max_min_difference(real, d.defective);
    out.push_back({"subgroup_skew raises MaxMinDifference", sb, sd, sb >= 0 && sd > sb});
  }
  return out;
}

}  // namespace directional
