#include "smdcard/harness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "smdcard/error.hpp"
#include "smdcard/ingest.hpp"
#include "smdcard/random.hpp"

namespace smdcard {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::vector<std::size_t> permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  Rng rng(seed);
  for (std::size_t i = n; i > 1; --i) std::swap(idx[i - 1], idx[rng.index(i)]);
  return idx;
}

std::size_t count_for(double fraction, std::size_t n) {
  // Guard against 0.2 * 10 landing a hair above 2.
  const double x = fraction * static_cast<double>(n);
  return std::min(n, static_cast<std::size_t>(std::ceil(x - 1e-9)));
}

// Largest-remainder split of n over the weights; zero weights get zero rows.
std::vector<std::size_t> mode_counts(std::size_t n, const std::vector<double>& weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  std::vector<std::size_t> counts(weights.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double exact = static_cast<double>(n) * weights[i] / total;
    counts[i] = static_cast<std::size_t>(std::floor(exact));
    assigned += counts[i];
    if (weights[i] > 0.0) remainders.emplace_back(exact - std::floor(exact), i);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t r = 0; assigned < n; ++r, ++assigned) ++counts[remainders[r % remainders.size()].second];
  return counts;
}

EmbeddingSet sample_mixture(std::size_t n, std::size_t d, std::span<const Mode> modes, std::uint64_t seed,
                            std::optional<std::size_t> drop) {
  if (modes.empty()) throw Error(ErrorCode::kInvalidArgument, "mixture needs at least one mode");
  std::vector<double> weights;
  for (std::size_t i = 0; i < modes.size(); ++i) {
    const auto& m = modes[i];
    if (!(m.weight > 0.0)) throw Error(ErrorCode::kInvalidArgument, "mode weights must be positive");
    if (static_cast<std::size_t>(m.mean.size()) != d) {
      throw Error(ErrorCode::kInvalidArgument, "mode " + std::to_string(i) + " mean has length " +
                                                   std::to_string(m.mean.size()) + ", expected " + std::to_string(d));
    }
    weights.push_back(drop && *drop == i ? 0.0 : m.weight);
  }
  if (drop && modes.size() < 2) throw Error(ErrorCode::kRecipe, "mode_drop needs at least two modes");
  const auto counts = mode_counts(n, weights);
  Rng rng(seed);
  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  std::vector<std::string> labels;
  labels.reserve(n);
  Eigen::Index row = 0;
  for (std::size_t i = 0; i < modes.size(); ++i) {
    for (std::size_t c = 0; c < counts[i]; ++c, ++row) {
      for (Eigen::Index j = 0; j < x.cols(); ++j) x(row, j) = modes[i].mean(j) + modes[i].scale * rng.normal();
      labels.push_back(mode_label(i));
    }
  }
  return EmbeddingSet::from_matrix(std::move(x), std::move(labels));
}

std::size_t mode_index(const MixtureSpec& spec, const std::string& target) {
  for (std::size_t i = 0; i < spec.modes.size(); ++i) {
    if (target == mode_label(i) || target == std::to_string(i)) return i;
  }
  throw Error(ErrorCode::kRecipe, "unknown mode \"" + target + "\"");
}

}  // namespace

std::string mode_label(std::size_t mode) { return "mode" + std::to_string(mode); }

EmbeddingSet make_gaussian_mixture(std::size_t n, std::size_t d, std::span<const Mode> modes, std::uint64_t seed) {
  return sample_mixture(n, d, modes, seed, std::nullopt);
}

RecordTable embeddings_to_table(const EmbeddingSet& set) {
  std::vector<Column> columns;
  for (std::size_t j = 0; j < set.dim(); ++j) columns.push_back({"f" + std::to_string(j), ColumnKind::kNumeric});
  if (set.subgroup()) columns.push_back({"subgroup", ColumnKind::kCategorical});
  std::vector<std::vector<Cell>> rows(set.size());
  for (std::size_t i = 0; i < set.size(); ++i) {
    for (std::size_t j = 0; j < set.dim(); ++j) {
      rows[i].emplace_back(set.data()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    }
    if (set.subgroup()) rows[i].emplace_back((*set.subgroup())[i]);
  }
  return RecordTable(std::move(columns), std::move(rows));
}

std::string_view to_string(DefectKind k) {
  switch (k) {
    case DefectKind::kModeDrop: return "mode_drop";
    case DefectKind::kDuplicateReal: return "duplicate_real";
    case DefectKind::kOutOfRange: return "out_of_range";
    case DefectKind::kDeleteField: return "delete_field";
    case DefectKind::kMaskCells: return "mask_cells";
    case DefectKind::kSubgroupSkew: return "subgroup_skew";
  }
  return "";
}

std::optional<DefectKind> parse_defect_kind(std::string_view s) {
  for (auto k : {DefectKind::kModeDrop, DefectKind::kDuplicateReal, DefectKind::kOutOfRange, DefectKind::kDeleteField,
                 DefectKind::kMaskCells, DefectKind::kSubgroupSkew}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

EmbeddingDefect inject_defect(const MixtureSpec& spec, const EmbeddingSet& real, const Defect& defect,
                              std::uint64_t seed) {
  const auto baseline_seed = derive_seed(seed, "defect/baseline", 0);
  EmbeddingDefect out{sample_mixture(spec.n, spec.d, spec.modes, baseline_seed, std::nullopt), {}, {}};
  json& desc = out.descriptor;
  desc["kind"] = std::string(to_string(defect.kind));
  const auto n = out.baseline.size();

  switch (defect.kind) {
    case DefectKind::kModeDrop: {
      const auto mode = mode_index(spec, defect.target);
      out.defective = sample_mixture(spec.n, spec.d, spec.modes, baseline_seed, mode);
      desc["mode"] = mode_label(mode);
      desc["rows_of_mode"] = 0;
      desc["expected"] = {{"Recall", "decreases"}, {"Coverage", "decreases"}};
      return out;
    }
    case DefectKind::kDuplicateReal: {
      if (!(defect.fraction > 0.0 && defect.fraction <= 1.0)) {
        throw Error(ErrorCode::kRecipe, "duplicate_real fraction must be in (0, 1]");
      }
      if (real.dim() != spec.d) throw Error(ErrorCode::kRecipe, "duplicate_real: real set dimension differs");
      const auto count = std::min(count_for(defect.fraction, n), real.size());
      const auto targets = permutation(n, derive_seed(seed, "defect/duplicate/targets", 0));
      const auto sources = permutation(real.size(), derive_seed(seed, "defect/duplicate/sources", 0));
      Eigen::MatrixXd x = out.baseline.data();
      auto labels = *out.baseline.subgroup();
      std::vector<std::size_t> rows;
      for (std::size_t c = 0; c < count; ++c) {
        x.row(static_cast<Eigen::Index>(targets[c])) = real.data().row(static_cast<Eigen::Index>(sources[c]));
        if (real.subgroup()) labels[targets[c]] = (*real.subgroup())[sources[c]];
        rows.push_back(targets[c]);
      }
      std::sort(rows.begin(), rows.end());
      out.defective = EmbeddingSet::from_matrix(std::move(x), std::move(labels));
      desc["fraction"] = defect.fraction;
      desc["copied_rows"] = rows;
      desc["expected"] = {{"DifferentialPrivacyScore", {{"at_least", static_cast<double>(count) / static_cast<double>(n)}}}};
      return out;
    }
    case DefectKind::kSubgroupSkew: {
      const auto mode = mode_index(spec, defect.target);
      const auto label = mode_label(mode);
      Eigen::MatrixXd x = out.baseline.data();
      Rng rng(derive_seed(seed, "defect/skew", 0));
      std::size_t affected = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if ((*out.baseline.subgroup())[i] != label) continue;
        ++affected;
        for (Eigen::Index j = 0; j < x.cols(); ++j) x(static_cast<Eigen::Index>(i), j) += defect.noise_scale * rng.normal();
      }
      out.defective = EmbeddingSet::from_matrix(std::move(x), *out.baseline.subgroup());
      desc["subgroup"] = label;
      desc["noise_scale"] = defect.noise_scale;
      desc["affected_rows"] = affected;
      desc["expected"] = {{"MaxMinDifference", "increases"}};
      return out;
    }
    default:
      throw Error(ErrorCode::kRecipe, std::string(to_string(defect.kind)) + " applies to record tables");
  }
}

TableDefect inject_defect(const RecordTable& real, const Defect& defect, std::uint64_t seed) {
  TableDefect out{real, real, {}};
  json& desc = out.descriptor;
  desc["kind"] = std::string(to_string(defect.kind));
  const auto n = real.rows();

  switch (defect.kind) {
    case DefectKind::kOutOfRange: {
      const auto col = real.find_column(defect.target);
      if (!col) throw Error(ErrorCode::kRecipe, "unknown field \"" + defect.target + "\"");
      if (real.columns()[*col].kind != ColumnKind::kNumeric) {
        throw Error(ErrorCode::kRecipe, "out_of_range field \"" + defect.target + "\" is not numeric");
      }
      if (!(defect.fraction > 0.0 && defect.fraction <= 1.0) || !(defect.magnitude > 0.0)) {
        throw Error(ErrorCode::kRecipe, "out_of_range needs fraction in (0, 1] and positive magnitude");
      }
      double hi = -std::numeric_limits<double>::infinity();
      for (std::size_t r = 0; r < n; ++r) {
        if (!real.missing(r, *col)) hi = std::max(hi, std::get<double>(real.at(r, *col)));
      }
      if (!std::isfinite(hi)) throw Error(ErrorCode::kRecipe, "out_of_range field has no values");
      const auto count = count_for(defect.fraction, n);
      const auto order = permutation(n, derive_seed(seed, "defect/out_of_range", 0));
      std::vector<std::size_t> rows(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(count));
      std::sort(rows.begin(), rows.end());
      for (auto r : rows) out.defective.set_cell(r, *col, hi + defect.magnitude);
      desc["field"] = defect.target;
      desc["fraction"] = defect.fraction;
      desc["value"] = hi + defect.magnitude;
      desc["violating_rows"] = rows;
      desc["expected"] = {{"ConstraintViolationRate", {{"at_least", static_cast<double>(count) / static_cast<double>(n)}}},
                          {"DistanceToConstraintBoundary", "increases"}};
      return out;
    }
    case DefectKind::kDeleteField: {
      if (!real.find_column(defect.target)) throw Error(ErrorCode::kRecipe, "unknown field \"" + defect.target + "\"");
      out.defective = real.without_column(defect.target);
      desc["field"] = defect.target;
      desc["expected"] = {{"ProportionOfRequiredFields", "decreases"}};
      return out;
    }
    case DefectKind::kMaskCells: {
      if (!(defect.fraction >= 0.0 && defect.fraction <= 1.0)) {
        throw Error(ErrorCode::kRecipe, "mask_cells fraction must be in [0, 1]");
      }
      std::vector<std::pair<std::size_t, std::size_t>> present;
      for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < real.cols(); ++c) {
          if (!real.missing(r, c)) present.emplace_back(r, c);
        }
      }
      const double cells = static_cast<double>(n * real.cols());
      const auto count = std::min(present.size(), static_cast<std::size_t>(std::llround(defect.fraction * cells)));
      const auto order = permutation(present.size(), derive_seed(seed, "defect/mask", 0));
      for (std::size_t k = 0; k < count; ++k) {
        const auto [r, c] = present[order[k]];
        out.defective.set_cell(r, c, std::monostate{});
      }
      desc["fraction"] = defect.fraction;
      desc["masked_cells"] = count;
      desc["expected"] = {{"MissingDataPercentage",
                           {{"equals", static_cast<double>(real.missing_count() + count) / cells},
                            {"tolerance", 1.0 / cells}}}};
      return out;
    }
    default:
      throw Error(ErrorCode::kRecipe, std::string(to_string(defect.kind)) + " applies to embedding sets");
  }
}

// ---------------------------------------------------------------------------
// Recipes
// ---------------------------------------------------------------------------

namespace {

void only_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!obj.is_object()) throw Error(ErrorCode::kRecipe, where + " must be an object");
  for (const auto& [key, value] : obj.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
      throw Error(ErrorCode::kRecipe, where + ": unknown key \"" + key + "\"");
    }
  }
}

template <class T>
T get_or(const json& obj, const char* key, T fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::kRecipe, where + "." + key + " has the wrong type");
  }
}

MixtureSpec parse_fixture(const json& doc) {
  only_keys(doc, {"n", "d", "seed", "modes"}, "fixture");
  MixtureSpec spec;
  spec.n = get_or<std::size_t>(doc, "n", 200, "fixture");
  spec.d = get_or<std::size_t>(doc, "d", 2, "fixture");
  spec.seed = get_or<std::uint64_t>(doc, "seed", 0, "fixture");
  if (spec.n < 2 || spec.d < 1) throw Error(ErrorCode::kRecipe, "fixture needs n >= 2 and d >= 1");
  if (!doc.contains("modes")) {
    // Two well-separated modes along the first axis.
    for (double offset : {-5.0, 5.0}) {
      Mode m{Eigen::VectorXd::Zero(static_cast<Eigen::Index>(spec.d)), 1.0, 1.0};
      m.mean(0) = offset;
      spec.modes.push_back(m);
    }
    return spec;
  }
  if (!doc["modes"].is_array() || doc["modes"].empty()) throw Error(ErrorCode::kRecipe, "fixture.modes must be a non-empty list");
  for (std::size_t i = 0; i < doc["modes"].size(); ++i) {
    const auto& jm = doc["modes"][i];
    const auto where = "fixture.modes[" + std::to_string(i) + "]";
    only_keys(jm, {"mean", "scale", "weight"}, where);
    Mode m{Eigen::VectorXd::Zero(static_cast<Eigen::Index>(spec.d)), get_or<double>(jm, "scale", 1.0, where),
           get_or<double>(jm, "weight", 1.0, where)};
    if (jm.contains("mean")) {
      const auto& mean = jm["mean"];
      if (mean.is_number()) {
        m.mean.setConstant(mean.get<double>());
      } else if (mean.is_array() && mean.size() == spec.d) {
        for (std::size_t j = 0; j < spec.d; ++j) m.mean(static_cast<Eigen::Index>(j)) = mean[j].get<double>();
      } else {
        throw Error(ErrorCode::kRecipe, where + ".mean must be a number or a list of length d");
      }
    }
    if (!(m.weight > 0.0) || !(m.scale >= 0.0)) throw Error(ErrorCode::kRecipe, where + ": weight must be positive");
    spec.modes.push_back(m);
  }
  return spec;
}

Defect parse_defect(const json& doc, std::size_t index) {
  const auto where = "defects[" + std::to_string(index) + "]";
  if (!doc.is_object() || !doc.contains("kind") || !doc["kind"].is_string()) {
    throw Error(ErrorCode::kRecipe, where + " needs a \"kind\"");
  }
  const auto name = doc["kind"].get<std::string>();
  const auto kind = parse_defect_kind(name);
  if (!kind) {
    throw Error(ErrorCode::kRecipe, where + ": unknown defect kind \"" + name +
                                        "\" (expected mode_drop, duplicate_real, out_of_range, delete_field, "
                                        "mask_cells or subgroup_skew)");
  }
  Defect d;
  d.kind = *kind;
  switch (*kind) {
    case DefectKind::kModeDrop:
      only_keys(doc, {"kind", "mode"}, where);
      d.target = get_or<std::string>(doc, "mode", "mode0", where);
      break;
    case DefectKind::kDuplicateReal:
      only_keys(doc, {"kind", "fraction"}, where);
      d.fraction = get_or<double>(doc, "fraction", 0.5, where);
      break;
    case DefectKind::kOutOfRange:
      only_keys(doc, {"kind", "field", "fraction", "magnitude"}, where);
      d.target = get_or<std::string>(doc, "field", "f0", where);
      d.fraction = get_or<double>(doc, "fraction", 0.2, where);
      d.magnitude = get_or<double>(doc, "magnitude", 1.0, where);
      break;
    case DefectKind::kDeleteField:
      only_keys(doc, {"kind", "field"}, where);
      d.target = get_or<std::string>(doc, "field", "f0", where);
      break;
    case DefectKind::kMaskCells:
      only_keys(doc, {"kind", "fraction"}, where);
      d.fraction = get_or<double>(doc, "fraction", 0.1, where);
      break;
    case DefectKind::kSubgroupSkew:
      only_keys(doc, {"kind", "subgroup", "noise_scale"}, where);
      d.target = get_or<std::string>(doc, "subgroup", "mode0", where);
      d.noise_scale = get_or<double>(doc, "noise_scale", 1.0, where);
      break;
  }
  return d;
}

bool is_table_kind(DefectKind k) {
  return k == DefectKind::kOutOfRange || k == DefectKind::kDeleteField || k == DefectKind::kMaskCells;
}

}  // namespace

std::vector<std::string> run_fixture_recipe(const json& recipe, const fs::path& out_dir) {
  only_keys(recipe, {"fixture", "defects"}, "recipe");
  const auto spec = parse_fixture(recipe.value("fixture", json::object()));
  if (!recipe.contains("defects") || !recipe["defects"].is_array()) {
    throw Error(ErrorCode::kRecipe, "recipe needs a \"defects\" list");
  }
  // Parse everything before writing anything.
  std::vector<Defect> defects;
  for (std::size_t i = 0; i < recipe["defects"].size(); ++i) defects.push_back(parse_defect(recipe["defects"][i], i));

  const auto real = make_gaussian_mixture(spec.n, spec.d, spec.modes, derive_seed(spec.seed, "fixture/real", 0));
  const auto real_table = embeddings_to_table(real);

  struct Output {
    std::string name;
    std::string content;
  };
  std::vector<Output> outputs;
  outputs.push_back({"real.csv", embeddings_csv(real)});
  outputs.push_back({"real_table.csv", record_table_csv(real_table)});

  json effects = json::array();
  for (std::size_t i = 0; i < defects.size(); ++i) {
    const auto& d = defects[i];
    const auto stem = "defect" + std::to_string(i) + "_" + std::string(to_string(d.kind));
    const auto seed = derive_seed(spec.seed, "fixture/defect", i);
    json desc;
    if (is_table_kind(d.kind)) {
      auto res = inject_defect(real_table, d, seed);
      outputs.push_back({stem + "_baseline.csv", record_table_csv(res.baseline)});
      outputs.push_back({stem + "_synthetic.csv", record_table_csv(res.defective)});
      desc = std::move(res.descriptor);
    } else {
      auto res = inject_defect(spec, real, d, seed);
      outputs.push_back({stem + "_baseline.csv", embeddings_csv(res.baseline)});
      outputs.push_back({stem + "_synthetic.csv", embeddings_csv(res.defective)});
      desc = std::move(res.descriptor);
    }
    desc["baseline"] = stem + "_baseline.csv";
    desc["synthetic"] = stem + "_synthetic.csv";
    desc["real"] = is_table_kind(d.kind) ? "real_table.csv" : "real.csv";
    outputs.push_back({stem + "_descriptor.json", dump_canonical_json(desc)});
    effects.push_back(desc);
  }
  json manifest{{"format", "smd-fixtures/1"},
                {"fixture", {{"n", spec.n}, {"d", spec.d}, {"seed", spec.seed}, {"modes", spec.modes.size()}}},
                {"defects", effects}};
  outputs.push_back({"expected_effects.json", dump_canonical_json(manifest)});

  fs::create_directories(out_dir);
  std::vector<std::string> names;
  for (const auto& o : outputs) {
    write_file_atomic(out_dir / o.name, o.content);
    names.push_back(o.name);
  }
  return names;
}

}  // namespace smdcard
