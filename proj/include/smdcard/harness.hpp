#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "smdcard/core.hpp"

namespace smdcard {

// One isotropic Gaussian component. Weights are normalized across modes.
struct Mode {
  Eigen::VectorXd mean;
  double scale = 1.0;
  double weight = 1.0;
};

// Rows are ordered by mode; mode i rows carry subgroup label "mode<i>".
// Per-mode counts use largest remainders so they always sum to n.
EmbeddingSet make_gaussian_mixture(std::size_t n, std::size_t d, std::span<const Mode> modes, std::uint64_t seed);

std::string mode_label(std::size_t mode);

// Numeric columns f0..f{d-1} plus "subgroup" when the set has labels.
RecordTable embeddings_to_table(const EmbeddingSet& set);

struct MixtureSpec {
  std::size_t n = 200;
  std::size_t d = 2;
  std::vector<Mode> modes;
  std::uint64_t seed = 0;
};

enum class DefectKind { kModeDrop, kDuplicateReal, kOutOfRange, kDeleteField, kMaskCells, kSubgroupSkew };
std::string_view to_string(DefectKind k);
std::optional<DefectKind> parse_defect_kind(std::string_view s);

struct Defect {
  DefectKind kind = DefectKind::kModeDrop;
  std::string target;  // mode or subgroup label, or field name
  double fraction = 0.0;
  double magnitude = 1.0;
  double noise_scale = 1.0;
};

// Embedding defects: the baseline is a fresh draw from the same mixture as
// `real`; the defective set is that draw with the defect applied.
struct EmbeddingDefect {
  EmbeddingSet baseline;
  EmbeddingSet defective;
  nlohmann::json descriptor;
};

// Table defects: the baseline is the real table itself.
struct TableDefect {
  RecordTable baseline;
  RecordTable defective;
  nlohmann::json descriptor;
};

// mode_drop, duplicate_real, subgroup_skew. Throws kRecipe for an unknown
// target or a table-only kind.
EmbeddingDefect inject_defect(const MixtureSpec& spec, const EmbeddingSet& real, const Defect& defect,
                              std::uint64_t seed);

// out_of_range, delete_field, mask_cells.
TableDefect inject_defect(const RecordTable& real, const Defect& defect, std::uint64_t seed);

// Recipe: {"fixture": {"n", "d", "seed", "modes": [{"mean", "scale",
// "weight"}]}, "defects": [{"kind", ...}]}. Writes real.csv, real_table.csv,
// per-defect baseline/synthetic/descriptor files and expected_effects.json.
// Returns the written file names in order.
std::vector<std::string> run_fixture_recipe(const nlohmann::json& recipe, const std::filesystem::path& out_dir);

}  // namespace smdcard
