#include <gtest/gtest.h>

#include "directional.hpp"
#include "smdcard/error.hpp"
#include "smdcard/ingest.hpp"
#include "util.hpp"

using namespace smdcard;
using nlohmann::json;

TEST(Mixture, CountsLabelsAndDeterminism) {
  const auto spec = directional::three_modes(4);
  std::vector<Mode> modes = spec.modes;
  modes[0].weight = 2.0;
  const auto a = make_gaussian_mixture(101, 2, modes, 4);
  const auto b = make_gaussian_mixture(101, 2, modes, 4);
  EXPECT_EQ(a.data(), b.data());
  ASSERT_TRUE(a.subgroup());
  std::map<std::string, int> counts;
  for (const auto& l : *a.subgroup()) ++counts[l];
  EXPECT_EQ(counts["mode0"] + counts["mode1"] + counts["mode2"], 101);
  EXPECT_NEAR(counts["mode0"], 50.5, 1.0);
  EXPECT_NE(make_gaussian_mixture(101, 2, modes, 5).data(), a.data());
}

TEST(Mixture, TableConversionKeepsValues) {
  const auto spec = directional::three_modes(1);
  const auto set = make_gaussian_mixture(30, 2, spec.modes, 1);
  const auto t = embeddings_to_table(set);
  EXPECT_EQ(t.cols(), 3u);
  EXPECT_EQ(std::get<double>(t.at(7, 1)), set.data()(7, 1));
  EXPECT_EQ(std::get<std::string>(t.at(0, 2)), "mode0");
}

TEST(Defects, DirectionalSensitivity) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    for (const auto& c : directional::run(seed)) {
      EXPECT_TRUE(c.pass) << "seed " << seed << ": " << c.name << " baseline=" << c.baseline
                          << " defective=" << c.defective;
    }
  }
}

TEST(Defects, DescriptorsRecordWhatChanged) {
  const auto spec = directional::three_modes(2);
  const auto real = make_gaussian_mixture(spec.n, spec.d, spec.modes, 2);
  const auto dup = inject_defect(spec, real, {DefectKind::kDuplicateReal, "", 0.1}, 2);
  EXPECT_EQ(dup.descriptor["copied_rows"].size(), 30u);
  const auto table = embeddings_to_table(real);
  const auto del = inject_defect(table, {DefectKind::kDeleteField, "f0", 0}, 2);
  EXPECT_FALSE(del.defective.find_column("f0"));
  EXPECT_THROW(inject_defect(table, {DefectKind::kDeleteField, "ghost", 0}, 2), Error);
  EXPECT_THROW(inject_defect(spec, real, {DefectKind::kModeDrop, "mode9", 0}, 2), Error);
  EXPECT_THROW(inject_defect(table, {DefectKind::kModeDrop, "mode0", 0}, 2), Error);
}

TEST(Defects, KindNamesRoundTrip) {
  for (auto k : {DefectKind::kModeDrop, DefectKind::kDuplicateReal, DefectKind::kOutOfRange, DefectKind::kDeleteField,
                 DefectKind::kMaskCells, DefectKind::kSubgroupSkew}) {
    EXPECT_EQ(parse_defect_kind(to_string(k)), k);
  }
  EXPECT_FALSE(parse_defect_kind("explode"));
}

TEST(Recipe, WritesEverythingOrNothing) {
  testutil::TempDir dir;
  const json recipe = {{"fixture", {{"n", 60}, {"d", 2}, {"seed", 3}}},
                       {"defects", {{{"kind", "mode_drop"}}, {{"kind", "mask_cells"}, {"fraction", 0.1}}}}};
  const auto files = run_fixture_recipe(recipe, dir / "fx");
  for (const auto& f : files) EXPECT_TRUE(std::filesystem::exists(dir / "fx" / f)) << f;
  const auto expected = parse_json_file(dir / "fx" / "expected_effects.json");
  EXPECT_EQ(expected["defects"].size(), 2u);
  EXPECT_EQ(read_embeddings(dir / "fx" / "real.csv", "id", "subgroup").size(), 60u);

  json bad = recipe;
  bad["defects"].push_back({{"kind", "explode"}});
  try {
    run_fixture_recipe(bad, dir / "bad");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kRecipe);
  }
  EXPECT_FALSE(std::filesystem::exists(dir / "bad" / "real.csv"));
}

TEST(Recipe, SameRecipeSameBytes) {
  testutil::TempDir a, b;
  const json recipe = {{"fixture", {{"seed", 9}}}, {"defects", {{{"kind", "duplicate_real"}, {"fraction", 0.2}}}}};
  const auto files = run_fixture_recipe(recipe, a.path());
  run_fixture_recipe(recipe, b.path());
  for (const auto& f : files) EXPECT_EQ(testutil::read_text(a / f), testutil::read_text(b / f)) << f;
}
