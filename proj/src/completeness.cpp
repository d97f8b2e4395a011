#include "smdcard/completeness.hpp"

#include "smdcard/error.hpp"

namespace smdcard {

Measurement required_field_proportion(const RecordTable& data, std::span<const std::string> required,
                                      double populated_fraction) {
  if (required.empty()) throw Error(ErrorCode::kConfig, "required field list is empty");
  if (populated_fraction < 0 || populated_fraction > 1) {
    throw Error(ErrorCode::kConfig, "populated fraction must be in [0, 1]");
  }
  std::size_t present = 0, absent_column = 0, underpopulated = 0;
  for (const auto& field : required) {
    const auto c = data.find_column(field);
    if (!c) {
      ++absent_column;
      continue;
    }
    std::size_t filled = 0;
    for (std::size_t r = 0; r < data.rows(); ++r) filled += data.missing(r, *c) ? 0 : 1;
    const bool ok = data.rows() > 0 &&
                    static_cast<double>(filled) >= populated_fraction * static_cast<double>(data.rows()) - 1e-9;
    if (ok) {
      ++present;
    } else {
      ++underpopulated;
    }
  }
  return Measurement::of(static_cast<double>(present) / static_cast<double>(required.size()),
                         {{"required", static_cast<double>(required.size())},
                          {"absent_columns", static_cast<double>(absent_column)},
                          {"underpopulated_columns", static_cast<double>(underpopulated)}});
}

Measurement missing_data_percentage(const RecordTable& data) {
  const double cells = static_cast<double>(data.rows() * data.cols());
  if (cells == 0) return Measurement::undefined("table has no cells");
  const auto missing = static_cast<double>(data.missing_count());
  return Measurement::of(missing / cells, {{"missing_cells", missing}, {"cells", cells}});
}

}  // namespace smdcard
