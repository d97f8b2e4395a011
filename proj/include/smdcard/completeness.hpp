#pragma once

#include <span>
#include <string>

#include "smdcard/core.hpp"

namespace smdcard {

// Fraction of required fields that exist in `data` and are populated in at
// least `populated_fraction` of its rows.
Measurement required_field_proportion(const RecordTable& data, std::span<const std::string> required,
                                      double populated_fraction = 1.0);

// Masked cells over n * m.
Measurement missing_data_percentage(const RecordTable& data);

}  // namespace smdcard
