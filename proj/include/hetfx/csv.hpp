#pragma once

// Dataset CSV reader and writer.
//
// Columns: `y`, `t`, optional `d`, covariates `x_<name>`, adjustment
// covariates `w_<name>`. The intercept is synthesized; `x_intercept` is
// reserved. Other columns are skipped and reported back to the caller.

#include "hetfx/dataset.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace hetfx {

struct CsvLoad {
  Dataset data;
  std::vector<std::string> ignored_columns;
};

CsvLoad read_csv(std::istream& in);
CsvLoad load_csv(const std::string& path);

/// Writes `data` in the layout read_csv accepts, 17 significant digits.
void write_csv(std::ostream& out, const Dataset& data);
void write_csv(const std::string& path, const Dataset& data);

/// `value` with 17 significant digits, enough to parse back exactly.
std::string format_number(double value);

}  // namespace hetfx
