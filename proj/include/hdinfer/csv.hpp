#pragma once

#include <string>
#include <vector>

#include "hdinfer/types.hpp"

namespace hdinfer {

struct CsvTable {
  std::vector<std::string> columns;
  Matrix values;
};

/// Numeric CSV with a mandatory header row.  Non-numeric cells are an error
/// naming the offending column and row.
CsvTable read_csv(const std::string& path);

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

}  // namespace hdinfer
