#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "qm/error.hpp"

namespace qm {

// Minimal comma-separated table: one header row, no quoting, `#` comment
// lines and blank lines skipped, CR/LF tolerated. Fields are trimmed.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    int column(std::string_view name) const;  // -1 when absent
};

CsvTable parse_csv(std::string_view text);

double parse_csv_number(const std::string& field, int line);

} // namespace qm
