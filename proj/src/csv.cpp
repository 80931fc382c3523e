#include "qm/csv.hpp"

#include <cstdlib>

namespace qm {

namespace {

std::string trim(std::string_view field) {
    std::size_t begin = field.find_first_not_of(" \t\r");
    if (begin == std::string_view::npos) {
        return "";
    }
    std::size_t end = field.find_last_not_of(" \t\r");
    return std::string(field.substr(begin, end - begin + 1));
}

std::vector<std::string> split_row(std::string_view line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        std::size_t comma = line.find(',', start);
        fields.push_back(trim(line.substr(start, comma - start)));
        if (comma == std::string_view::npos) {
            break;
        }
        start = comma + 1;
    }
    return fields;
}

} // namespace

int CsvTable::column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) {
            return static_cast<int>(i);
        }
    }
    return -1;
}

CsvTable parse_csv(std::string_view text) {
    CsvTable table;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t eol = text.find('\n', pos);
        std::string_view line = text.substr(pos, eol == std::string_view::npos ? eol : eol - pos);
        pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
        ++line_no;

        std::string trimmed = trim(line);
        if (trimmed.empty() || trimmed.front() == '#') {
            continue;
        }
        std::vector<std::string> fields = split_row(line);
        if (table.header.empty()) {
            table.header = std::move(fields);
        } else {
            if (fields.size() != table.header.size()) {
                throw ParseError("csv-shape",
                                 "row has " + std::to_string(fields.size()) + " fields, header has " +
                                     std::to_string(table.header.size()),
                                 line_no, 1);
            }
            table.rows.push_back(std::move(fields));
        }
    }
    if (table.header.empty()) {
        throw ParseError("csv-shape", "input has no header row");
    }
    return table;
}

double parse_csv_number(const std::string& field, int line) {
    char* end = nullptr;
    const double value = std::strtod(field.c_str(), &end);
    if (field.empty() || end != field.c_str() + field.size()) {
        throw ParseError("csv-number", "'" + field + "' is not a number", line, 1);
    }
    return value;
}

} // namespace qm
