#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

namespace stochecon::cli {

using Cell = std::variant<std::string, double, std::int64_t>;

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<Cell>> rows;
};

/// Shortest decimal that round-trips; "inf", "-inf", "nan" for non-finite.
std::string format_real(double v);

/// RFC 4180 quoting when the field holds a comma, quote or line break.
std::string quote_field(const std::string& s);

void write_csv(std::ostream& out, const CsvTable& table);

}  // namespace stochecon::cli
