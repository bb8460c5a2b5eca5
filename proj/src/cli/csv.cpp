#include "stochecon/cli/csv.hpp"

#include <charconv>
#include <cmath>
#include <stdexcept>

namespace stochecon::cli {

std::string format_real(double v)
{
    if (std::isnan(v)) {
        return "nan";
    }
    if (std::isinf(v)) {
        return v > 0 ? "inf" : "-inf";
    }
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    if (res.ec != std::errc{}) {
        throw std::runtime_error("number formatting failed");
    }
    return std::string(buf, res.ptr);
}

std::string quote_field(const std::string& s)
{
    if (s.find_first_of(",\"\r\n") == std::string::npos) {
        return s;
    }
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') {
            out += '"';
        }
        out += c;
    }
    out += '"';
    return out;
}

namespace {

std::string render(const Cell& cell)
{
    if (const auto* s = std::get_if<std::string>(&cell)) {
        return quote_field(*s);
    }
    if (const auto* d = std::get_if<double>(&cell)) {
        return format_real(*d);
    }
    return std::to_string(std::get<std::int64_t>(cell));
}

}  // namespace

void write_csv(std::ostream& out, const CsvTable& table)
{
    for (std::size_t i = 0; i < table.header.size(); ++i) {
        out << (i ? "," : "") << quote_field(table.header[i]);
    }
    out << "\r\n";
    for (const auto& row : table.rows) {
        if (row.size() != table.header.size()) {
            throw std::logic_error("csv row width differs from header");
        }
        for (std::size_t i = 0; i < row.size(); ++i) {
            out << (i ? "," : "") << render(row[i]);
        }
        out << "\r\n";
    }
}

}  // namespace stochecon::cli
