#pragma once

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

namespace itlab {

/// Empty, integer, real, or text cell.
using Cell = std::variant<std::monostate, std::int64_t, double, std::string>;

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;

    explicit Table(std::vector<std::string> cols = {}) : columns(std::move(cols)) {}
    /// Throws length_mismatch when the row width differs from the header.
    void add_row(std::vector<Cell> row);
    bool operator==(const Table&) const = default;
};

/// 17 significant digits; ".0" appended when the result would read as an
/// integer. Non-finite values print as nan, inf, -inf.
std::string format_double(double value);

/// Header plus rows, LF line endings. Text that would parse as a number (or
/// is empty, or holds separators/quotes) is quoted.
std::string to_csv(const Table& table);
Table parse_csv(const std::string& text);

/// Array of objects in column order.
nlohmann::ordered_json to_json(const Table& table);

enum class ResultFormat { csv, json };

/// Throws io_error when the file cannot be written.
void write_text_file(const std::filesystem::path& path, const std::string& content);
void write_results(const Table& table, ResultFormat format, const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);

/// FNV-1a 64-bit, rendered as 16 hex digits.
std::string fnv1a_hex(const std::string& bytes);

} // namespace itlab
