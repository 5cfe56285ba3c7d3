#include "itlab/results_io.hpp"

#include "itlab/errors.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>

namespace itlab {

void Table::add_row(std::vector<Cell> row)
{
    require(row.size() == columns.size(), ErrorCode::length_mismatch, "row width differs from the header");
    rows.push_back(std::move(row));
}

std::string format_double(double value)
{
    if (std::isnan(value))
        return "nan";
    if (std::isinf(value))
        return value > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    std::string s(buf);
    if (s.find_first_of(".e") == std::string::npos)
        s += ".0";
    return s;
}

namespace {

bool parse_int(const std::string& s, std::int64_t& out)
{
    if (s.empty())
        return false;
    std::size_t i = s[0] == '-' || s[0] == '+' ? 1 : 0;
    if (i == s.size())
        return false;
    for (std::size_t k = i; k < s.size(); ++k)
        if (s[k] < '0' || s[k] > '9')
            return false;
    errno = 0;
    char* end = nullptr;
    const long long v = std::strtoll(s.c_str(), &end, 10);
    if (errno == ERANGE || *end != '\0')
        return false;
    out = v;
    return true;
}

bool parse_double(const std::string& s, double& out)
{
    if (s.empty() || std::isspace(static_cast<unsigned char>(s[0])))
        return false;
    char* end = nullptr;
    out = std::strtod(s.c_str(), &end);
    return *end == '\0';
}

bool needs_quotes(const std::string& s)
{
    std::int64_t i;
    double d;
    return s.empty() || s.find_first_of(",\"\n\r") != std::string::npos || parse_int(s, i) || parse_double(s, d) ||
           std::isspace(static_cast<unsigned char>(s.front())) || std::isspace(static_cast<unsigned char>(s.back()));
}

std::string quote(const std::string& s)
{
    std::string out = "\"";
    for (char c : s) {
        if (c == '"')
            out += '"';
        out += c;
    }
    return out + "\"";
}

std::string render(const Cell& cell)
{
    struct {
        std::string operator()(std::monostate) const { return {}; }
        std::string operator()(std::int64_t v) const { return std::to_string(v); }
        std::string operator()(double v) const { return format_double(v); }
        std::string operator()(const std::string& v) const { return needs_quotes(v) ? quote(v) : v; }
    } visitor;
    return std::visit(visitor, cell);
}

std::string render_header(const std::string& name) { return needs_quotes(name) ? quote(name) : name; }

// Splits one CSV record; quoted fields keep a flag so they stay text.
struct Field {
    std::string text;
    bool quoted = false;
};

std::vector<std::vector<Field>> split_records(const std::string& text)
{
    std::vector<std::vector<Field>> records;
    std::vector<Field> current;
    Field field;
    bool in_quotes = false;
    bool any = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.text += '"';
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                field.text += c;
            }
            continue;
        }
        if (c == '"') {
            require(field.text.empty(), ErrorCode::parse_error, "quote inside an unquoted field");
            in_quotes = true;
            field.quoted = true;
            any = true;
        } else if (c == ',') {
            current.push_back(std::move(field));
            field = Field{};
            any = true;
        } else if (c == '\n') {
            current.push_back(std::move(field));
            records.push_back(std::move(current));
            current.clear();
            field = Field{};
            any = false;
        } else if (c != '\r') {
            field.text += c;
            any = true;
        }
    }
    require(!in_quotes, ErrorCode::parse_error, "unterminated quoted field");
    if (any) {
        current.push_back(std::move(field));
        records.push_back(std::move(current));
    }
    return records;
}

Cell infer(const Field& f)
{
    if (f.quoted)
        return f.text;
    if (f.text.empty())
        return std::monostate{};
    std::int64_t i;
    if (parse_int(f.text, i))
        return i;
    double d;
    if (parse_double(f.text, d))
        return d;
    return f.text;
}

} // namespace

std::string to_csv(const Table& table)
{
    std::string out;
    for (std::size_t c = 0; c < table.columns.size(); ++c) {
        if (c)
            out += ',';
        out += render_header(table.columns[c]);
    }
    out += '\n';
    for (const auto& row : table.rows) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c)
                out += ',';
            out += render(row[c]);
        }
        out += '\n';
    }
    return out;
}

Table parse_csv(const std::string& text)
{
    const auto records = split_records(text);
    require(!records.empty(), ErrorCode::parse_error, "missing header");
    Table table;
    for (const Field& f : records.front())
        table.columns.push_back(f.text);
    for (std::size_t r = 1; r < records.size(); ++r) {
        require(records[r].size() == table.columns.size(), ErrorCode::parse_error, "row width differs from the header");
        std::vector<Cell> row;
        for (const Field& f : records[r])
            row.push_back(infer(f));
        table.rows.push_back(std::move(row));
    }
    return table;
}

nlohmann::ordered_json to_json(const Table& table)
{
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& row : table.rows) {
        nlohmann::ordered_json obj = nlohmann::ordered_json::object();
        for (std::size_t c = 0; c < row.size(); ++c) {
            const Cell& cell = row[c];
            nlohmann::ordered_json& slot = obj[table.columns[c]];
            if (const auto* i = std::get_if<std::int64_t>(&cell))
                slot = *i;
            else if (const auto* d = std::get_if<double>(&cell))
                slot = *d; // non-finite values become null
            else if (const auto* s = std::get_if<std::string>(&cell))
                slot = *s;
        }
        arr.push_back(std::move(obj));
    }
    return arr;
}

void write_text_file(const std::filesystem::path& path, const std::string& content)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        fail(ErrorCode::io_error, "cannot open " + path.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out)
        fail(ErrorCode::io_error, "write failed for " + path.string());
}

void write_results(const Table& table, ResultFormat format, const std::filesystem::path& path)
{
    if (format == ResultFormat::csv)
        write_text_file(path, to_csv(table));
    else
        write_text_file(path, to_json(table).dump(2) + "\n");
}

std::string read_text_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        fail(ErrorCode::io_error, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string fnv1a_hex(const std::string& bytes)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace itlab
