#ifndef AOI_HLF_CLI_IO_HPP
#define AOI_HLF_CLI_IO_HPP

// Result tables (CSV / JSON) and the latency sample exchange format.

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "aoi_hlf/cli/config.hpp"
#include "aoi_hlf/errors.hpp"
#include "aoi_hlf/latency.hpp"

namespace aoi_hlf::cli {

// Empty cell | number | text.
using Cell = std::variant<std::monostate, double, std::string>;

inline std::string shortest(double x)
{
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, end);
}

/// Rounds to 12 significant digits, except that a value which would round to
/// exactly 0 or 1 keeps full precision.
inline double canonical(double x)
{
    if (!std::isfinite(x) || x == 0)
        return x;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    const double r = std::strtod(buf, nullptr);
    if ((r == 1.0 || r == 0.0 || r == -1.0) && r != x)
        return x;
    return r;
}

inline std::string format_cell(const Cell& c)
{
    if (std::holds_alternative<double>(c))
        return shortest(std::get<double>(c));
    if (std::holds_alternative<std::string>(c))
        return std::get<std::string>(c);
    return {};
}

inline Cell parse_cell(const std::string& s)
{
    if (s.empty())
        return std::monostate{};
    double v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec == std::errc() && ptr == s.data() + s.size())
        return v;
    return s;
}

struct Table
{
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;

    void add(std::vector<Cell> row)
    {
        if (row.size() != columns.size())
            throw std::logic_error("Table::add: row width mismatch");
        for (auto& c : row)
            if (auto* d = std::get_if<double>(&c))
                *d = canonical(*d);
        rows.push_back(std::move(row));
    }

    std::size_t column(const std::string& name) const
    {
        for (std::size_t i = 0; i < columns.size(); ++i)
            if (columns[i] == name)
                return i;
        throw std::out_of_range("no column " + name);
    }

    friend bool operator==(const Table&, const Table&) = default;
};

inline void write_csv(std::ostream& os, const Table& t)
{
    for (std::size_t i = 0; i < t.columns.size(); ++i)
        os << (i ? "," : "") << t.columns[i];
    os << '\n';
    for (const auto& row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i)
            os << (i ? "," : "") << format_cell(row[i]);
        os << '\n';
    }
}

inline std::vector<std::string> split_csv_line(const std::string& line)
{
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    out.push_back(cur);
    return out;
}

inline Table read_csv(std::istream& is)
{
    Table t;
    std::string line;
    if (!std::getline(is, line))
        throw IoError("csv: missing header");
    t.columns = split_csv_line(line);
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty())
            continue;
        auto fields = split_csv_line(line);
        if (fields.size() != t.columns.size())
            throw IoError("csv:" + std::to_string(lineno) + ": expected " +
                          std::to_string(t.columns.size()) + " fields");
        std::vector<Cell> row;
        for (const auto& f : fields)
            row.push_back(parse_cell(f));
        t.rows.push_back(std::move(row));
    }
    return t;
}

inline nlohmann::ordered_json to_json(const Table& t)
{
    auto arr = nlohmann::ordered_json::array();
    for (const auto& row : t.rows) {
        nlohmann::ordered_json obj = nlohmann::ordered_json::object();
        for (std::size_t i = 0; i < row.size(); ++i) {
            const auto& c = row[i];
            if (auto* d = std::get_if<double>(&c)) {
                if (*d == std::trunc(*d) && std::abs(*d) < 9.007199254740992e15)
                    obj[t.columns[i]] = static_cast<std::int64_t>(*d);
                else
                    obj[t.columns[i]] = *d;
            }
            else if (auto* s = std::get_if<std::string>(&c))
                obj[t.columns[i]] = *s;
            else
                obj[t.columns[i]] = nullptr;
        }
        arr.push_back(std::move(obj));
    }
    return arr;
}

/// Needs at least one row to recover the column order.
inline Table from_json(const nlohmann::ordered_json& j)
{
    if (!j.is_array())
        throw IoError("json: expected an array of objects");
    Table t;
    for (const auto& obj : j) {
        if (!obj.is_object())
            throw IoError("json: expected an array of objects");
        if (t.columns.empty())
            for (const auto& [k, v] : obj.items())
                t.columns.push_back(k);
        std::vector<Cell> row;
        for (const auto& name : t.columns) {
            if (!obj.contains(name))
                throw IoError("json: row missing key " + name);
            const auto& v = obj.at(name);
            if (v.is_number())
                row.push_back(v.get<double>());
            else if (v.is_string())
                row.push_back(v.get<std::string>());
            else
                row.push_back(std::monostate{});
        }
        t.rows.push_back(std::move(row));
    }
    return t;
}

inline void write_table(std::ostream& os, const Table& t, OutputFormat fmt)
{
    if (fmt == OutputFormat::csv)
        write_csv(os, t);
    else
        os << to_json(t).dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Latency exchange format

inline constexpr const char* latency_header = "submit_time,commit_time,key,verdict";

inline void write_latency_csv(std::ostream& os, const std::vector<latency::TxRecord>& records)
{
    os << latency_header << '\n';
    for (const auto& r : records)
        os << shortest(r.submit_time) << ',' << shortest(r.commit_time) << ',' << r.key << ','
           << latency::to_string(r.verdict) << '\n';
}

namespace detail {

inline double parse_field(const std::string& s, const std::string& where)
{
    double v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v))
        throw IoError(where + ": cannot parse '" + s + "' as a number");
    return v;
}

} // namespace detail

/// Consensus latencies from a four-column record file (valid rows on
/// `target_key`, commit - submit) or a single-column file of latencies.
/// A non-numeric first line is taken as a header.
inline std::vector<double> read_latency_samples(std::istream& is, const std::string& name,
                                                std::size_t target_key = 0)
{
    std::vector<double> out;
    std::string line;
    std::size_t lineno = 0;
    int width = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        const auto f = split_csv_line(line);
        const std::string where = name + ":" + std::to_string(lineno);
        if (width == 0) {
            if (f.size() != 1 && f.size() != 4)
                throw IoError(where + ": expected 1 or 4 columns, got " + std::to_string(f.size()));
            width = static_cast<int>(f.size());
            double dummy = 0;
            auto [p, ec] = std::from_chars(f[0].data(), f[0].data() + f[0].size(), dummy);
            if (ec != std::errc() || p != f[0].data() + f[0].size())
                continue; // header
        }
        if (static_cast<int>(f.size()) != width)
            throw IoError(where + ": expected " + std::to_string(width) + " columns");
        double x = 0;
        if (width == 1) {
            x = detail::parse_field(f[0], where);
        } else {
            const double key = detail::parse_field(f[2], where);
            if (f[3] != "valid" && f[3] != "mvcc_invalid")
                throw IoError(where + ": unknown verdict '" + f[3] + "'");
            if (f[3] != "valid" || key != static_cast<double>(target_key))
                continue;
            x = detail::parse_field(f[1], where) - detail::parse_field(f[0], where);
        }
        if (!(x > 0))
            throw IoError(where + ": latency must be positive, got " + shortest(x));
        out.push_back(x);
    }
    return out;
}

inline std::vector<double> read_latency_file(const std::string& path, std::size_t target_key = 0)
{
    std::ifstream in(path);
    if (!in)
        throw IoError(path + ": cannot open");
    return read_latency_samples(in, path, target_key);
}

} // namespace aoi_hlf::cli

#endif
