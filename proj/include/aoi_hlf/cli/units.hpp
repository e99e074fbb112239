#ifndef AOI_HLF_CLI_UNITS_HPP
#define AOI_HLF_CLI_UNITS_HPP

// Unit-suffixed quantities from config files, converted to SI on load.
//   "1 W", "30 dBm", "-100 dBm/Hz", "1 MHz", "500 Kb", "0.0001 /km^2", "15 /s", "2 s"

#include <cctype>
#include <charconv>
#include <cmath>
#include <map>
#include <string>
#include <string_view>

#include "aoi_hlf/errors.hpp"

namespace aoi_hlf::cli {

enum class Dimension { power, spectral_density, frequency, bits, area_density, rate, time };

inline std::string to_string(Dimension d)
{
    switch (d) {
    case Dimension::power: return "power";
    case Dimension::spectral_density: return "power spectral density";
    case Dimension::frequency: return "frequency";
    case Dimension::bits: return "data size";
    case Dimension::area_density: return "area density";
    case Dimension::rate: return "rate";
    case Dimension::time: return "time";
    }
    return "?";
}

namespace detail {

struct UnitRule
{
    Dimension dim;
    double scale;
    bool decibel; // value is 10 log10(x / scale)
};

inline const std::map<std::string, UnitRule, std::less<>>& unit_table()
{
    static const std::map<std::string, UnitRule, std::less<>> t{
        {"W", {Dimension::power, 1.0, false}},
        {"mW", {Dimension::power, 1e-3, false}},
        {"dBm", {Dimension::power, 1e-3, true}},
        {"dBW", {Dimension::power, 1.0, true}},
        {"W/Hz", {Dimension::spectral_density, 1.0, false}},
        {"dBm/Hz", {Dimension::spectral_density, 1e-3, true}},
        {"dBW/Hz", {Dimension::spectral_density, 1.0, true}},
        {"Hz", {Dimension::frequency, 1.0, false}},
        {"kHz", {Dimension::frequency, 1e3, false}},
        {"MHz", {Dimension::frequency, 1e6, false}},
        {"GHz", {Dimension::frequency, 1e9, false}},
        {"bit", {Dimension::bits, 1.0, false}},
        {"b", {Dimension::bits, 1.0, false}},
        {"Kb", {Dimension::bits, 1e3, false}},
        {"kb", {Dimension::bits, 1e3, false}},
        {"Mb", {Dimension::bits, 1e6, false}},
        {"B", {Dimension::bits, 8.0, false}},
        {"KB", {Dimension::bits, 8e3, false}},
        {"MB", {Dimension::bits, 8e6, false}},
        {"/m^2", {Dimension::area_density, 1.0, false}},
        {"/km^2", {Dimension::area_density, 1e-6, false}},
        {"/s", {Dimension::rate, 1.0, false}},
        {"/ms", {Dimension::rate, 1e3, false}},
        {"s", {Dimension::time, 1.0, false}},
        {"ms", {Dimension::time, 1e-3, false}},
        {"us", {Dimension::time, 1e-6, false}},
    };
    return t;
}

inline std::string_view trim(std::string_view s)
{
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
        s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
        s.remove_suffix(1);
    return s;
}

} // namespace detail

/// Parses "<number> <unit>" into SI base units of `dim`. The unit is mandatory.
inline double parse_quantity(std::string_view text, Dimension dim)
{
    const std::string_view s = detail::trim(text);
    double value = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc() || !std::isfinite(value))
        throw ConfigError("'" + std::string(text) + "': expected a number followed by a unit");
    const std::string_view unit = detail::trim(std::string_view(ptr, s.data() + s.size() - ptr));
    if (unit.empty())
        throw ConfigError("'" + std::string(text) + "': missing unit for " + to_string(dim));
    const auto& table = detail::unit_table();
    auto it = table.find(unit);
    if (it == table.end())
        throw ConfigError("'" + std::string(text) + "': unknown unit '" + std::string(unit) + "'");
    if (it->second.dim != dim)
        throw ConfigError("'" + std::string(text) + "': unit '" + std::string(unit) +
                          "' is a " + to_string(it->second.dim) + ", expected " + to_string(dim));
    if (it->second.decibel)
        return it->second.scale * std::pow(10.0, value / 10.0);
    return value * it->second.scale;
}

} // namespace aoi_hlf::cli

#endif
