#include "biphoton/config.hpp"

#include "biphoton/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace biphoton {

namespace {

std::string_view trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

bool valid_key(std::string_view key)
{
    if (key.empty() || key.front() == '.' || key.back() == '.') {
        return false;
    }
    return std::all_of(key.begin(), key.end(),
                       [](unsigned char c) { return std::isalnum(c) || c == '_' || c == '.'; });
}

}  // namespace

Config Config::parse(std::string_view text)
{
    Config cfg;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto end = std::min(text.find('\n', pos), text.size());
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) {
            line = line.substr(0, hash);
        }
        line = trim(line);
        if (line.empty()) {
            if (end == text.size()) {
                break;
            }
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError("expected 'key = value', got '" + std::string(line) + "'", line_no);
        }
        const auto key = trim(line.substr(0, eq));
        const auto value = trim(line.substr(eq + 1));
        if (!valid_key(key)) {
            throw ConfigError("invalid key '" + std::string(key) + "'", line_no);
        }
        if (value.empty()) {
            throw ConfigError("missing value for '" + std::string(key) + "'", line_no);
        }
        if (cfg.has(key)) {
            throw ConfigError("duplicate key '" + std::string(key) + "' (first set on line " +
                                  std::to_string(cfg.line_of(key)) + ")",
                              line_no);
        }
        cfg.set(std::string(key), std::string(value), line_no);
        if (end == text.size()) {
            break;
        }
    }
    return cfg;
}

Config Config::load(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    try {
        return parse(ss.str());
    }
    catch (const ConfigError& e) {
        throw ConfigError(path.string(), e);
    }
}

const Config::Entry* Config::find(std::string_view key) const
{
    const auto it = entries_.find(key);
    return it == entries_.end() ? nullptr : &it->second;
}

bool Config::has(std::string_view key) const
{
    return find(key) != nullptr;
}

std::vector<std::string> Config::keys() const
{
    std::vector<std::string> out;
    for (const auto& [k, v] : entries_) {
        out.push_back(k);
    }
    return out;
}

int Config::line_of(std::string_view key) const
{
    const Entry* e = find(key);
    return e ? e->line : 0;
}

void Config::set(std::string key, std::string value, int line)
{
    entries_[std::move(key)] = Entry{std::move(value), line};
}

std::optional<std::string> Config::text(std::string_view key) const
{
    const Entry* e = find(key);
    if (!e) {
        return std::nullopt;
    }
    return e->value;
}

std::optional<double> Config::number(std::string_view key, int decimal_shift) const
{
    const Entry* e = find(key);
    if (!e) {
        return std::nullopt;
    }
    const auto parse = [&](const std::string& text) {
        double v = 0.0;
        const char* first = text.data();
        const char* last = first + text.size();
        const auto [ptr, ec] = std::from_chars(first, last, v);
        if (ec != std::errc() || ptr != last || !std::isfinite(v)) {
            throw ConfigError(std::string(key) + ": expected a finite number, got '" + e->value + "'", e->line);
        }
        return v;
    };
    const double v = parse(e->value);
    if (decimal_shift == 0) {
        return v;
    }
    // Move the decimal exponent instead of multiplying, so "0.9" mm is the
    // same double as 0.9e-3 m.
    const auto epos = e->value.find_first_of("eE");
    int exponent = 0;
    if (epos != std::string::npos) {
        const char* first = e->value.data() + epos + 1;
        const char* last = e->value.data() + e->value.size();
        if (*first == '+') {
            ++first;
        }
        std::from_chars(first, last, exponent);
    }
    return parse(e->value.substr(0, epos) + "e" + std::to_string(exponent + decimal_shift));
}

std::optional<double> Config::number_or_inf(std::string_view key, int decimal_shift) const
{
    const Entry* e = find(key);
    if (!e) {
        return std::nullopt;
    }
    std::string lower = e->value;
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    if (lower == "inf" || lower == "infinity") {
        return std::numeric_limits<double>::infinity();
    }
    return number(key, decimal_shift);
}

std::string decimal_text(double v, int decimal_shift)
{
    if (!std::isfinite(v)) {
        return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
    }
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::scientific);
    const std::string sci(buf, r.ptr);  // [-]d[.ddd]e±XX
    const auto epos = sci.find('e');
    const bool negative = sci[0] == '-';
    std::string digits;
    for (std::size_t i = negative ? 1 : 0; i < epos; ++i) {
        if (sci[i] != '.') {
            digits += sci[i];
        }
    }
    int exponent = std::stoi(sci.substr(epos + 1)) + decimal_shift;
    if (digits.find_first_not_of('0') == std::string::npos) {
        return "0";
    }
    std::string out;
    if (exponent < 0) {
        out = "0." + std::string(static_cast<std::size_t>(-exponent - 1), '0') + digits;
    }
    else {
        if (digits.size() < static_cast<std::size_t>(exponent) + 1) {
            digits.append(static_cast<std::size_t>(exponent) + 1 - digits.size(), '0');
        }
        out = digits.substr(0, exponent + 1);
        if (digits.size() > static_cast<std::size_t>(exponent) + 1) {
            out += "." + digits.substr(exponent + 1);
        }
    }
    return negative ? "-" + out : out;
}

std::optional<std::int64_t> Config::integer(std::string_view key) const
{
    const Entry* e = find(key);
    if (!e) {
        return std::nullopt;
    }
    std::int64_t v = 0;
    const char* first = e->value.data();
    const char* last = first + e->value.size();
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) {
        throw ConfigError(std::string(key) + ": expected an integer, got '" + e->value + "'", e->line);
    }
    return v;
}

std::optional<bool> Config::boolean(std::string_view key) const
{
    const Entry* e = find(key);
    if (!e) {
        return std::nullopt;
    }
    if (e->value == "true" || e->value == "1" || e->value == "yes") {
        return true;
    }
    if (e->value == "false" || e->value == "0" || e->value == "no") {
        return false;
    }
    throw ConfigError(std::string(key) + ": expected true or false, got '" + e->value + "'", e->line);
}

void Config::reject_unknown(std::span<const std::string_view> known) const
{
    for (const auto& [k, e] : entries_) {
        if (std::find(known.begin(), known.end(), std::string_view(k)) == known.end()) {
            throw ConfigError("unknown key '" + k + "'", e.line);
        }
    }
}

}  // namespace biphoton
