#ifndef BIPHOTON_CONFIG_HPP
#define BIPHOTON_CONFIG_HPP

// Flat `key = value` configuration text. '#' starts a comment, keys are
// dotted (crystal.length_mm). Every lookup error names the source line.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace biphoton {

class Config {
  public:
    static Config parse(std::string_view text);
    static Config load(const std::filesystem::path& path);

    bool has(std::string_view key) const;
    std::vector<std::string> keys() const;
    int line_of(std::string_view key) const;

    std::optional<std::string> text(std::string_view key) const;
    // decimal_shift scales by 10^shift exactly as written (unit conversion).
    std::optional<double> number(std::string_view key, int decimal_shift = 0) const;
    // Accepts "inf" / "infinity" as +infinity.
    std::optional<double> number_or_inf(std::string_view key, int decimal_shift = 0) const;
    std::optional<std::int64_t> integer(std::string_view key) const;
    std::optional<bool> boolean(std::string_view key) const;

    // Throws ConfigError on the first key not in `known`.
    void reject_unknown(std::span<const std::string_view> known) const;

    // Later files may override earlier keys.
    void set(std::string key, std::string value, int line = 0);

  private:
    struct Entry {
        std::string value;
        int line = 0;
    };
    const Entry* find(std::string_view key) const;

    std::map<std::string, Entry, std::less<>> entries_;
};

// Plain decimal text of v·10^shift that parses back (with -shift) to v.
std::string decimal_text(double v, int decimal_shift = 0);

}  // namespace biphoton

#endif  // BIPHOTON_CONFIG_HPP
