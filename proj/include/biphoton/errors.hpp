#ifndef BIPHOTON_ERRORS_HPP
#define BIPHOTON_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace biphoton {

class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// A physical parameter outside its valid domain (non-positive length, ...).
class DomainError : public Error {
  public:
    using Error::Error;
};

// Bad or unresolvable configuration. `line` is 0 when not tied to a file line.
class ConfigError : public Error {
  public:
    explicit ConfigError(const std::string& what, int line = 0)
        : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line)
    {
    }
    // Same error attributed to a file: "<file>:<line>: what".
    ConfigError(const std::string& file, const ConfigError& inner)
        : Error(file + ":" + (inner.line_ > 0 ? std::to_string(inner.line_) + ":" : std::string()) + " " +
                inner.message()),
          line_(inner.line_)
    {
    }
    int line() const noexcept { return line_; }
    // Message without the line prefix.
    std::string message() const
    {
        const std::string w = what();
        const std::string prefix = "line " + std::to_string(line_) + ": ";
        return line_ > 0 && w.rfind(prefix, 0) == 0 ? w.substr(prefix.size()) : w;
    }

  private:
    int line_;
};

// Malformed binary/text artifact (bad magic, truncated payload, ...).
class FormatError : public Error {
  public:
    using Error::Error;
};

// Operation requested on data of the wrong measurement mode or projection kind.
class ModeMismatchError : public Error {
  public:
    using Error::Error;
};

// Shape or state precondition violated by the caller.
class UsageError : public Error {
  public:
    using Error::Error;
};

}  // namespace biphoton

#endif  // BIPHOTON_ERRORS_HPP
