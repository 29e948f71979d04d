#ifndef BIPHOTON_CLI_HPP
#define BIPHOTON_CLI_HPP

#include <ostream>
#include <span>
#include <string>

namespace biphoton::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kFailure = 1;
inline constexpr int kConfigError = 2;
inline constexpr int kFormatError = 3;
inline constexpr int kModeMismatch = 4;
inline constexpr int kNotConverged = 5;  // only with --strict

// args excludes the program name.
int run(std::span<const std::string> args, std::ostream& out, std::ostream& err);
int main(int argc, char** argv);

}  // namespace biphoton::cli

#endif  // BIPHOTON_CLI_HPP
