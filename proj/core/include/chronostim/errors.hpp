#pragma once

#include <stdexcept>
#include <string>

namespace chronostim {

/// Invalid configuration (bad axis, non-positive frequency, ...).
/// CLI maps this to exit code 2.
class config_error : public std::runtime_error {
public:
    explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

/// Invalid runtime input (short window, empty sample, time going backwards).
/// CLI maps this to exit code 2.
class input_error : public std::runtime_error {
public:
    explicit input_error(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed text input; carries a 1-based line number when known.
class parse_error : public input_error {
public:
    parse_error(const std::string& what, std::size_t line)
        : input_error(what + " (line " + std::to_string(line) + ")"), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

/// Filesystem failure. CLI maps this to exit code 1.
class io_error : public std::runtime_error {
public:
    explicit io_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace chronostim
