#pragma once

#include <stdexcept>
#include <string>

namespace propssl {

// Bad experiment configuration (CLI exit code 2).
class config_error : public std::runtime_error {
public:
    explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

// Unreadable or malformed input data (CLI exit code 3).
class data_error : public std::runtime_error {
public:
    explicit data_error(const std::string& what) : std::runtime_error(what) {}
};

// Non-finite values or other numerical breakdown (CLI exit code 4).
class numeric_error : public std::runtime_error {
public:
    explicit numeric_error(const std::string& what) : std::runtime_error(what) {}
};

} // namespace propssl
