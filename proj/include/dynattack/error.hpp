#pragma once

#include <stdexcept>
#include <string>

namespace dynattack {

/// Invalid model, monitor, decision or optimizer configuration.
class ConfigError : public std::invalid_argument {
public:
    explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

/// Invalid call-site input (negative count, out-of-range step, empty table).
class InputError : public std::invalid_argument {
public:
    explicit InputError(const std::string& what) : std::invalid_argument(what) {}
};

}  // namespace dynattack
