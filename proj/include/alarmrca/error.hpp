#pragma once

#include <stdexcept>
#include <string>

namespace alarmrca {

// Exit-code mapping used by the CLI: ConfigError -> 1, DataError -> 2, NumericalError -> 3.

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace alarmrca
