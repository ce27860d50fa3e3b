#pragma once

#include <stdexcept>
#include <string>

namespace wifiload {

// Bad configuration / CLI usage. Mapped to process exit code 2.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Estimator or simulation failure at run time (non-finite state, inversion
// failure, ...). Mapped to process exit code 3.
struct EstimatorError : std::runtime_error {
    using std::runtime_error::runtime_error;
    EstimatorError(const std::string& what, long long slot)
        : std::runtime_error(what + " (slot " + std::to_string(slot) + ")") {}
};

}  // namespace wifiload
