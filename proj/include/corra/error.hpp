#pragma once

#include <stdexcept>
#include <string>

namespace corra {

// Error categories, mapped to CLI exit codes by the driver.
enum class ErrorCode {
    invalid_argument,   // bad parameter or precondition violation
    infeasible_config,  // config cannot be satisfied (e.g. grid exhausted)
    schema_mismatch,    // artifact schema/version does not match
    missing_artifact,   // referenced file absent or unreadable
    numerical,          // numerical abort (NaN loss, singular system)
};

struct Error : std::runtime_error {
    ErrorCode code;
    Error(ErrorCode c, const std::string& msg) : std::runtime_error(msg), code(c) {}
};

[[noreturn]] inline void fail(ErrorCode c, const std::string& msg) {
    throw Error(c, msg);
}

} // namespace corra
