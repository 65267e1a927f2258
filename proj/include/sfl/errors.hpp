#pragma once

#include <stdexcept>
#include <string>

namespace sfl {

// Every failure mode the library reports. The CLI maps these onto exit codes;
// tests match on the code, not the message text.
enum class ErrorCode {
    invalid_rotation,
    invalid_spectrum,
    subcritical_spike,
    dimension,
    singular_s2,
    pole,
    inside_support,
    domain,
    no_supercritical_root,
    nonpositive_variance,
    invalid_covariance,
    index_out_of_range,
    experiment_degenerate,
    config,
    io,
};

inline const char* error_code_name(ErrorCode c) {
    switch (c) {
        case ErrorCode::invalid_rotation: return "invalid-rotation";
        case ErrorCode::invalid_spectrum: return "invalid-spectrum";
        case ErrorCode::subcritical_spike: return "subcritical-spike";
        case ErrorCode::dimension: return "dimension";
        case ErrorCode::singular_s2: return "singular-s2";
        case ErrorCode::pole: return "pole";
        case ErrorCode::inside_support: return "inside-support";
        case ErrorCode::domain: return "domain";
        case ErrorCode::no_supercritical_root: return "no-supercritical-root";
        case ErrorCode::nonpositive_variance: return "nonpositive-variance";
        case ErrorCode::invalid_covariance: return "invalid-covariance";
        case ErrorCode::index_out_of_range: return "index";
        case ErrorCode::experiment_degenerate: return "experiment-degenerate";
        case ErrorCode::config: return "config";
        case ErrorCode::io: return "io";
    }
    return "unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + what),
          code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
    throw Error(code, what);
}

}  // namespace sfl
