#pragma once

#include <stdexcept>
#include <string>

namespace hnls {

enum class ErrorKind {
    Structural,           // mismatched sizes, malformed inputs
    Parameter,            // values outside their admissible range
    UnsupportedOperation, // e.g. translating a radial field
    DegenerateInput,      // H(f) <= 0 where a positive value is required
    NonConvergence,
    OracleFailure,
    NotABlowup,
    InconsistentEstimate,
    Precondition,
    Format,               // checkpoint / config parse failures
    HashMismatch,
    Io,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind), detail_(what) {}

    ErrorKind kind() const noexcept { return kind_; }
    /// Message without the kind prefix.
    const std::string& detail() const noexcept { return detail_; }

private:
    ErrorKind kind_;
    std::string detail_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool cond, ErrorKind kind, const std::string& what) {
    if (!cond) fail(kind, what);
}

inline void require(bool cond, ErrorKind kind, const char* what) {
    if (!cond) fail(kind, what);
}

} // namespace hnls
