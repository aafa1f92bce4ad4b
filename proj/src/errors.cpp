#include "hnls/errors.hpp"

namespace hnls {

const char* to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::Structural: return "structural error";
    case ErrorKind::Parameter: return "parameter error";
    case ErrorKind::UnsupportedOperation: return "unsupported operation";
    case ErrorKind::DegenerateInput: return "degenerate input";
    case ErrorKind::NonConvergence: return "non-convergence";
    case ErrorKind::OracleFailure: return "oracle failure";
    case ErrorKind::NotABlowup: return "not a blow-up";
    case ErrorKind::InconsistentEstimate: return "inconsistent estimate";
    case ErrorKind::Precondition: return "precondition violated";
    case ErrorKind::Format: return "format error";
    case ErrorKind::HashMismatch: return "hash mismatch";
    case ErrorKind::Io: return "i/o error";
    }
    return "error";
}

} // namespace hnls
