#include "rescast/error.hpp"

namespace rescast {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Schema: return "schema";
        case ErrorKind::Parse: return "parse";
        case ErrorKind::Fetch: return "fetch";
        case ErrorKind::HttpStatus: return "http-status";
        case ErrorKind::EmptySeries: return "empty-series";
        case ErrorKind::DegenerateRange: return "degenerate-range";
        case ErrorKind::InsufficientData: return "insufficient-data";
        case ErrorKind::Config: return "config";
        case ErrorKind::DegenerateReservoir: return "degenerate-reservoir";
        case ErrorKind::Input: return "input";
        case ErrorKind::Underdetermined: return "underdetermined";
        case ErrorKind::NotFitted: return "not-fitted";
        case ErrorKind::Divergence: return "divergence";
        case ErrorKind::Shape: return "shape";
        case ErrorKind::Empty: return "empty";
        case ErrorKind::DegenerateTest: return "degenerate-test";
        case ErrorKind::Artifact: return "artifact";
    }
    return "unknown";
}

int exit_code(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Config:
            return 1;
        case ErrorKind::Artifact:
        case ErrorKind::NotFitted:
            return 3;
        case ErrorKind::Divergence:
            return 4;
        default:
            // Everything else originates in the input data or its retrieval.
            return 2;
    }
}

}  // namespace rescast
