#pragma once

#include <stdexcept>
#include <string>

namespace gocart {

enum class ErrorKind {
    NotPositiveDefinite,
    NoConvergence,
    Infeasible,
    OutOfDomain,
    TooLarge,
    EmptyDataset,
    DimensionMismatch,
    DegenerateWeights,
    Schema,
    Io,
    Usage,
};

const char* to_string(ErrorKind kind);

// Single exception type for the library; callers switch on kind() when the
// distinction matters (the CLI maps kinds to exit codes).
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

inline const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::NotPositiveDefinite: return "NotPositiveDefinite";
        case ErrorKind::NoConvergence: return "NoConvergence";
        case ErrorKind::Infeasible: return "Infeasible";
        case ErrorKind::OutOfDomain: return "OutOfDomain";
        case ErrorKind::TooLarge: return "TooLarge";
        case ErrorKind::EmptyDataset: return "EmptyDataset";
        case ErrorKind::DimensionMismatch: return "DimensionMismatch";
        case ErrorKind::DegenerateWeights: return "DegenerateWeights";
        case ErrorKind::Schema: return "SchemaError";
        case ErrorKind::Io: return "IoError";
        case ErrorKind::Usage: return "UsageError";
    }
    return "Error";
}

}  // namespace gocart
