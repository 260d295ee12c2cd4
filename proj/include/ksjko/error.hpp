#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ksjko {

enum class ErrorKind {
    InvalidArgument,
    NormalizationError,
    InvalidDensity,
    DomainOverflow,
    ResolutionMismatch,
    GridMismatch,
    InnerStall,
    NoConvergence,
    StabilityError,
    InsufficientData,
    InvalidSeries,
    ConvexityLost,
    ConfigError,
    IoError,
};

inline std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidArgument: return "invalid-argument";
        case ErrorKind::NormalizationError: return "normalization-error";
        case ErrorKind::InvalidDensity: return "invalid-density";
        case ErrorKind::DomainOverflow: return "domain-overflow";
        case ErrorKind::ResolutionMismatch: return "resolution-mismatch";
        case ErrorKind::GridMismatch: return "grid-mismatch";
        case ErrorKind::InnerStall: return "inner-stall";
        case ErrorKind::NoConvergence: return "no-convergence";
        case ErrorKind::StabilityError: return "stability-error";
        case ErrorKind::InsufficientData: return "insufficient-data";
        case ErrorKind::InvalidSeries: return "invalid-series";
        case ErrorKind::ConvexityLost: return "convexity-lost";
        case ErrorKind::ConfigError: return "config-error";
        case ErrorKind::IoError: return "io-error";
    }
    return "unknown";
}

/// Base of every error raised by the library; `kind()` is the stable tag.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Picard iteration ran out of iterations; carries the residual history.
class NoConvergenceError : public Error {
public:
    NoConvergenceError(const std::string& message, std::vector<double> history)
        : Error(ErrorKind::NoConvergence, message), history_(std::move(history)) {}

    const std::vector<double>& history() const noexcept { return history_; }

private:
    std::vector<double> history_;
};

/// Quantile Newton solve could neither decrease the objective nor certify stationarity.
class InnerStallError : public Error {
public:
    InnerStallError(const std::string& message, std::vector<double> last_iterate, double grad_norm)
        : Error(ErrorKind::InnerStall, message),
          last_iterate_(std::move(last_iterate)),
          grad_norm_(grad_norm) {}

    const std::vector<double>& last_iterate() const noexcept { return last_iterate_; }
    double grad_norm() const noexcept { return grad_norm_; }

private:
    std::vector<double> last_iterate_;
    double grad_norm_;
};

}  // namespace ksjko
