#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ksjko/error.hpp"

namespace ksjko {

/// Thomas algorithm for a tridiagonal system.
///
/// `lower[i]` couples row i to column i-1 (lower[0] unused), `upper[i]` couples
/// row i to column i+1 (upper[n-1] unused). No pivoting: intended for the
/// diagonally dominant / SPD systems assembled in this library.
inline std::vector<double> solve_tridiagonal(std::span<const double> lower,
                                             std::span<const double> diag,
                                             std::span<const double> upper,
                                             std::span<const double> rhs) {
    const std::size_t n = diag.size();
    if (n == 0 || lower.size() != n || upper.size() != n || rhs.size() != n) {
        throw Error(ErrorKind::InvalidArgument, "tridiagonal system with inconsistent sizes");
    }
    std::vector<double> c(n, 0.0);
    std::vector<double> x(n, 0.0);

    double pivot = diag[0];
    if (pivot == 0.0) throw Error(ErrorKind::InvalidArgument, "singular tridiagonal system");
    c[0] = n > 1 ? upper[0] / pivot : 0.0;
    x[0] = rhs[0] / pivot;
    for (std::size_t i = 1; i < n; ++i) {
        pivot = diag[i] - lower[i] * c[i - 1];
        if (pivot == 0.0) throw Error(ErrorKind::InvalidArgument, "singular tridiagonal system");
        c[i] = i + 1 < n ? upper[i] / pivot : 0.0;
        x[i] = (rhs[i] - lower[i] * x[i - 1]) / pivot;
    }
    for (std::size_t i = n - 1; i-- > 0;) {
        x[i] -= c[i] * x[i + 1];
    }
    return x;
}

}  // namespace ksjko
