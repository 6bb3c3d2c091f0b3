#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace rmdp {

inline constexpr const char* LIBRARY_VERSION = "1.0.0";

using numvec = std::vector<double>;
using cspan = std::span<const double>;
using mspan = std::span<double>;

/// Raised when inputs violate a structural precondition (dimension
/// mismatch, invalid probability row, bad configuration value).
class invalid_input : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when an iterative routine cannot reach its target accuracy
/// (bracket not found, iteration budget exhausted inside a kernel).
class numerical_failure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

constexpr double SIMPLEX_TOL = 1e-12;

/// Probabilities are clamped here before entering a logarithm.
constexpr double ENTROPY_FLOOR = 1e-300;

inline double floored(double p) { return p < ENTROPY_FLOOR ? ENTROPY_FLOOR : p; }

inline double dot(cspan a, cspan b) {
    double r = 0.0;
    for (size_t i = 0; i < a.size(); i++)
        r += a[i] * b[i];
    return r;
}

inline double linf_diff(cspan a, cspan b) {
    double r = 0.0;
    for (size_t i = 0; i < a.size(); i++) {
        const double d = a[i] > b[i] ? a[i] - b[i] : b[i] - a[i];
        if (d > r) r = d;
    }
    return r;
}

inline double linf_norm(cspan a) {
    double r = 0.0;
    for (double x : a)
        r = std::max(r, x < 0 ? -x : x);
    return r;
}

inline double sum(cspan a) {
    double r = 0.0;
    for (double x : a)
        r += x;
    return r;
}

} // namespace rmdp
