#pragma once

#include <array>
#include <charconv>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace sfdg {

using index_t = std::int64_t;

inline constexpr int kMaxDim = 3;

/// Width of a quadrature-point pack: d gradient slots plus the value slot,
/// padded to four doubles (one AVX2 register).
inline constexpr int kPackWidth = 4;

template <typename T>
using DimArray = std::array<T, kMaxDim>;

/// Invalid input geometry: a Jacobian that is singular or orientation-reversing.
class DegenerateGeometryError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A request that would exceed a configured resource cap (e.g. matrix memory).
class ResourceError : public std::runtime_error {
public:
    ResourceError(const std::string& what, std::size_t estimate_bytes)
        : std::runtime_error(what), estimate_bytes_(estimate_bytes) {}
    std::size_t estimate_bytes() const noexcept { return estimate_bytes_; }

private:
    std::size_t estimate_bytes_;
};

/// Malformed or inconsistent run configuration.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// NaN or Inf appeared in the time-stepping state.
class DivergenceError : public std::runtime_error {
public:
    DivergenceError(const std::string& what, index_t step)
        : std::runtime_error(what), step_(step) {}
    index_t step() const noexcept { return step_; }

private:
    index_t step_;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

constexpr index_t ipow(index_t base, int exp) {
    index_t r = 1;
    for (int i = 0; i < exp; ++i)
        r *= base;
    return r;
}

/// Shortest decimal form that parses back to the same double.
inline std::string shortest(double v) {
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

} // namespace sfdg
