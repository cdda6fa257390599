#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace jumplab {

// Error categories shared with the C API (see include/jumplab/jumplab.h).
enum class Err : int {
    ok = 0,
    unknown = 1,
    parse = 2,
    config = 3,
    missing_input = 4,
    domain = 5,
    numeric = 6,
    io = 7,
    check_failed = 8,
};

class JlError : public std::runtime_error {
public:
    JlError(Err code, const std::string& what) : std::runtime_error(what), code_(code) {}
    Err code() const noexcept { return code_; }

private:
    Err code_;
};

[[noreturn]] inline void fail(Err code, const std::string& msg) { throw JlError(code, msg); }

inline void require(bool ok, Err code, const std::string& msg) {
    if (!ok) fail(code, msg);
}

// Surface measure of the unit sphere in R^d, 2 pi^{d/2} / Gamma(d/2).
inline double sphere_surface(int d) {
    return 2.0 * std::pow(M_PI, 0.5 * d) / std::tgamma(0.5 * d);
}

// Volume of the ball of radius r in R^d.
inline double ball_volume(int d, double r) {
    return std::pow(M_PI, 0.5 * d) / std::tgamma(0.5 * d + 1.0) * std::pow(r, d);
}

// FNV-1a, used for config digests and kernel hashes.
inline std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t h = 0xcbf29ce484222325ULL) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t fnv1a(const std::string& s) { return fnv1a(s.data(), s.size()); }

}  // namespace jumplab
