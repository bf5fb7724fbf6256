#pragma once

#include <complex>
#include <cmath>

namespace kobasin {

using cplx = std::complex<double>;

/// A point (z, w) of C^2.
struct Point2 {
    cplx z{};
    cplx w{};

    friend bool operator==(const Point2&, const Point2&) = default;
};

inline double max_modulus(const Point2& p) { return std::max(std::abs(p.z), std::abs(p.w)); }

inline double distance(const Point2& a, const Point2& b) {
    return std::max(std::abs(a.z - b.z), std::abs(a.w - b.w));
}

}  // namespace kobasin
