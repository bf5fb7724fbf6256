#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "kobasin/poly.hpp"

namespace kobasin {

/// Escape radius with the two moduli it was built from. For max(|z|,|w|) > radius:
///   |z| > z_bound            implies |P(z)| > |z|;
///   |z| <= z_bound, |w| > w_bound implies |Q(z,w)| > |w|.
/// Either way the orbit leaves every compact set.
struct EscapeRadius {
    double radius = 0.0;
    double z_bound = 0.0;
    double w_bound = 0.0;
};

/// F(z, w) = (P(z), Q(z, w)). Exact coefficients are the source of truth; the
/// double-precision copies are derived from them once.
class SkewProduct {
public:
    SkewProduct(ExactPoly p, ExactBivar q);
    static SkewProduct from_double(const ComplexPoly& p, const ComplexBivar& q);

    const ComplexPoly& p() const { return p_; }
    const ComplexBivar& q() const { return q_; }
    const ExactPoly& p_exact() const { return p_exact_; }
    const ExactBivar& q_exact() const { return q_exact_; }
    const ComplexPoly& dp() const { return dp_; }
    const ComplexBivar& dq_dw() const { return dq_dw_; }
    const ComplexBivar& dq_dz() const { return dq_dz_; }

    double a() const { return a_; }  // |P'(0)|
    double b() const { return b_; }  // |Q_0'(0)|
    int d() const { return p_.degree(); }

    /// Throws HypothesisViolation when the degree conditions needed for the
    /// certificate fail.
    const EscapeRadius& escape() const;
    double escape_radius() const { return escape().radius; }
    bool has_escape_radius() const { return escape_.has_value(); }

    Point2 operator()(const Point2& x) const { return {p_(x.z), q_(x.z, x.w)}; }

    /// Stable 64-bit hash of the exact coefficients.
    std::uint64_t hash() const { return hash_; }
    std::string hash_hex() const;
    std::string describe() const;

private:
    ExactPoly p_exact_;
    ExactBivar q_exact_;
    ComplexPoly p_;
    ComplexBivar q_;
    ComplexPoly dp_;
    ComplexBivar dq_dw_;
    ComplexBivar dq_dz_;
    double a_ = 0.0;
    double b_ = 0.0;
    std::optional<EscapeRadius> escape_;
    std::string escape_error_;
    std::uint64_t hash_ = 0;
};

inline cplx eval_poly(const ComplexPoly& p, cplx z) { return p(z); }
inline Point2 eval_skew(const SkewProduct& f, const Point2& x) { return f(x); }

/// Builds the escape radius from coefficient magnitudes: sharp Cauchy roots for
/// P and for Q with the z-terms bounded on |z| <= z_bound, then doubled.
EscapeRadius compute_escape_radius(const ComplexPoly& p, const ComplexBivar& q);

/// Checks the certified inequality at one point outside the radius.
bool escape_certificate_holds(const SkewProduct& f, const Point2& x);

/// Named maps used throughout tests and the CLI.
namespace maps {
/// (z^2 + z/4, w^2 + w/2 + L z^2)
SkewProduct worked_example(const mpq_class& L = 10);
/// (z^2, w^2 + a z)
SkewProduct counterexample_one(const mpq_class& a);
/// (a z + z^2, w^2 + c w + b z)
SkewProduct counterexample_two(const mpq_class& a, const mpq_class& b, const mpq_class& c);
/// (z^2, w^2)
SkewProduct product_squares();
}  // namespace maps

}  // namespace kobasin
