#pragma once

#include <gmpxx.h>

#include <string>

#include "kobasin/types.hpp"

namespace kobasin {

/// Exact complex rational. Used for certificate inequalities and exact orbits.
struct QComplex {
    mpq_class re{0};
    mpq_class im{0};

    QComplex() = default;
    QComplex(mpq_class r) : re(std::move(r)) { re.canonicalize(); }
    QComplex(mpq_class r, mpq_class i) : re(std::move(r)), im(std::move(i)) {
        re.canonicalize();
        im.canonicalize();
    }
    QComplex(long v) : re(v) {}
    QComplex(int v) : re(v) {}

    /// Exact conversion: every finite double is a dyadic rational.
    static QComplex from_double(cplx c) { return {mpq_class(c.real()), mpq_class(c.imag())}; }

    cplx to_double() const { return {re.get_d(), im.get_d()}; }
    bool is_zero() const { return re == 0 && im == 0; }

    QComplex& operator+=(const QComplex& o) { re += o.re; im += o.im; return *this; }
    QComplex& operator-=(const QComplex& o) { re -= o.re; im -= o.im; return *this; }
    QComplex& operator*=(const QComplex& o) {
        mpq_class r = re * o.re - im * o.im;
        mpq_class i = re * o.im + im * o.re;
        re = std::move(r);
        im = std::move(i);
        return *this;
    }
    QComplex& operator/=(const QComplex& o);

    friend QComplex operator+(QComplex a, const QComplex& b) { return a += b; }
    friend QComplex operator-(QComplex a, const QComplex& b) { return a -= b; }
    friend QComplex operator*(QComplex a, const QComplex& b) { return a *= b; }
    friend QComplex operator/(QComplex a, const QComplex& b) { return a /= b; }
    friend QComplex operator-(const QComplex& a) { return {-a.re, -a.im}; }
    friend bool operator==(const QComplex& a, const QComplex& b) { return a.re == b.re && a.im == b.im; }

    /// |c|^2, exact.
    mpq_class norm() const { return re * re + im * im; }
    std::string str() const;
};

/// Parses "3", "-7/4", "0.125" or "1e-3" into an exact rational.
mpq_class parse_rational(const std::string& text);

/// Rational with numerator/denominator canonicalized, rendered as "p/q" or "p".
std::string to_string(const mpq_class& q);

}  // namespace kobasin
