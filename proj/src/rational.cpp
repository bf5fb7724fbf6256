#include "kobasin/rational.hpp"

#include <cctype>

#include "kobasin/errors.hpp"

namespace kobasin {

QComplex& QComplex::operator/=(const QComplex& o) {
    mpq_class n = o.norm();
    if (n == 0) throw Error(ErrorKind::OutOfDomain, "exact division by zero");
    mpq_class r = (re * o.re + im * o.im) / n;
    mpq_class i = (im * o.re - re * o.im) / n;
    re = std::move(r);
    im = std::move(i);
    return *this;
}

std::string to_string(const mpq_class& q) {
    mpq_class c(q);
    c.canonicalize();
    return c.get_str();
}

std::string QComplex::str() const {
    if (im == 0) return to_string(re);
    return to_string(re) + (im < 0 ? " - " : " + ") + to_string(abs(im)) + "i";
}

namespace {

mpz_class pow10(long e) {
    mpz_class out = 1;
    for (long i = 0; i < e; ++i) out *= 10;
    return out;
}

}  // namespace

mpq_class parse_rational(const std::string& raw) {
    std::string text;
    for (char c : raw)
        if (!std::isspace(static_cast<unsigned char>(c))) text += c;
    if (text.empty()) throw Error(ErrorKind::Config, "empty rational");

    auto slash = text.find('/');
    if (slash != std::string::npos) {
        mpq_class num = parse_rational(text.substr(0, slash));
        mpq_class den = parse_rational(text.substr(slash + 1));
        if (den == 0) throw Error(ErrorKind::Config, "zero denominator in '" + raw + "'");
        mpq_class out = num / den;
        out.canonicalize();
        return out;
    }

    long exponent = 0;
    auto epos = text.find_first_of("eE");
    std::string mant = text;
    if (epos != std::string::npos) {
        try {
            exponent = std::stol(text.substr(epos + 1));
        } catch (const std::exception&) {
            throw Error(ErrorKind::Config, "bad exponent in '" + raw + "'");
        }
        mant = text.substr(0, epos);
    }
    bool negative = false;
    if (!mant.empty() && (mant[0] == '-' || mant[0] == '+')) {
        negative = mant[0] == '-';
        mant = mant.substr(1);
    }
    std::string digits;
    long frac_digits = 0;
    bool seen_dot = false;
    for (char c : mant) {
        if (c == '.') {
            if (seen_dot) throw Error(ErrorKind::Config, "bad rational '" + raw + "'");
            seen_dot = true;
        } else if (std::isdigit(static_cast<unsigned char>(c))) {
            digits += c;
            if (seen_dot) ++frac_digits;
        } else {
            throw Error(ErrorKind::Config, "bad rational '" + raw + "'");
        }
    }
    if (digits.empty()) throw Error(ErrorKind::Config, "bad rational '" + raw + "'");

    mpq_class out(mpz_class(digits, 10), 1);
    long scale = exponent - frac_digits;
    if (scale > 0) out *= mpq_class(pow10(scale));
    if (scale < 0) out /= mpq_class(pow10(-scale));
    if (negative) out = -out;
    out.canonicalize();
    return out;
}

}  // namespace kobasin
