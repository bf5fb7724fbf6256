#include "kobasin/skew_product.hpp"

#include <cstdio>
#include <sstream>

#include "kobasin/errors.hpp"

namespace kobasin {

namespace {

std::uint64_t fnv1a(const std::string& s, std::uint64_t h = 1469598103934665603ULL) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace

EscapeRadius compute_escape_radius(const ComplexPoly& p, const ComplexBivar& q) {
    const int d = p.degree();
    if (d < 2) throw Error(ErrorKind::HypothesisViolation, "degree of P is " + std::to_string(d) + " < 2");
    for (const auto& [key, c] : q.terms()) {
        if (key.first >= 1 && key.second >= d)
            throw Error(ErrorKind::HypothesisViolation,
                        "deg Q_" + std::to_string(key.first) + " >= d (term z^" + std::to_string(key.first) +
                            " w^" + std::to_string(key.second) + ")");
        if (key.second > d)
            throw Error(ErrorKind::HypothesisViolation, "deg_w Q exceeds d = " + std::to_string(d));
    }
    const cplx lead_q = q.coeff(0, d);
    if (lead_q == cplx{}) throw Error(ErrorKind::HypothesisViolation, "Q_0 has degree below d");

    std::vector<double> lower_p;
    for (int k = 0; k < d; ++k) lower_p.push_back(k == 1 ? 0.0 : std::abs(p.coeff(k)));
    // |P(z)| - |z| >= |c_d| r^d - sum_{k != 1} |c_k| r^k - (|c_1| + 1) r
    double z_bound = cauchy_root(std::abs(p.leading()), lower_p, std::abs(p.coeff(1)) + 1.0);

    std::vector<double> lower_q(static_cast<std::size_t>(d), 0.0);
    for (const auto& [key, c] : q.terms())
        if (key.second < d) lower_q[static_cast<std::size_t>(key.second)] += std::abs(c) * std::pow(z_bound, key.first);
    double lin = lower_q[1] + 1.0;
    lower_q[1] = 0.0;
    double w_bound = cauchy_root(std::abs(lead_q), lower_q, lin);

    return {2.0 * std::max(z_bound, w_bound), z_bound, w_bound};
}

bool escape_certificate_holds(const SkewProduct& f, const Point2& x) {
    const auto& e = f.escape();
    if (max_modulus(x) <= e.radius) return true;
    double az = std::abs(x.z);
    if (az > e.z_bound) return std::abs(f.p()(x.z)) > az;
    return std::abs(f.q()(x.z, x.w)) > std::abs(x.w);
}

SkewProduct::SkewProduct(ExactPoly p, ExactBivar q)
    : p_exact_(std::move(p)), q_exact_(std::move(q)), p_(to_double(p_exact_)), q_(to_double(q_exact_)) {
    dp_ = p_.derivative();
    dq_dw_ = q_.partial_w();
    dq_dz_ = q_.partial_z();
    a_ = std::abs(p_.coeff(1));
    b_ = std::abs(q_.coeff(0, 1));
    try {
        escape_ = compute_escape_radius(p_, q_);
    } catch (const Error& e) {
        escape_error_ = e.what();
    }
    std::ostringstream os;
    for (const auto& c : p_exact_.coeffs()) os << "p:" << c.re.get_str() << "," << c.im.get_str() << ";";
    for (const auto& [key, c] : q_exact_.terms())
        os << "q:" << key.first << "," << key.second << ":" << c.re.get_str() << "," << c.im.get_str() << ";";
    hash_ = fnv1a(os.str());
}

SkewProduct SkewProduct::from_double(const ComplexPoly& p, const ComplexBivar& q) {
    return SkewProduct(to_exact(p), to_exact(q));
}

const EscapeRadius& SkewProduct::escape() const {
    if (!escape_) throw Error(ErrorKind::HypothesisViolation, escape_error_);
    return *escape_;
}

std::string SkewProduct::hash_hex() const {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash_));
    return buf;
}

std::string SkewProduct::describe() const {
    std::ostringstream os;
    os << "P(z) =";
    for (int k = 0; k <= p_exact_.degree(); ++k) {
        if (p_exact_.coeff(k).is_zero()) continue;
        os << " + (" << p_exact_.coeff(k).str() << ") z^" << k;
    }
    os << "; Q(z,w) =";
    for (const auto& [key, c] : q_exact_.terms())
        os << " + (" << c.str() << ") z^" << key.first << " w^" << key.second;
    return os.str();
}

namespace maps {

SkewProduct worked_example(const mpq_class& L) {
    ExactPoly p({QComplex(0), QComplex(mpq_class(1, 4)), QComplex(1)});
    ExactBivar q;
    q.add_term(0, 2, QComplex(1));
    q.add_term(0, 1, QComplex(mpq_class(1, 2)));
    q.add_term(2, 0, QComplex(L));
    return {std::move(p), std::move(q)};
}

SkewProduct counterexample_one(const mpq_class& a) {
    ExactPoly p({QComplex(0), QComplex(0), QComplex(1)});
    ExactBivar q;
    q.add_term(0, 2, QComplex(1));
    q.add_term(1, 0, QComplex(a));
    return {std::move(p), std::move(q)};
}

SkewProduct counterexample_two(const mpq_class& a, const mpq_class& b, const mpq_class& c) {
    ExactPoly p({QComplex(0), QComplex(a), QComplex(1)});
    ExactBivar q;
    q.add_term(0, 2, QComplex(1));
    q.add_term(0, 1, QComplex(c));
    q.add_term(1, 0, QComplex(b));
    return {std::move(p), std::move(q)};
}

SkewProduct product_squares() {
    ExactPoly p({QComplex(0), QComplex(0), QComplex(1)});
    ExactBivar q;
    q.add_term(0, 2, QComplex(1));
    return {std::move(p), std::move(q)};
}

}  // namespace maps

}  // namespace kobasin
