#pragma once

#include <map>
#include <utility>
#include <vector>

#include "kobasin/rational.hpp"
#include "kobasin/types.hpp"

namespace kobasin {

namespace detail {
inline bool is_zero(const cplx& c) { return c == cplx{}; }
inline bool is_zero(const QComplex& c) { return c.is_zero(); }
}  // namespace detail

/// Univariate polynomial, coefficients indexed by power (constant term first).
/// The zero polynomial has no stored coefficients and reports degree 0.
template <class T>
class Poly {
public:
    Poly() = default;
    explicit Poly(std::vector<T> coeffs) : coeffs_(std::move(coeffs)) { normalize(); }
    Poly(std::initializer_list<T> coeffs) : coeffs_(coeffs) { normalize(); }

    const std::vector<T>& coeffs() const { return coeffs_; }
    int degree() const { return coeffs_.empty() ? 0 : static_cast<int>(coeffs_.size()) - 1; }
    bool is_zero() const { return coeffs_.empty(); }

    T coeff(int k) const {
        if (k < 0 || k >= static_cast<int>(coeffs_.size())) return T{};
        return coeffs_[static_cast<std::size_t>(k)];
    }
    T leading() const { return coeffs_.empty() ? T{} : coeffs_.back(); }

    /// Horner evaluation.
    T operator()(const T& x) const {
        T acc{};
        for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) {
            acc *= x;
            acc += *it;
        }
        return acc;
    }

    Poly derivative() const {
        std::vector<T> out;
        for (std::size_t k = 1; k < coeffs_.size(); ++k) out.push_back(coeffs_[k] * T(static_cast<int>(k)));
        return Poly(std::move(out));
    }

    friend Poly operator+(const Poly& a, const Poly& b) {
        std::vector<T> out(std::max(a.coeffs_.size(), b.coeffs_.size()));
        for (std::size_t k = 0; k < out.size(); ++k) out[k] = a.coeff(static_cast<int>(k)) + b.coeff(static_cast<int>(k));
        return Poly(std::move(out));
    }
    friend Poly operator-(const Poly& a, const Poly& b) {
        std::vector<T> out(std::max(a.coeffs_.size(), b.coeffs_.size()));
        for (std::size_t k = 0; k < out.size(); ++k) out[k] = a.coeff(static_cast<int>(k)) - b.coeff(static_cast<int>(k));
        return Poly(std::move(out));
    }
    friend Poly operator*(const Poly& a, const Poly& b) {
        if (a.is_zero() || b.is_zero()) return {};
        std::vector<T> out(a.coeffs_.size() + b.coeffs_.size() - 1);
        for (std::size_t i = 0; i < a.coeffs_.size(); ++i)
            for (std::size_t j = 0; j < b.coeffs_.size(); ++j) out[i + j] += a.coeffs_[i] * b.coeffs_[j];
        return Poly(std::move(out));
    }
    friend bool operator==(const Poly& a, const Poly& b) { return a.coeffs_ == b.coeffs_; }

private:
    void normalize() {
        while (!coeffs_.empty() && detail::is_zero(coeffs_.back())) coeffs_.pop_back();
    }

    std::vector<T> coeffs_;
};

/// Bivariate polynomial Q(z, w) = sum c_{jk} z^j w^k, stored sparsely by (j, k).
template <class T>
class BivarPoly {
public:
    using Key = std::pair<int, int>;  // (z-power, w-power)

    BivarPoly() = default;

    void add_term(int j, int k, const T& c) {
        T& slot = terms_[{j, k}];
        slot += c;
        if (detail::is_zero(slot)) terms_.erase({j, k});
        rebuild_dense();
    }

    const std::map<Key, T>& terms() const { return terms_; }
    bool is_zero() const { return terms_.empty(); }

    T coeff(int j, int k) const {
        auto it = terms_.find({j, k});
        return it == terms_.end() ? T{} : it->second;
    }

    int degree_z() const {
        int d = 0;
        for (const auto& [key, c] : terms_) d = std::max(d, key.first);
        return d;
    }
    int degree_w() const {
        int d = 0;
        for (const auto& [key, c] : terms_) d = std::max(d, key.second);
        return d;
    }

    T operator()(const T& z, const T& w) const {
        // Horner in w, then in z, over the dense table.
        T acc{};
        for (auto row = dense_.rbegin(); row != dense_.rend(); ++row) {
            acc *= w;
            T inner{};
            for (auto c = row->rbegin(); c != row->rend(); ++c) {
                inner *= z;
                inner += *c;
            }
            acc += inner;
        }
        return acc;
    }

    /// Q_j(w): the coefficient of z^j, as a polynomial in w.
    Poly<T> q_j(int j) const {
        std::vector<T> c(static_cast<std::size_t>(degree_w() + 1));
        for (const auto& [key, v] : terms_)
            if (key.first == j) c[static_cast<std::size_t>(key.second)] += v;
        return Poly<T>(std::move(c));
    }

    /// Q(z, .) at a fixed z, as a polynomial in w.
    Poly<T> in_w(const T& z) const {
        std::vector<T> c(static_cast<std::size_t>(degree_w() + 1));
        for (int k = 0; k <= degree_w(); ++k) c[static_cast<std::size_t>(k)] = slice_coeff(z, k);
        return Poly<T>(std::move(c));
    }

    /// Rebuilds Q from its family Q_j.
    static BivarPoly from_q_family(const std::vector<Poly<T>>& family) {
        BivarPoly out;
        for (std::size_t j = 0; j < family.size(); ++j)
            for (int k = 0; k <= family[j].degree(); ++k)
                if (!detail::is_zero(family[j].coeff(k))) out.add_term(static_cast<int>(j), k, family[j].coeff(k));
        return out;
    }

    BivarPoly partial_w() const {
        BivarPoly out;
        for (const auto& [key, c] : terms_)
            if (key.second > 0) out.add_term(key.first, key.second - 1, c * T(key.second));
        return out;
    }
    BivarPoly partial_z() const {
        BivarPoly out;
        for (const auto& [key, c] : terms_)
            if (key.first > 0) out.add_term(key.first - 1, key.second, c * T(key.first));
        return out;
    }

    friend bool operator==(const BivarPoly& a, const BivarPoly& b) { return a.terms_ == b.terms_; }

private:
    // sum_j c_{jk} z^j for a fixed k
    T slice_coeff(const T& z, int k) const {
        T acc{};
        T zp(1);
        int last = 0;
        for (const auto& [key, c] : terms_) {
            if (key.second != k) continue;
            for (; last < key.first; ++last) zp *= z;
            acc += c * zp;
        }
        return acc;
    }

    void rebuild_dense() {
        dense_.assign(static_cast<std::size_t>(degree_w() + 1), std::vector<T>(static_cast<std::size_t>(degree_z() + 1)));
        if (terms_.empty()) dense_.clear();
        for (const auto& [key, c] : terms_) dense_[static_cast<std::size_t>(key.second)][static_cast<std::size_t>(key.first)] = c;
    }

    std::map<Key, T> terms_;
    std::vector<std::vector<T>> dense_;  // [w-power][z-power]
};

using ComplexPoly = Poly<cplx>;
using ExactPoly = Poly<QComplex>;
using ComplexBivar = BivarPoly<cplx>;
using ExactBivar = BivarPoly<QComplex>;

ComplexPoly to_double(const ExactPoly& p);
ComplexBivar to_double(const ExactBivar& q);
ExactPoly to_exact(const ComplexPoly& p);
ExactBivar to_exact(const ComplexBivar& q);

/// Sum of coefficient moduli.
double coeff_norm(const ComplexPoly& p);

/// Expands prod (x - r_i).
ComplexPoly from_roots(const std::vector<cplx>& roots);

struct Root {
    cplx value;
    int multiplicity = 1;
};

struct RootOptions {
    double tol = 1e-12;
    int max_iter = 500;
};

/// All `degree` roots, repeated by multiplicity. Aberth-Ehrlich simultaneous
/// iteration from perturbed roots of unity scaled by the Cauchy root bound.
/// Each root satisfies |p(r)| <= tol * (1 + sum |c_k|); roots closer than
/// 100 * tol are merged, and so are roots within sqrt(tol) whose centroid meets
/// the residual target (a multiple root). Throws NonConvergence when the residual
/// target is not met.
std::vector<cplx> roots(const ComplexPoly& p, const RootOptions& opt = {});
std::vector<Root> roots_with_multiplicity(const ComplexPoly& p, const RootOptions& opt = {});

/// Positive root of |c_d| r^d - sum_{k<d} A_k r^k - extra_linear * r (the
/// Cauchy polynomial). Unique by Descartes' rule; found by bisection.
double cauchy_root(double lead, const std::vector<double>& lower, double extra_linear);

}  // namespace kobasin
