#include "kobasin/poly.hpp"

#include <algorithm>
#include <functional>
#include <numbers>

#include "kobasin/errors.hpp"

namespace kobasin {

ComplexPoly to_double(const ExactPoly& p) {
    std::vector<cplx> c;
    for (const auto& v : p.coeffs()) c.push_back(v.to_double());
    return ComplexPoly(std::move(c));
}

ComplexBivar to_double(const ExactBivar& q) {
    ComplexBivar out;
    for (const auto& [key, v] : q.terms()) out.add_term(key.first, key.second, v.to_double());
    return out;
}

ExactPoly to_exact(const ComplexPoly& p) {
    std::vector<QComplex> c;
    for (const auto& v : p.coeffs()) c.push_back(QComplex::from_double(v));
    return ExactPoly(std::move(c));
}

ExactBivar to_exact(const ComplexBivar& q) {
    ExactBivar out;
    for (const auto& [key, v] : q.terms()) out.add_term(key.first, key.second, QComplex::from_double(v));
    return out;
}

double coeff_norm(const ComplexPoly& p) {
    double s = 0.0;
    for (const auto& c : p.coeffs()) s += std::abs(c);
    return s;
}

ComplexPoly from_roots(const std::vector<cplx>& rts) {
    ComplexPoly out({cplx(1.0)});
    for (const auto& r : rts) out = out * ComplexPoly({-r, cplx(1.0)});
    return out;
}

double cauchy_root(double lead, const std::vector<double>& lower, double extra_linear) {
    auto g = [&](double r) {
        double acc = 0.0;
        double rp = 1.0;
        for (double a : lower) {
            acc += a * rp;
            rp *= r;
        }
        // rp == r^d here
        return lead * rp - acc - extra_linear * r;
    };
    double sum = extra_linear;
    for (double a : lower) sum += a;
    if (sum == 0.0) return 0.0;
    double lo = 0.0;
    double hi = std::max(1.0, 1.0 + sum / lead);
    while (g(hi) <= 0.0) hi *= 2.0;
    for (int i = 0; i < 200 && hi - lo > 1e-15 * hi; ++i) {
        double mid = 0.5 * (lo + hi);
        (g(mid) > 0.0 ? hi : lo) = mid;
    }
    return hi;
}

namespace {

// Roots within merge_dist are merged. A root within cluster_dist of a cluster
// also joins it when the cluster centroid still meets the residual target: a
// multiple root splits by about sqrt(tol) under simultaneous iteration.
std::vector<Root> merge_close(std::vector<cplx> raw, double merge_dist, double cluster_dist,
                              const std::function<bool(cplx)>& exact_enough) {
    std::sort(raw.begin(), raw.end(), [](cplx a, cplx b) {
        return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
    });
    std::vector<Root> out;
    std::vector<bool> used(raw.size(), false);
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (used[i]) continue;
        cplx sum = raw[i];
        int mult = 1;
        used[i] = true;
        for (std::size_t j = i + 1; j < raw.size(); ++j) {
            if (used[j]) continue;
            const double gap = std::abs(raw[j] - raw[i]);
            const cplx joined = (sum + raw[j]) / static_cast<double>(mult + 1);
            if (gap < merge_dist || (gap < cluster_dist * (1.0 + std::abs(raw[i])) && exact_enough(joined))) {
                used[j] = true;
                sum += raw[j];
                ++mult;
            }
        }
        out.push_back({sum / static_cast<double>(mult), mult});
    }
    return out;
}

}  // namespace

std::vector<Root> roots_with_multiplicity(const ComplexPoly& p, const RootOptions& opt) {
    const int n = p.degree();
    if (p.is_zero() || n < 1) throw Error(ErrorKind::OutOfDomain, "roots of a constant polynomial");

    const double scale = 1.0 + coeff_norm(p);
    const double target = opt.tol * scale;

    if (n == 1) {
        cplx r = -p.coeff(0) / p.coeff(1);
        return {{r, 1}};
    }

    // Work with the monic polynomial for the stopping test; residual reported on p.
    std::vector<double> lower;
    for (int k = 0; k < n; ++k) lower.push_back(std::abs(p.coeff(k)));
    double radius = cauchy_root(std::abs(p.leading()), lower, 0.0);
    if (radius == 0.0) {
        // p = c z^n
        return {{cplx(0.0), n}};
    }

    const ComplexPoly dp = p.derivative();
    std::vector<cplx> z(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
        double theta = 2.0 * std::numbers::pi * k / n + 0.4;
        z[static_cast<std::size_t>(k)] = std::polar(radius, theta);
    }

    int iter = 0;
    for (; iter < opt.max_iter; ++iter) {
        bool all_done = true;
        for (std::size_t k = 0; k < z.size(); ++k) {
            cplx pv = p(z[k]);
            if (std::abs(pv) <= 1e-3 * target) continue;
            cplx dv = dp(z[k]);
            cplx ratio = dv == cplx{} ? cplx(1e-8 * radius) : pv / dv;
            cplx repulse{};
            for (std::size_t j = 0; j < z.size(); ++j) {
                if (j == k) continue;
                cplx diff = z[k] - z[j];
                if (diff != cplx{}) repulse += 1.0 / diff;
            }
            cplx denom = 1.0 - ratio * repulse;
            cplx step = denom == cplx{} ? ratio : ratio / denom;
            z[k] -= step;
            if (std::abs(step) > 1e-16 * (1.0 + std::abs(z[k]))) all_done = false;
        }
        if (all_done) break;
    }

    for (const auto& r : z)
        if (!(std::abs(p(r)) <= target))
            throw Error(ErrorKind::NonConvergence,
                        "root residual " + std::to_string(std::abs(p(r))) + " above target after " +
                            std::to_string(iter) + " iterations");

    auto merged = merge_close(std::move(z), 100.0 * opt.tol, std::sqrt(opt.tol),
                              [&](cplx c) { return std::abs(p(c)) <= target; });
    // Newton polish of simple roots; keep the step only if the residual drops.
    for (auto& r : merged) {
        if (r.multiplicity != 1) continue;
        for (int k = 0; k < 3; ++k) {
            cplx dv = dp(r.value);
            if (dv == cplx{}) break;
            cplx cand = r.value - p(r.value) / dv;
            if (std::abs(p(cand)) < std::abs(p(r.value))) r.value = cand;
            else break;
        }
    }
    return merged;
}

std::vector<cplx> roots(const ComplexPoly& p, const RootOptions& opt) {
    std::vector<cplx> out;
    for (const auto& r : roots_with_multiplicity(p, opt))
        for (int m = 0; m < r.multiplicity; ++m) out.push_back(r.value);
    return out;
}

}  // namespace kobasin
