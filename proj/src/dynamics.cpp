#include "kobasin/dynamics.hpp"

#include <numbers>

#include "kobasin/errors.hpp"

namespace kobasin {

Classification classify_point(const SkewProduct& f, const Point2& x0, double eps_attract, int max_iter) {
    const double radius = f.escape_radius();
    Point2 x = x0;
    for (int n = 0; n <= max_iter; ++n) {
        double m = max_modulus(x);
        if (m <= eps_attract) return {Classification::Kind::Basin, n};
        if (m > radius || !std::isfinite(m)) return {Classification::Kind::Escaped, n};
        if (n < max_iter) x = f(x);
    }
    return {Classification::Kind::Undecided, max_iter};
}

Classification classify_point_1d(const ComplexPoly& p, cplx z, double eps_attract, int max_iter,
                                 double escape_radius) {
    for (int n = 0; n <= max_iter; ++n) {
        double m = std::abs(z);
        if (m <= eps_attract) return {Classification::Kind::Basin, n};
        if (m > escape_radius || !std::isfinite(m)) return {Classification::Kind::Escaped, n};
        if (n < max_iter) z = p(z);
    }
    return {Classification::Kind::Undecided, max_iter};
}

double escape_radius_1d(const ComplexPoly& p) {
    const int d = p.degree();
    if (d < 2) throw Error(ErrorKind::HypothesisViolation, "degree of P below 2");
    std::vector<double> lower;
    for (int k = 0; k < d; ++k) lower.push_back(k == 1 ? 0.0 : std::abs(p.coeff(k)));
    return 2.0 * cauchy_root(std::abs(p.leading()), lower, std::abs(p.coeff(1)) + 1.0);
}

bool certify_attraction_radius(const SkewProduct& f, double eps) {
    constexpr int kSamples = 50;
    constexpr int kSteps = 5;
    for (int s = 0; s < kSamples; ++s) {
        double theta = 2.0 * std::numbers::pi * s / kSamples;
        double phi = 2.0 * std::numbers::pi * ((s * 7) % kSamples) / kSamples + 0.3;
        double inner = eps * ((s % 5) / 4.0);
        Point2 x = (s % 2 == 0) ? Point2{std::polar(eps, theta), std::polar(inner, phi)}
                                : Point2{std::polar(inner, phi), std::polar(eps, theta)};
        double m = max_modulus(x);
        for (int k = 0; k < kSteps; ++k) {
            x = f(x);
            double next = max_modulus(x);
            if (!(next < m) && m > 0.0) return false;
            m = next;
        }
    }
    return true;
}

double choose_attraction_radius(const SkewProduct& f, double start) {
    double eps = start;
    for (int k = 0; k <= 40; ++k, eps *= 0.5)
        if (certify_attraction_radius(f, eps)) return eps;
    throw Error(ErrorKind::HypothesisViolation, "no certified attraction neighborhood found");
}

void require_decided(const GridDomain& grid, const std::string& what, double limit) {
    const double frac = grid.undecided_fraction();
    if (frac > limit)
        throw Error(ErrorKind::NonConvergence, what + ": " + std::to_string(100.0 * frac) +
                                                   "% of cells Undecided; raise max_iter");
}

GridDomain basin_grid_1d(const ComplexPoly& p, const GridGeometry& geom, const GridOptions& opt,
                         const ParallelMap& pool) {
    if (std::abs(p.coeff(0)) != 0.0)
        throw Error(ErrorKind::HypothesisViolation, "P(0) != 0");
    if (!(std::abs(p.coeff(1)) < 1.0))
        throw Error(ErrorKind::HypothesisViolation, "|P'(0)| >= 1: 0 is not attracting");
    const double radius = escape_radius_1d(p);
    GridDomain g;
    g.geom = geom;
    g.mask.resize(geom.size());
    g.steps.resize(geom.size());
    const auto rows = static_cast<std::size_t>(geom.resolution);
    pool.for_each(rows, [&](std::size_t j) {
        for (int i = 0; i < geom.resolution; ++i) {
            std::size_t idx = geom.index(i, static_cast<int>(j));
            auto c = classify_point_1d(p, geom.cell_center(idx), opt.eps_attract, opt.max_iter, radius);
            g.mask[idx] = c.basin() ? CellClass::Basin : c.escaped() ? CellClass::Escaped : CellClass::Undecided;
            g.steps[idx] = c.n;
        }
    });
    label_components(g);
    return g;
}

SliceDomain basin_grid_slice(const SkewProduct& f, cplx z, const GridGeometry& geom, const GridOptions& opt,
                             const ParallelMap& pool) {
    SliceDomain s;
    s.z = z;
    GridDomain& g = s.grid;
    g.geom = geom;
    g.mask.resize(geom.size());
    g.steps.resize(geom.size());
    const auto rows = static_cast<std::size_t>(geom.resolution);
    pool.for_each(rows, [&](std::size_t j) {
        for (int i = 0; i < geom.resolution; ++i) {
            std::size_t idx = geom.index(i, static_cast<int>(j));
            auto c = classify_point(f, {z, geom.cell_center(idx)}, opt.eps_attract, opt.max_iter);
            g.mask[idx] = c.basin() ? CellClass::Basin : c.escaped() ? CellClass::Escaped : CellClass::Undecided;
            g.steps[idx] = c.n;
        }
    });
    label_components(g);
    return s;
}

GridGeometry fit_slice_box(const SkewProduct& f, cplx z, const GridOptions& opt, int fine_resolution,
                           int coarse_resolution) {
    // Every slice lies in |w| <= w_bound; thin slices near the boundary of U can
    // slip between coarse cell centers, so retry finer before giving up.
    const double W = f.escape().w_bound * (1.0 + 1e-9) + 1e-12;
    for (int res = coarse_resolution; res <= 4 * coarse_resolution; res *= 2) {
        auto coarse = basin_grid_slice(f, z, GridGeometry::square({}, W, res), opt);
        double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
        for (std::size_t idx = 0; idx < coarse.grid.geom.size(); ++idx) {
            if (coarse.grid.mask[idx] == CellClass::Escaped) continue;
            cplx c = coarse.grid.geom.cell_center(idx);
            xmin = std::min(xmin, c.real());
            xmax = std::max(xmax, c.real());
            ymin = std::min(ymin, c.imag());
            ymax = std::max(ymax, c.imag());
        }
        if (xmin > xmax) continue;
        const double pad = 2.5 * coarse.grid.geom.dx();
        cplx center{0.5 * (xmin + xmax), 0.5 * (ymin + ymax)};
        double half = 0.5 * std::max(xmax - xmin, ymax - ymin) + pad;
        half = std::min(half, W);
        return GridGeometry::square(center, half, fine_resolution);
    }
    return GridGeometry::square({}, W, fine_resolution);
}

MultiplierReport check_multipliers(const SkewProduct& f) {
    MultiplierReport r;
    r.a = f.a();
    r.b = f.b();
    r.a_positive = r.a > 0.0;
    r.b_positive = r.b > 0.0;
    r.a_attracting = r.a < 1.0;
    r.b_attracting = r.b < 1.0;
    r.a_lt_b = r.a < r.b;
    r.attracting = r.a_attracting && r.b_attracting;
    return r;
}

cplx StableSeries::operator()(cplx z) const {
    cplx acc{};
    for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = acc * z + *it;
    return acc;
}

cplx StableSeries::derivative(cplx z) const {
    cplx acc{};
    for (std::size_t k = coeffs.size(); k-- > 1;) acc = acc * z + coeffs[k] * static_cast<double>(k);
    return acc;
}

namespace {

using Series = std::vector<cplx>;

Series mul_trunc(const Series& a, const Series& b, std::size_t len) {
    Series out(len, cplx{});
    for (std::size_t i = 0; i < std::min(a.size(), len); ++i) {
        if (a[i] == cplx{}) continue;
        for (std::size_t j = 0; j < b.size() && i + j < len; ++j) out[i + j] += a[i] * b[j];
    }
    return out;
}

}  // namespace

double series_residual(const SkewProduct& f, const StableSeries& s, double r, int samples) {
    double worst = 0.0;
    for (int k = 0; k < samples; ++k) {
        cplx z = std::polar(r, 2.0 * std::numbers::pi * k / samples);
        worst = std::max(worst, std::abs(f.q()(z, s(z)) - s(f.p()(z))));
    }
    return worst;
}

StableSeries stable_manifold_series(const SkewProduct& f, int order, const SeriesOptions& opt) {
    if (order < 2) throw Error(ErrorKind::OutOfDomain, "series order must be >= 2");
    const auto len = static_cast<std::size_t>(order + 1);
    const cplx a_lin = f.p().coeff(1);
    const cplx b_lin = f.q().coeff(0, 1);

    // Powers of P as truncated series.
    Series p_series(len, cplx{});
    for (int k = 0; k <= std::min(order, f.p().degree()); ++k) p_series[static_cast<std::size_t>(k)] = f.p().coeff(k);
    std::vector<Series> p_pow(len);
    p_pow[0] = Series(len, cplx{});
    p_pow[0][0] = 1.0;
    for (std::size_t i = 1; i < len; ++i) p_pow[i] = mul_trunc(p_pow[i - 1], p_series, len);

    const int dw = f.q().degree_w();
    Series c(len, cplx{});
    cplx a_pow = a_lin;
    for (int k = 2; k <= order; ++k) {
        a_pow *= a_lin;
        const auto ku = static_cast<std::size_t>(k);
        // [z^k] f_{<k}(P(z))
        cplx rhs{};
        for (int i = 2; i < k; ++i) rhs += c[static_cast<std::size_t>(i)] * p_pow[static_cast<std::size_t>(i)][ku];
        // [z^k] Q(z, f_{<k}(z)); f_{<k} has no z^k term so b_lin contributes nothing here.
        std::vector<Series> f_pow(static_cast<std::size_t>(dw + 1));
        f_pow[0] = Series(len, cplx{});
        f_pow[0][0] = 1.0;
        for (int m = 1; m <= dw; ++m) f_pow[static_cast<std::size_t>(m)] = mul_trunc(f_pow[static_cast<std::size_t>(m - 1)], c, len);
        cplx lhs{};
        for (const auto& [key, coef] : f.q().terms()) {
            int j = key.first;
            if (j > k) continue;
            lhs += coef * f_pow[static_cast<std::size_t>(key.second)][static_cast<std::size_t>(k - j)];
        }
        cplx denom = b_lin - a_pow;
        cplx num = rhs - lhs;
        if (std::abs(denom) < opt.resonance_tol) {
            if (std::abs(num) < opt.resonance_tol) {
                c[ku] = 0.0;
                continue;
            }
            throw Error(ErrorKind::ResonanceDegeneracy,
                        "b_lin - a_lin^" + std::to_string(k) + " vanishes with nonzero right-hand side");
        }
        c[ku] = num / denom;
    }

    StableSeries s;
    s.coeffs = std::move(c);
    s.order = order;

    auto ok = [&](double r) {
        if (series_residual(f, s, r) > opt.residual_tol) return false;
        for (int k = 0; k < 64; ++k) {
            cplx z = std::polar(r, 2.0 * std::numbers::pi * k / 64);
            if (!(std::abs(f.p()(z)) < r)) return false;
        }
        return true;
    };
    double hi = opt.epsilon_max;
    double lo = hi;
    while (!ok(lo)) {
        hi = lo;
        lo *= 0.8;
        if (lo < 1e-9) throw Error(ErrorKind::NonConvergence, "no radius meets the series residual tolerance");
    }
    if (hi != lo) {
        for (int it = 0; it < 40; ++it) {
            double mid = 0.5 * (lo + hi);
            (ok(mid) ? lo : hi) = mid;
        }
    }
    s.epsilon = lo;
    return s;
}

}  // namespace kobasin
