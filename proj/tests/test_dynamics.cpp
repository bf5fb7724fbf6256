#include <doctest.h>

#include <cmath>
#include <random>

#include "kobasin/dynamics.hpp"
#include "kobasin/errors.hpp"

using namespace kobasin;

namespace {

const SkewProduct& example() {
    static const SkewProduct f = maps::worked_example(10);
    return f;
}

// Plain orbit loop: entry time into the eps-bidisc, or -1.
int entry_time(const SkewProduct& f, Point2 x, double eps, int max_iter) {
    const double R = f.escape_radius();
    for (int n = 0; n <= max_iter; ++n) {
        const double m = std::max(std::abs(x.z), std::abs(x.w));
        if (m <= eps) return n;
        if (m > R) return -1;
        x = {x.z * x.z + 0.25 * x.z, x.w * x.w + 0.5 * x.w + 10.0 * x.z * x.z};
    }
    return -2;
}

using Series = std::vector<cplx>;

Series mul(const Series& a, const Series& b, std::size_t n) {
    Series out(n, 0.0);
    for (std::size_t i = 0; i < a.size() && i < n; ++i)
        for (std::size_t j = 0; j < b.size() && i + j < n; ++j) out[i + j] += a[i] * b[j];
    return out;
}

// Strong stable manifold of (z^2 + z/4, w^2 + w/2 + 10 z^2) by order-by-order
// matching of Q(z, f(z)) = f(P(z)) with truncated power series.
Series oracle_series(int order) {
    const std::size_t n = static_cast<std::size_t>(order) + 1;
    Series c(n, 0.0);
    const Series P{0.0, 0.25, 1.0};
    for (std::size_t k = 2; k < n; ++k) {
        auto residual = [&](const Series& f) {
            Series q = mul(f, f, n);
            for (std::size_t i = 0; i < n; ++i) q[i] += 0.5 * f[i];
            q[2] += 10.0;
            Series comp(n, 0.0), pw{1.0};
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = 0; j < n; ++j) comp[j] += f[i] * (j < pw.size() ? pw[j] : 0.0);
                pw = mul(pw, P, n);
            }
            return q[k] - comp[k];
        };
        // Linear in c_k at order k: coefficient b - a^k.
        const cplx r0 = residual(c);
        c[k] = -r0 / (0.5 - std::pow(0.25, static_cast<double>(k)));
    }
    return c;
}

}  // namespace

TEST_CASE("classification agrees with a plain orbit loop") {
    const auto& f = example();
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    for (int i = 0; i < 2000; ++i) {
        const Point2 x{{u(rng), u(rng)}, {u(rng), u(rng)}};
        const auto c = classify_point(f, x, 0.03125, 500);
        const int n = entry_time(f, x, 0.03125, 500);
        if (n >= 0) {
            CHECK(c.basin());
            CHECK(c.n == n);
        } else if (n == -1) {
            CHECK(c.escaped());
        }
    }
}

TEST_CASE("classification is monotone in max_iter") {
    const auto& f = example();
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(-1.2, 1.2);
    for (int i = 0; i < 2000; ++i) {
        const Point2 x{{u(rng), u(rng)}, {u(rng), u(rng)}};
        const auto lo = classify_point(f, x, 0.03125, 8);
        const auto hi = classify_point(f, x, 0.03125, 500);
        if (lo.basin()) CHECK(hi.basin());
        if (lo.escaped()) CHECK(hi.escaped());
        if (lo.basin() || lo.escaped()) CHECK(lo.n == hi.n);
    }
}

TEST_CASE("attraction radius choices are frozen") {
    CHECK(choose_attraction_radius(example()) == 0.03125);
    CHECK(choose_attraction_radius(maps::product_squares()) == 0.25);
    CHECK(certify_attraction_radius(example(), 0.03125));
}

TEST_CASE("U raster of z^2 + z/4") {
    const auto u = basin_grid_1d(example().p(), GridGeometry::square({}, 2.0, 256), {0.03125, 500});
    CHECK(u.n_components == 1);
    CHECK(hole_count(u, 0) == 0);
    CHECK(u.count(CellClass::Undecided) == 0);
    for (std::size_t i = 0; i < u.mask.size(); ++i) {
        const double r = std::abs(u.geom.cell_center(i));
        if (r <= 0.7) CHECK(u.is_basin(i));
        if (u.is_basin(i)) CHECK(r <= 1.25 + u.geom.cell_diagonal());
    }
}

// Points of the slice over z: the fiber preimages of (P^k(z), 0) along the
// orbit, by the quadratic formula, once |P^k(z)| is inside the attraction radius.
std::vector<cplx> slice_witnesses(cplx z, double eps) {
    std::vector<cplx> orbit{z};
    while (std::abs(orbit.back()) > eps && orbit.size() < 40) orbit.push_back(orbit.back() * orbit.back() + 0.25 * orbit.back());
    std::vector<cplx> ws{0.0};
    for (std::size_t k = orbit.size() - 1; k-- > 0;) {
        std::vector<cplx> next;
        for (cplx t : ws) {
            const cplx root = std::sqrt(0.25 - 4.0 * (10.0 * orbit[k] * orbit[k] - t));
            next.push_back(0.5 * (-0.5 + root));
            next.push_back(0.5 * (-0.5 - root));
        }
        ws = next.size() > 64 ? std::vector<cplx>(next.begin(), next.begin() + 64) : next;
    }
    return ws;
}

TEST_CASE("slices are nonempty exactly over U and stay in the bidisc") {
    const auto& f = example();
    const GridOptions go{0.03125, 500};
    const double R = f.escape_radius();
    const auto u = basin_grid_1d(f.p(), GridGeometry::square({}, 2.0, 128), go);
    std::mt19937_64 rng(13);
    int tested = 0, in_u = 0;
    for (int t = 0; t < 200; ++t) {
        const std::size_t cell = static_cast<std::size_t>(rng() % u.mask.size());
        // Skip cells within one cell of the boundary of U on either side.
        bool ambiguous = false;
        const int i = static_cast<int>(cell % 128), j = static_cast<int>(cell / 128);
        for (int di = -1; di <= 1 && !ambiguous; ++di)
            for (int dj = -1; dj <= 1 && !ambiguous; ++dj) {
                const int a = i + di, b = j + dj;
                if (a < 0 || b < 0 || a >= 128 || b >= 128) continue;
                if (u.is_basin(u.geom.index(a, b)) != u.is_basin(cell)) ambiguous = true;
            }
        if (ambiguous) continue;
        ++tested;
        const cplx z = u.geom.cell_center(cell);
        const auto s = basin_grid_slice(f, z, fit_slice_box(f, z, go, 64), go);
        if (!s.empty()) CHECK(u.is_basin(cell));
        if (u.is_basin(cell)) {
            ++in_u;
            // The slice itself is never empty; a raster only resolves it while
            // the entry time of z is small, since later slices thin out.
            int witnesses = 0;
            for (cplx w : slice_witnesses(z, go.eps_attract))
                if (entry_time(f, {z, w}, go.eps_attract, 500) >= 0) ++witnesses;
            CHECK(witnesses > 0);
            if (u.steps[cell] <= 3) CHECK(!s.empty());
        }
        for (std::size_t c = 0; c < s.grid.mask.size(); ++c)
            if (s.grid.is_basin(c)) CHECK(std::abs(s.grid.geom.cell_center(c)) <= R);
    }
    CHECK(tested > 150);
    CHECK(in_u > 20);
}

TEST_CASE("slices map forward into slices") {
    const auto& f = example();
    const GridOptions go{0.03125, 500};
    std::mt19937_64 rng(17);
    for (cplx z : {cplx(0.0, 0.0), cplx(0.3, 0.2), cplx(-0.5, 0.1), cplx(0.1, -0.6)}) {
        const auto s = basin_grid_slice(f, z, fit_slice_box(f, z, go, 128), go);
        const cplx pz = f.p()(z);
        int checked = 0;
        for (int t = 0; t < 100000 && checked < 100; ++t) {
            const std::size_t c = static_cast<std::size_t>(rng() % s.grid.mask.size());
            if (!s.grid.is_basin(c)) continue;
            const cplx w = s.grid.geom.cell_center(c);
            const cplx qw = f.q()(z, w);
            CHECK(entry_time(f, {pz, qw}, go.eps_attract, 500) >= 0);
            ++checked;
        }
        CHECK(checked == 100);
    }
}

TEST_CASE("slice components are simply connected") {
    const auto& f = example();
    const GridOptions go{0.03125, 500};
    const double R = f.escape_radius();
    for (int res : {256, 512})
        for (cplx z : {cplx(0.0, 0.0), cplx(0.4, 0.3), cplx(-0.7, 0.2)}) {
            const auto s = basin_grid_slice(f, z, GridGeometry::square({}, R, res), go);
            REQUIRE(!s.empty());
            for (int label = 0; label < s.grid.n_components; ++label) CHECK(hole_count(s.grid, label) == 0);
        }
}

TEST_CASE("hole counting on model masks") {
    const auto g = GridGeometry::square({}, 1.0, 128);
    const auto annulus = mask_from_predicate(g, [](cplx x) { return std::abs(x) > 0.3 && std::abs(x) < 0.9; });
    CHECK(annulus.n_components == 1);
    CHECK(hole_count(annulus, 0) == 1);
    const auto disc = mask_from_predicate(g, [](cplx x) { return std::abs(x) < 0.9; });
    CHECK(hole_count(disc, 0) == 0);
    const auto two = mask_from_predicate(g, [](cplx x) { return std::abs(x - 0.5) < 0.3 || std::abs(x + 0.5) < 0.3; });
    CHECK(two.n_components == 2);
}

TEST_CASE("stable manifold series of the worked example") {
    const auto& f = example();
    const auto s = stable_manifold_series(f, 12);
    CHECK(std::abs(s.coeffs[2] - cplx(-160.0 / 7.0, 0.0)) < 1e-9);
    const auto oracle = oracle_series(12);
    for (int k = 0; k <= 12; ++k) {
        const cplx want = oracle[static_cast<std::size_t>(k)];
        CHECK(std::abs(s.coeffs[static_cast<std::size_t>(k)] - want) <= 1e-9 * (1.0 + std::abs(want)));
    }
    CHECK(s.epsilon == doctest::Approx(0.02846).epsilon(1e-3));
    for (double r : {0.25 * s.epsilon, 0.5 * s.epsilon}) CHECK(series_residual(f, s, r) < 1e-8);
    // Truncation error scales like r^(order+1).
    const double r1 = series_residual(f, s, 0.5 * s.epsilon), r2 = series_residual(f, s, 0.25 * s.epsilon);
    CHECK(r2 < r1);
}

TEST_CASE("stable series vanishes when Q(z, 0) = 0") {
    const auto s = stable_manifold_series(maps::product_squares(), 8);
    for (cplx c : s.coeffs) CHECK(std::abs(c) == 0.0);
}

TEST_CASE("Undecided guard") {
    GridDomain g;
    g.geom = GridGeometry::square({}, 1.0, 64);
    g.mask.assign(g.geom.size(), CellClass::Basin);
    CHECK_NOTHROW(require_decided(g, "test"));
    for (std::size_t i = 0; i < g.mask.size() / 50; ++i) g.mask[i] = CellClass::Undecided;
    CHECK_THROWS_AS(require_decided(g, "test"), Error);
}
