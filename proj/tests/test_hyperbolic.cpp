#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "kobasin/dynamics.hpp"
#include "kobasin/errors.hpp"
#include "kobasin/hyperbolic.hpp"

using namespace kobasin;

namespace {

// Poincare distance with density 1 at the origin.
double poincare(cplx a, cplx b) { return std::atanh(std::abs(a - b) / std::abs(1.0 - std::conj(a) * b)); }

DensityField unit_disc(int res) {
    const auto g = GridGeometry::square({}, 1.0, res);
    return density_field(mask_from_predicate(g, [](cplx x) { return std::abs(x) < 1.0; }), 0);
}

cplx random_in(std::mt19937_64& rng, const std::function<bool(cplx)>& inside, double half) {
    std::uniform_real_distribution<double> u(-half, half);
    for (;;) {
        const cplx x{u(rng), u(rng)};
        if (inside(x)) return x;
    }
}

}  // namespace

TEST_CASE("closed-form disc distance") {
    CHECK(std::abs(disc_distance(0.0, 0.5).upper - 0.549306) < 1e-6);
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-0.7, 0.7);
    for (int i = 0; i < 200; ++i) {
        const cplx a{u(rng), u(rng)}, b{u(rng), u(rng)};
        const auto e = disc_distance(a, b);
        CHECK(e.lower == e.upper);
        CHECK(e.upper == doctest::Approx(poincare(a, b)).epsilon(1e-12));
        CHECK(disc_distance(b, a).upper == doctest::Approx(e.upper).epsilon(1e-14));
        CHECK(disc_distance_radius(2.0 * a, 2.0 * b, 2.0) == doctest::Approx(e.upper).epsilon(1e-12));
    }
}

TEST_CASE("density field invariants") {
    const auto field = unit_disc(128);
    const double half_diag = std::hypot(field.geom.half_x, field.geom.half_y);
    REQUIRE(field.simply_connected());
    for (std::size_t i = 0; i < field.inside.size(); ++i) {
        if (!field.inside[i]) continue;
        CHECK(field.lower[i] > 0.0);
        CHECK(field.lower[i] <= field.upper[i]);
        CHECK(field.upper[i] <= 4.0 * field.lower[i] * (1.0 + 1e-12));
        CHECK(field.delta[i] <= half_diag);
        // True density 1/(1 - |x|^2) lies inside the bracket away from the rim,
        // where raster cells stick out of the disc.
        const double r = std::abs(field.geom.cell_center(i));
        if (1.0 - r < 2.0 * field.geom.cell_diagonal()) continue;
        const double rho = 1.0 / (1.0 - r * r);
        CHECK(field.lower[i] <= rho * (1.0 + 1e-9));
        CHECK(field.upper[i] >= rho * (1.0 - 1e-9));
    }
    const auto g = GridGeometry::square({}, 1.0, 128);
    const auto annulus = mask_from_predicate(g, [](cplx x) { return std::abs(x) > 0.3 && std::abs(x) < 0.9; });
    const auto af = density_field(annulus, 0);
    CHECK(!af.simply_connected());
    for (std::size_t i = 0; i < af.inside.size(); ++i)
        if (af.inside[i]) CHECK(af.lower[i] == 0.0);
}

TEST_CASE("unit disc calibration") {
    std::vector<double> up;
    for (int res : {128, 256, 512, 1024}) {
        const auto e = slice_distance(unit_disc(res), cplx(0.0), cplx(0.5));
        up.push_back(e.upper);
        CHECK(e.lower <= 0.549306 * kLowerSlack);
    }
    for (std::size_t k = 1; k < up.size(); ++k) CHECK(up[k] <= up[k - 1]);
    CHECK(up.back() <= 2.0 * std::atanh(0.5));
    CHECK(up.back() >= 0.549);
    CHECK(up.back() <= 1.1 * std::atanh(0.5));
    // Frozen values.
    CHECK(up[0] == doctest::Approx(0.5951).epsilon(1e-3));
    CHECK(up[3] == doctest::Approx(0.5642).epsilon(1e-3));
}

TEST_CASE("larger domains give smaller distances") {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> u(-0.3, 0.3), r(0.5, 0.9), ang(0.0, 2.0 * M_PI);
    const auto g = GridGeometry::square({}, 1.0, 128);
    for (int trial = 0; trial < 50; ++trial) {
        const cplx c{u(rng), u(rng)};
        const double rb = r(rng);
        const cplx dir = std::polar(1.0, ang(rng));
        const double cut = -0.5 * rb * (0.2 + 0.6 * std::abs(u(rng)) / 0.3);
        auto in_b = [&](cplx x) { return std::abs(x - c) < rb && std::abs(x) < 0.98; };
        auto in_a = [&](cplx x) { return in_b(x) && ((x - c) * std::conj(dir)).real() > cut && std::abs(x - c) < 0.8 * rb; };
        const auto a = density_field(mask_from_predicate(g, in_a), 0);
        const auto b = density_field(mask_from_predicate(g, in_b), 0);
        for (std::size_t i = 0; i < a.inside.size(); ++i)
            if (a.inside[i]) CHECK(b.upper[i] <= a.upper[i]);
        const cplx p = random_in(rng, in_a, 1.0), q = random_in(rng, in_a, 1.0);
        if (!a.inside[g.locate(p)] || !a.inside[g.locate(q)]) continue;
        const auto ea = slice_distance(a, p, q), eb = slice_distance(b, p, q);
        CHECK(eb.upper <= ea.upper + 1e-12);
    }
}

TEST_CASE("slice distances are symmetric and satisfy the triangle inequality") {
    const auto& f = maps::worked_example(10);
    const GridOptions go{0.03125, 500};
    const auto s = basin_grid_slice(f, 0.0, fit_slice_box(f, 0.0, go, 128), go);
    const auto field = density_field(s.grid, 0);
    double max_edge = 0.0;
    for (std::size_t i = 0; i < field.inside.size(); ++i)
        if (field.inside[i]) max_edge = std::max(max_edge, field.upper[i] * field.geom.cell_diagonal());
    std::mt19937_64 rng(41);
    std::vector<std::size_t> cells;
    for (std::size_t i = 0; i < field.inside.size(); ++i)
        if (field.inside[i]) cells.push_back(i);
    for (int t = 0; t < 30; ++t) {
        const auto p = cells[rng() % cells.size()], q = cells[rng() % cells.size()], r = cells[rng() % cells.size()];
        const auto pq = slice_distance(field, p, q), qp = slice_distance(field, q, p);
        CHECK(pq.upper == qp.upper);
        CHECK(pq.lower == qp.lower);
        const auto pr = slice_distance(field, p, r), qr = slice_distance(field, q, r);
        CHECK(pr.upper <= pq.upper + qr.upper + 2.0 * max_edge);
        CHECK(pq.lower <= pq.upper);
    }
}

TEST_CASE("slice maps do not increase distance") {
    const auto& f = maps::worked_example(10);
    const GridOptions go{0.03125, 500};
    std::mt19937_64 rng(43);
    for (cplx z : {cplx(0.0), cplx(0.3, 0.2), cplx(-0.4, -0.1)}) {
        const auto src = basin_grid_slice(f, z, fit_slice_box(f, z, go, 256), go);
        const cplx pz = f.p()(z);
        const auto dst = basin_grid_slice(f, pz, fit_slice_box(f, pz, go, 256), go);
        const auto fs = density_field(src.grid, 0);
        const int pairs = 15;
        int checked = 0;
        for (int t = 0; t < 200000 && checked < pairs; ++t) {
            const auto a = static_cast<std::size_t>(rng() % fs.inside.size());
            const auto b = static_cast<std::size_t>(rng() % fs.inside.size());
            if (!fs.inside[a] || !fs.inside[b]) continue;
            const cplx w1 = fs.geom.cell_center(a), w2 = fs.geom.cell_center(b);
            const cplx v1 = f.q()(z, w1), v2 = f.q()(z, w2);
            if (!dst.grid.geom.contains(v1) || !dst.grid.geom.contains(v2)) continue;
            const int l1 = dst.grid.labels[dst.grid.geom.locate(v1)], l2 = dst.grid.labels[dst.grid.geom.locate(v2)];
            if (l1 < 0 || l1 != l2) continue;
            const auto before = slice_distance(fs, a, b);
            const auto after = slice_distance(density_field(dst.grid, l1), v1, v2);
            CHECK(after.lower <= kLowerSlack * before.upper);
            ++checked;
        }
        CHECK(checked == pairs);
    }
}

TEST_CASE("methods bracket each other on the bidisc") {
    const auto f = maps::product_squares();
    std::mt19937_64 rng(47);
    std::uniform_real_distribution<double> u(-0.6, 0.6);
    const auto zg = GridGeometry::square({}, 1.0, 20), wg = GridGeometry::square({}, 1.0, 20);
    const auto mask = basin_mask_4d(f, zg, wg, 0.25, 500);
    const auto w_slice = unit_disc(256);
    for (int t = 0; t < 10; ++t) {
        const cplx z{u(rng), u(rng)};
        const Point2 p{z, {u(rng), u(rng)}}, q{z, {u(rng), u(rng)}};
        const double exact = std::max(poincare(p.z, q.z), poincare(p.w, q.w));
        const auto proj = projection_lower(f, p, q);
        CHECK(proj.lower == doctest::Approx(exact).epsilon(1e-12));
        const auto sl = slice_distance(w_slice, p.w, q.w);
        std::vector<double> lowers{proj.lower, sl.lower / kLowerSlack}, uppers{exact, sl.upper};
        try {
            const auto d4 = polydisc_distance_4d(mask, p, q);
            lowers.push_back(d4.lower / kLowerSlack);
            uppers.push_back(d4.upper);
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::Disconnected);
        }
        const double lo = *std::max_element(lowers.begin(), lowers.end());
        const double hi = *std::min_element(uppers.begin(), uppers.end());
        CHECK(lo <= kLowerSlack * hi);
    }
}

TEST_CASE("4D search respects its node cap") {
    const auto f = maps::product_squares();
    const auto g = GridGeometry::square({}, 1.0, 16);
    const auto mask = basin_mask_4d(f, g, g, 0.25, 500);
    CHECK_THROWS_AS(polydisc_distance_4d(mask, {0.0, 0.0}, {0.1, 0.1}, 1000), Error);
}
