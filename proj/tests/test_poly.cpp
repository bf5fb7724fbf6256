#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "kobasin/errors.hpp"
#include "kobasin/poly.hpp"
#include "kobasin/skew_product.hpp"

using namespace kobasin;

namespace {

// Hausdorff distance between two finite point sets.
double hausdorff(const std::vector<cplx>& a, const std::vector<cplx>& b) {
    auto one_way = [](const std::vector<cplx>& x, const std::vector<cplx>& y) {
        double worst = 0.0;
        for (cplx p : x) {
            double best = INFINITY;
            for (cplx q : y) best = std::min(best, std::abs(p - q));
            worst = std::max(worst, best);
        }
        return worst;
    };
    return std::max(one_way(a, b), one_way(b, a));
}

// Term-by-term evaluation, independent of the dense table.
cplx naive_eval(const ComplexBivar& q, cplx z, cplx w) {
    cplx acc{};
    for (const auto& [key, c] : q.terms()) acc += c * std::pow(z, key.first) * std::pow(w, key.second);
    return acc;
}

}  // namespace

TEST_CASE("roots of a polynomial expanded from known roots") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    std::uniform_int_distribution<int> deg(1, 6);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<cplx> want;
        const int d = deg(rng);
        for (int k = 0; k < d; ++k) want.push_back({u(rng), u(rng)});
        const auto p = from_roots(want);
        REQUIRE(p.degree() == d);
        RootOptions opt;
        const auto got = roots(p, opt);
        REQUIRE(got.size() == want.size());
        CHECK(hausdorff(got, want) <= 10.0 * opt.tol);
    }
}

TEST_CASE("double roots are merged with multiplicity") {
    const auto p = from_roots({{0.5, 0.0}, {0.5, 0.0}, {-1.0, 0.25}});
    const auto r = roots_with_multiplicity(p);
    REQUIRE(r.size() == 2);
    int total = 0;
    for (const auto& root : r) {
        total += root.multiplicity;
        if (root.multiplicity == 2) CHECK(std::abs(root.value - cplx(0.5, 0.0)) < 1e-5);
    }
    CHECK(total == 3);
}

TEST_CASE("roots of z^2 + z/4") {
    const ComplexPoly p{{0.0, 0.0}, {0.25, 0.0}, {1.0, 0.0}};
    auto r = roots(p);
    std::sort(r.begin(), r.end(), [](cplx a, cplx b) { return a.real() < b.real(); });
    CHECK(std::abs(r[0] - cplx(-0.25, 0.0)) < 1e-14);
    CHECK(std::abs(r[1]) < 1e-14);
}

TEST_CASE("bivariate evaluation agrees with term-by-term sums") {
    ComplexBivar q;
    q.add_term(0, 2, {1.0, 0.0});
    q.add_term(0, 1, {0.5, 0.0});
    q.add_term(2, 0, {10.0, 0.0});
    q.add_term(3, 1, {-0.25, 2.0});
    q.add_term(1, 3, {0.0, 1.5});
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int i = 0; i < 500; ++i) {
        const cplx z{u(rng), u(rng)}, w{u(rng), u(rng)};
        const cplx want = naive_eval(q, z, w);
        CHECK(std::abs(q(z, w) - want) <= 1e-12 * (1.0 + std::abs(want)));
    }
    // Cancellation removes the term.
    q.add_term(3, 1, {0.25, -2.0});
    CHECK(q.coeff(3, 1) == cplx{});
    CHECK(q.degree_z() == 2);
}

TEST_CASE("partial derivatives") {
    ComplexBivar q;
    q.add_term(2, 3, {2.0, 0.0});
    q.add_term(1, 0, {1.0, 1.0});
    CHECK(q.partial_w().coeff(2, 2) == cplx(6.0, 0.0));
    CHECK(q.partial_z().coeff(1, 3) == cplx(4.0, 0.0));
    CHECK(q.partial_z().coeff(0, 0) == cplx(1.0, 1.0));
}

TEST_CASE("exact arithmetic on the worked example") {
    const auto f = maps::worked_example(10);
    // Q(3/4, -1/4) = 9L/16 - 1/16 = 89/16.
    const QComplex v = f.q_exact()(QComplex(mpq_class(3, 4)), QComplex(mpq_class(-1, 4)));
    CHECK(v == QComplex(mpq_class(89, 16)));
    CHECK(parse_rational("20/2") == parse_rational("10"));
    CHECK(parse_rational("0.125") == mpq_class(1, 8));
    CHECK(to_string(mpq_class(11, 8)) == "11/8");
    CHECK_THROWS_AS(parse_rational("x"), Error);
}

TEST_CASE("escape certificate holds just outside the radius") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> angle(0.0, 2.0 * M_PI), frac(0.0, 1.0);
    for (const auto& f : {maps::worked_example(10), maps::product_squares(),
                          maps::counterexample_two(mpq_class(1, 10), mpq_class(1, 200), mpq_class(1, 100))}) {
        const double R = f.escape_radius();
        CHECK(R > 0.0);
        int bad = 0;
        for (int i = 0; i < 10000; ++i) {
            // max(|z|, |w|) = 1.01 R with the other modulus uniform below it.
            const double big = 1.01 * R, small = big * frac(rng);
            const bool z_big = (i % 2) == 0;
            const cplx a = std::polar(z_big ? big : small, angle(rng));
            const cplx b = std::polar(z_big ? small : big, angle(rng));
            if (!escape_certificate_holds(f, {a, b})) ++bad;
        }
        CHECK(bad == 0);
    }
}

TEST_CASE("escape radius of the worked example is frozen") {
    const auto& e = maps::worked_example(10).escape();
    CHECK(e.radius == doctest::Approx(9.547).epsilon(1e-3));
    CHECK(e.radius == doctest::Approx(2.0 * std::max(e.z_bound, e.w_bound)));
}

TEST_CASE("map hashes distinguish maps and are stable") {
    const auto a = maps::worked_example(10), b = maps::worked_example(mpq_class(20, 2)), c = maps::worked_example(11);
    CHECK(a.hash() == b.hash());
    CHECK(a.hash() != c.hash());
    CHECK(a.hash_hex() == "47bc4b69d3fcfa64");
}
