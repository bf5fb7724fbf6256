#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "kobasin/class_a.hpp"
#include "kobasin/dynamics.hpp"

using namespace kobasin;

namespace {

const Check* find_check(const MembershipReport& r, const std::string& name) {
    for (const auto* list : {&r.p_checks, &r.q_checks})
        for (const auto& c : *list)
            if (c.name == name) return &c;
    return nullptr;
}

ConditionOptions opts(int samples, int slice_resolution = 256) {
    ConditionOptions o;
    o.samples = samples;
    o.eps_attract = 0.03125;
    o.slice_resolution = slice_resolution;
    return o;
}

GridDomain u_grid(const SkewProduct& f, int res) {
    return basin_grid_1d(f.p(), GridGeometry::square({}, 2.0, res), {choose_attraction_radius(f), 500});
}

}  // namespace

TEST_CASE("worked example certificate in exact arithmetic") {
    const auto r = verify_example_bounds(10, 5);
    CHECK(r.star == mpq_class(11, 8));
    CHECK(r.starstar == mpq_class(89, 16));
    CHECK(r.statement == mpq_class(15, 8));
    CHECK(r.critical_value == mpq_class(89, 16));
    CHECK(r.star_pass);
    CHECK(r.starstar_pass);
    CHECK(r.statement_pass);
    CHECK(r.pass());
    // The two forms of the constraint are the same inequality.
    CHECK(r.statement - mpq_class(3, 2) == r.star - 1);
}

TEST_CASE("certificate verdicts ignore how the rationals are written") {
    for (auto [l, b] : {std::pair{10, 5}, std::pair{40, 5}, std::pair{10, 3}, std::pair{16, 4}}) {
        const auto x = verify_example_bounds(l, b);
        const auto y = verify_example_bounds(mpq_class(2 * l, 2), mpq_class(3 * b, 3));
        CHECK(x.star == y.star);
        CHECK(x.starstar == y.starstar);
        CHECK(x.pass() == y.pass());
    }
    CHECK(!verify_example_bounds(40, 5).pass());
    CHECK(!verify_example_bounds(10, 6).starstar_pass);
}

TEST_CASE("hypotheses hold for the worked example") {
    const auto r = check_hypotheses(maps::worked_example(10));
    for (const auto* list : {&r.p_checks, &r.q_checks})
        for (const auto& c : *list) CHECK_MESSAGE(c.verdict == Verdict::Pass, c.name);
}

TEST_CASE("counterexamples fail the gate with witnesses") {
    const auto one = check_hypotheses(maps::counterexample_one(mpq_class(1, 10)));
    const auto* c = find_check(one, "0 < |P'(0)|");
    REQUIRE(c != nullptr);
    CHECK(c->verdict == Verdict::Fail);
    CHECK(!c->witness.empty());
    CHECK(one.overall() == Verdict::Fail);

    const auto f2 = maps::counterexample_two(mpq_class(1, 10), mpq_class(1, 200), mpq_class(1, 100));
    const auto two = check_membership(f2, u_grid(f2, 256), opts(500));
    CHECK(two.overall() == Verdict::Fail);
    int failures = 0;
    for (const auto* list : {&two.p_checks, &two.q_checks})
        for (const auto& ch : *list)
            if (ch.verdict == Verdict::Fail) {
                ++failures;
                CHECK(!ch.witness.empty());
            }
    for (const auto& item : two.condition_c)
        if (item.verdict == Verdict::Fail) {
            ++failures;
            CHECK(!item.witness.empty());
        }
    CHECK(failures > 0);
}

TEST_CASE("condition C on the worked example") {
    const auto f = maps::worked_example(10);
    const auto items = check_condition_c(f, u_grid(f, 256), opts(500));
    REQUIRE(items.size() == 4);
    for (const auto& it : items) CHECK_MESSAGE(it.verdict == Verdict::Pass, it.witness);
    CHECK(items[0].examined > 0);
}

TEST_CASE("critical point landing on the origin fails item 3") {
    ExactPoly p({QComplex(0), QComplex(mpq_class(1, 4)), QComplex(0), QComplex(1)});
    ExactBivar q;
    q.add_term(0, 3, QComplex(mpq_class(1, 2)));
    q.add_term(0, 2, QComplex(-1));
    q.add_term(0, 1, QComplex(mpq_class(1, 2)));
    const SkewProduct f(p, q);
    const auto items = check_condition_c(f, u_grid(f, 128), opts(200, 128));
    REQUIRE(items.size() == 4);
    CHECK(items[2].verdict == Verdict::Fail);
}

TEST_CASE("finer runs never flip PASS and FAIL directly") {
    const auto f = maps::worked_example(10);
    const auto coarse = check_condition_c(f, u_grid(f, 128), opts(200, 128));
    const auto fine = check_condition_c(f, u_grid(f, 512), opts(2000, 512));
    for (std::size_t i = 0; i < coarse.size(); ++i) {
        if (coarse[i].verdict == Verdict::Pass) CHECK(fine[i].verdict != Verdict::Fail);
        if (coarse[i].verdict == Verdict::Fail) CHECK(fine[i].verdict != Verdict::Pass);
    }
}

TEST_CASE("basin lies in |z| < 5/4, |w| < 5") {
    const auto f = maps::worked_example(10);
    const GridOptions go{0.03125, 500};
    const auto u = u_grid(f, 128);
    for (std::size_t i = 0; i < u.mask.size(); i += 37) {
        if (!u.is_basin(i)) continue;
        const cplx z = u.geom.cell_center(i);
        CHECK(std::abs(z) <= 1.25 + u.geom.cell_diagonal());
        const auto s = basin_grid_slice(f, z, GridGeometry::square({}, 6.0, 128), go);
        for (std::size_t c = 0; c < s.grid.mask.size(); ++c)
            if (s.grid.is_basin(c)) CHECK(std::abs(s.grid.geom.cell_center(c)) <= 5.0 + s.grid.geom.cell_diagonal());
    }
}

TEST_CASE("membership report serializes") {
    const auto f = maps::worked_example(10);
    const auto r = check_membership(f, u_grid(f, 128), opts(100, 128));
    const auto j = r.to_json();
    CHECK(j.at("map_hash") == f.hash_hex());
    CHECK(j.contains("condition_c"));
    CHECK(r.table().find("PASS") != std::string::npos);
}
