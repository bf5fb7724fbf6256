#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "kobasin/dynamics.hpp"
#include "kobasin/errors.hpp"
#include "kobasin/preimage.hpp"

using namespace kobasin;

namespace {

const SkewProduct& example() {
    static const SkewProduct f = maps::worked_example(10);
    return f;
}

TreeOptions tree_opts(double root_tol = 1e-12) {
    TreeOptions t;
    t.root_tol = root_tol;
    t.eps_attract = 0.03125;
    return t;
}

const PreimageTree& tree6() {
    static const PreimageTree t = preimage_tree(example(), 6, tree_opts());
    return t;
}

}  // namespace

TEST_CASE("fiber preimages solve Q(z, w) = target") {
    const auto& f = example();
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int i = 0; i < 500; ++i) {
        const cplx z{u(rng), u(rng)}, t{u(rng), u(rng)};
        const auto ws = fiber_preimages_w(f.q(), z, t);
        REQUIRE(ws.size() == 2);
        for (cplx w : ws) CHECK(std::abs(f.q()(z, w) - t) < 1e-10);
    }
}

TEST_CASE("degree drop in the fiber is reported") {
    ComplexBivar q;
    q.add_term(1, 2, {1.0, 0.0});  // z w^2
    q.add_term(0, 1, {1.0, 0.0});
    CHECK_THROWS_AS(fiber_preimages_w(q, 0.0, 1.0), Error);
}

TEST_CASE("depth-1 preimages match the hand solution") {
    const auto& t = tree6();
    const std::vector<Point2> want{{0.0, -0.5}, {-0.25, {-0.25, 0.75}}, {-0.25, {-0.25, -0.75}}};
    REQUIRE(t.count_at_depth(1) == 3);
    for (const auto& p : want) {
        const auto idx = t.find(p, 1e-9);
        REQUIRE(idx.has_value());
        CHECK(t.nodes[static_cast<std::size_t>(*idx)].depth == 1);
        CHECK(t.nodes[static_cast<std::size_t>(*idx)].parent == 0);
    }
}

TEST_CASE("level sizes follow the fiber degrees") {
    // The root has 4 preimages, one of them itself; every other node has 4.
    const auto& t = tree6();
    std::size_t want = 3;
    CHECK(t.count_at_depth(0) == 1);
    for (int k = 1; k <= 6; ++k, want *= 4) CHECK(t.count_at_depth(k) == want);
    CHECK(t.dropped_non_basin == 0);
    CHECK(t.fiber_nodes().size() == 64);
}

TEST_CASE("every node returns to the origin and lies in the basin") {
    const auto& f = example();
    const auto& t = tree6();
    for (const auto& n : t.nodes) {
        Point2 x = n.point;
        for (int k = 0; k < n.depth; ++k) x = eval_skew(f, x);
        CHECK(max_modulus(x) < 1e-6 * std::max(1, n.depth));
        CHECK(classify_point(f, n.point, 0.03125, 500).basin());
        if (n.parent >= 0) CHECK(distance(eval_skew(f, n.point), t.nodes[static_cast<std::size_t>(n.parent)].point) <= 1e-9);
    }
}

TEST_CASE("nodes are distinct and paths reach the root") {
    const auto& t = tree6();
    auto nodes = t.nodes;
    std::sort(nodes.begin(), nodes.end(), [](const TreeNode& a, const TreeNode& b) { return a.point.z.real() < b.point.z.real(); });
    double closest = INFINITY;
    for (std::size_t i = 0; i < nodes.size(); ++i)
        for (std::size_t j = i + 1; j < nodes.size() && nodes[j].point.z.real() - nodes[i].point.z.real() < 1e-6; ++j)
            closest = std::min(closest, distance(nodes[i].point, nodes[j].point));
    CHECK(closest > t.merge_tol);
    for (int idx : {1, 17, 400, 4095}) {
        const auto path = t.path_to_root(idx);
        CHECK(path.front() == idx);
        CHECK(path.back() == 0);
        CHECK(static_cast<int>(path.size()) == t.nodes[static_cast<std::size_t>(idx)].depth + 1);
    }
}

TEST_CASE("tighter root tolerance moves nodes by less than 10 tol") {
    const auto loose = preimage_tree(example(), 4, tree_opts(1e-12));
    const auto tight = preimage_tree(example(), 4, tree_opts(1e-14));
    REQUIRE(loose.nodes.size() == tight.nodes.size());
    for (const auto& n : loose.nodes) {
        const auto m = tight.find(n.point, 1e-11);
        CHECK(m.has_value());
    }
}

TEST_CASE("chains through tree nodes follow the tree") {
    const auto& t = tree6();
    for (int idx : {3, 20, 300}) {
        const auto c = chain_from_tree(t, idx);
        CHECK(c.depth() == t.nodes[static_cast<std::size_t>(idx)].depth);
        CHECK(c.point() == t.nodes[static_cast<std::size_t>(idx)].point);
    }
}

TEST_CASE("local stable graphs") {
    const auto& f = example();
    const auto series = stable_manifold_series(f, 12);
    const auto t = preimage_tree(f, 4, tree_opts());
    const auto graphs = local_stable_graphs(f, series, t, 33);
    REQUIRE(graphs.size() == t.fiber_nodes().size());

    // The depth-1 graph through (0, -1/2).
    const auto it = std::find_if(graphs.begin(), graphs.end(), [](const StableGraph& g) {
        return g.depth == 1 && std::abs(g.anchor.w - cplx(-0.5, 0.0)) < 1e-9;
    });
    REQUIRE(it != graphs.end());
    CHECK(it->excluded.empty());
    CHECK(graph_invariance_residual(f, series, *it) < 1e-6);

    for (const auto& g : graphs) {
        CHECK(!g.base.empty());
        CHECK(graph_invariance_residual(f, series, g) < 1e-6);
    }

    // Distinct graphs stay apart over their common base.
    double closest = INFINITY;
    for (std::size_t a = 0; a < graphs.size(); ++a)
        for (std::size_t b = a + 1; b < graphs.size(); ++b)
            for (std::size_t slot = 0; slot < graphs[a].base.size(); slot += 7) {
                const auto other = graphs[b].slot_of(graphs[a].base[slot]);
                if (!other) continue;
                closest = std::min(closest, std::abs(graphs[a].value(slot) - graphs[b].value(*other)));
            }
    CHECK(closest > t.merge_tol);
}

TEST_CASE("chain continuation returns to its start") {
    const auto& f = example();
    const auto series = stable_manifold_series(f, 12);
    const auto& t = tree6();
    const auto seed = chain_from_tree(t, 3);
    SheetChain moved, back;
    REQUIRE(continue_chain_along(f, series, seed, seed.z.front() + cplx(0.01, 0.005), moved) == ContinuationStatus::Ok);
    // The moved chain still satisfies the fiber equations.
    for (int k = 0; k < moved.depth(); ++k) {
        const auto K = static_cast<std::size_t>(k);
        CHECK(std::abs(f.p()(moved.z[K]) - moved.z[K + 1]) < 1e-12);
        CHECK(std::abs(f.q()(moved.z[K], moved.w[K]) - moved.w[K + 1]) < 1e-10);
    }
    REQUIRE(continue_chain_along(f, series, moved, seed.z.front(), back) == ContinuationStatus::Ok);
    CHECK(std::abs(back.w.front() - seed.w.front()) < 1e-9);
}
