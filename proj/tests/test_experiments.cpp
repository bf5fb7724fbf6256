#include <doctest.h>

#include <cmath>
#include <sstream>

#include "kobasin/errors.hpp"
#include "kobasin/experiments.hpp"
#include "kobasin/io.hpp"

using namespace kobasin;

namespace {

const SkewProduct& example() {
    static const SkewProduct f = maps::worked_example(10);
    return f;
}

SamplingOptions small_sampling() {
    SamplingOptions s;
    s.per_shell = 3;
    s.n_max = 4;
    s.seed = 5;
    s.eps_attract = 0.03125;
    s.u_resolution = 256;
    s.slice_resolution = 128;
    s.base_samples = 16;
    return s;
}

struct Small {
    StableSeries series;
    PreimageTree tree;
    std::vector<StableGraph> graphs;
};

const Small& small() {
    static const Small s = [] {
        Small out;
        out.series = stable_manifold_series(example(), 12);
        TreeOptions t;
        t.eps_attract = 0.03125;
        out.tree = preimage_tree(example(), 4, t);
        out.graphs = local_stable_graphs(example(), out.series, out.tree, 33);
        return out;
    }();
    return s;
}

ExperimentReport run_small(unsigned threads) {
    const ParallelMap pool(threads);
    const auto samples = sample_basin(example(), small_sampling(), pool);
    EstimateOptions eo;
    eo.depths = {2, 4};
    eo.slice_resolution = 128;
    eo.grid = {0.03125, 500};
    return estimate_C(example(), small().series, small().tree, small().graphs, samples, eo, pool);
}

std::string csv_of(const ExperimentReport& r) {
    std::ostringstream os;
    r.write_csv(os);
    return os.str();
}

}  // namespace

TEST_CASE("random stream is the 64-bit Mersenne twister") {
    Rng a(42);
    std::mt19937_64 b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.next() == b());
    Rng c(1);
    const double u = c.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    Rng d(1);
    CHECK(d.uniform() == u);
    // Box-Muller draws have mean near 0 and variance near 1.
    Rng e(3);
    double m = 0.0, v = 0.0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        const double x = e.normal();
        m += x;
        v += x * x;
    }
    CHECK(std::abs(m / n) < 0.03);
    CHECK(std::abs(v / n - 1.0) < 0.05);
}

TEST_CASE("plateau trend labels") {
    CHECK(plateau_trend({1, 2, 3, 3, 3, 3, 3, 3}).label == "bounded");
    CHECK(plateau_trend({0, 0.5, 1, 1.5, 2, 2.5, 3}).label == "growing");
    CHECK(plateau_trend({0, 0.1, 0.2, 0.3, 0.4, 0.5}).label == "indeterminate");
    CHECK(plateau_trend({1, 2, 3}).label == "indeterminate");
    const auto t = plateau_trend({0, 0, 0, 1, 2, 3, 4, 5, 6});
    CHECK(t.slope == doctest::Approx(1.0));
    // NaN shells are skipped.
    CHECK(plateau_trend({1, NAN, 1, 1, 1, 1, 1, 1}).label == "bounded");
}

TEST_CASE("samples sit in their shells") {
    const auto samples = sample_basin(example(), small_sampling());
    CHECK(samples.size() == 15);
    for (const auto& s : samples) {
        const auto c = classify_point(example(), s.point, 0.03125, 500);
        CHECK(c.basin());
        CHECK(c.n == s.shell);
    }
    auto rays = small_sampling();
    rays.strategy = "ray";
    const auto f = maps::product_squares();
    rays.eps_attract = 0.25;
    for (const auto& s : sample_basin(f, rays)) CHECK(classify_point(f, s.point, 0.25, 500).n == s.shell);
    auto bad = small_sampling();
    bad.strategy = "grid";
    CHECK_THROWS_AS(sample_basin(example(), bad), Error);
}

TEST_CASE("small experiment: consistency, monotone K, determinism") {
    const auto r = run_small(1);
    REQUIRE(r.samples.size() == 15);
    CHECK(r.depths == std::vector<int>{2, 4});
    CHECK(r.verification_failures == 0);
    for (const auto& s : r.samples) {
        if (!s.ok) continue;
        CHECK(s.chain_upper >= s.proj_lower);
        CHECK(s.preimage_depth <= 4);
        for (std::size_t k = 1; k < s.upper_by_depth.size(); ++k)
            CHECK(s.upper_by_depth[k] <= s.upper_by_depth[k - 1]);
    }
    REQUIRE(r.c_by_depth.size() == 2);
    CHECK(r.c_by_depth[1] <= r.c_by_depth[0]);

    const auto again = run_small(1);
    CHECK(csv_of(r) == csv_of(again));
    CHECK(r.summary().dump() == again.summary().dump());
    CHECK(csv_of(run_small(3)) == csv_of(r));
}

TEST_CASE("csv layout") {
    ExperimentReport r;
    SampleRecord s;
    s.id = 0;
    s.shell = 2;
    s.point = {{0.1, -0.2}, {0.3, 0.0}};
    s.preimage_depth = 3;
    s.chain_upper = INFINITY;
    s.proj_lower = 0.25;
    s.status = "left domain, step 4";
    r.samples.push_back(s);
    const auto text = csv_of(r);
    std::istringstream in(text);
    std::string header, row;
    std::getline(in, header);
    std::getline(in, row);
    CHECK(header == "sample_id,shell_n,z_re,z_im,w_re,w_im,preimage_depth,chain_upper,proj_lower,method,status");
    CHECK(row == "0,2,0.10000000000000001,-0.20000000000000001,0.29999999999999999,0,3,inf,0.25,chain,left domain; step 4");
}

TEST_CASE("tree files round-trip and reject other maps") {
    const auto& t = small().tree;
    const auto j = tree_to_json(t, example().hash_hex(), "cfg");
    const auto back = tree_from_json(nlohmann::json::parse(j.dump()), example().hash_hex());
    REQUIRE(back.nodes.size() == t.nodes.size());
    for (std::size_t i = 0; i < t.nodes.size(); ++i) {
        CHECK(back.nodes[i].point == t.nodes[i].point);
        CHECK(back.nodes[i].depth == t.nodes[i].depth);
        CHECK(back.nodes[i].parent == t.nodes[i].parent);
    }
    CHECK(back.max_depth == t.max_depth);
    try {
        tree_from_json(j, maps::worked_example(11).hash_hex());
        FAIL("hash mismatch accepted");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Config);
    }
}

TEST_CASE("raster outputs") {
    const auto g = GridGeometry::square({}, 1.0, 4);
    const auto m = mask_from_predicate(g, [](cplx x) { return x.imag() > 0.0; });
    const auto bytes = pgm(m);
    const std::string head = "P5\n4 4\n255\n";
    REQUIRE(bytes.substr(0, head.size()) == head);
    // Top row is the largest imaginary part.
    CHECK(static_cast<unsigned char>(bytes[head.size()]) == 255);
    CHECK(static_cast<unsigned char>(bytes.back()) == 0);
    const auto img = render(m, {{cplx(0.5, 0.5)}}, {cplx(-0.5, -0.5), cplx(0.5, 0.5)});
    CHECK(img.ppm() == render(m, {{cplx(0.5, 0.5)}}, {cplx(-0.5, -0.5), cplx(0.5, 0.5)}).ppm());
    CHECK(img.ppm().substr(0, 3) == "P6\n");
    const auto side = raster_sidecar(m, 0.03, "abc", "def");
    CHECK(side.at("resolution") == 4);
    CHECK(side.at("map_hash") == "abc");
    CHECK(side.at("encoding").at("basin") == 255);
}

TEST_CASE("one-variable harness") {
    auto s = small_sampling();
    s.per_shell = 5;
    s.n_max = 6;
    const auto r = estimate_C_1d(example().p(), s, 6);
    CHECK(r.samples.size() == 35);
    for (const auto& x : r.samples) {
        CHECK(x.ok);
        CHECK(x.method == "slice-graph");
        CHECK(x.proj_lower <= kLowerSlack * x.chain_upper);
    }
}

TEST_CASE("fnv1a reference values") {
    CHECK(fnv1a("") == 14695981039346656037ULL);
    CHECK(hex64(fnv1a("a")) == "af63dc4c8601ec8c");
}
