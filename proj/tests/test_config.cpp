#include <doctest.h>

#include <filesystem>
#include <sstream>

#include "kobasin/cli.hpp"
#include "kobasin/errors.hpp"
#include "kobasin/io.hpp"

using namespace kobasin;
namespace fs = std::filesystem;

namespace {

std::string scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("kobasin_test_" + name);
    fs::remove_all(dir);
    return dir.string();
}

int cli(std::vector<std::string> args, std::string* out_text = nullptr, std::string* err_text = nullptr) {
    args.insert(args.begin(), "kobasin");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    if (out_text) *out_text = out.str();
    if (err_text) *err_text = err.str();
    return code;
}

}  // namespace

TEST_CASE("config round-trips through serialization") {
    RunConfig c;
    c.set("depth=6");
    c.set("map.L=12");
    c.set("sampling.seed=99");
    c.set("distance.p=[0.1,0,0.2,0]");
    c.set("mode=1d");
    const auto back = RunConfig::from_json(nlohmann::json::parse(c.canonical()));
    CHECK(back.canonical() == c.canonical());
    CHECK(back.hash() == c.hash());
    CHECK(back.integer("depth") == 6);
    CHECK(back.text("map.L") == "12");
    CHECK(back.text("mode") == "1d");
    CHECK(RunConfig().hash() != c.hash());
}

TEST_CASE("files may omit keys but not invent them") {
    const auto c = RunConfig::from_json({{"depth", 5}, {"sampling", {{"per_shell", 7}}}});
    CHECK(c.integer("depth") == 5);
    CHECK(c.integer("sampling.per_shell") == 7);
    CHECK(c.integer("sampling.n_max") == 12);
    CHECK_THROWS_AS(RunConfig::from_json({{"dept", 5}}), Error);
    CHECK_THROWS_AS(RunConfig::from_json({{"depth", "five"}}), Error);
    RunConfig d;
    CHECK_THROWS_AS(d.set("nope=1"), Error);
    CHECK_THROWS_AS(d.set("depth"), Error);
}

TEST_CASE("validation") {
    auto bad = [](const std::string& assignment) {
        RunConfig c;
        c.set(assignment);
        CHECK_THROWS_AS(c.validate(), Error);
    };
    bad("u.resolution=500");
    bad("slice.resolution=32");
    bad("slice.resolution=8192");
    bad("tol.root=0");
    bad("tol.merge=-1");
    bad("grid4d.resolution=4");
    bad("sampling.strategy=grid");
    bad("map.preset=mandelbrot");
    RunConfig ok;
    ok.set("u.resolution=1024");
    ok.set("grid4d.resolution=16");
    CHECK_NOTHROW(ok.validate());
}

TEST_CASE("maps from presets and custom coefficients") {
    RunConfig c;
    CHECK(c.map().hash() == maps::worked_example(10).hash());
    CHECK(c.eps_attract() == 0.03125);
    c.set("map.preset=product");
    CHECK(c.map().hash() == maps::product_squares().hash());
    CHECK(c.eps_attract() == 0.25);
    RunConfig custom;
    custom.set("map.preset=custom");
    custom.set("map.p=[\"0\",\"1/4\",\"1\"]");
    custom.set("map.q=[[0,2,\"1\"],[0,1,\"1/2\"],[2,0,\"10\"]]");
    CHECK(custom.map().hash() == maps::worked_example(10).hash());
}

TEST_CASE("help lists every key with its default") {
    const auto help = config_help();
    for (const auto& k : config_keys()) {
        CHECK_MESSAGE(help.find(k.key) != std::string::npos, k.key);
        CHECK_MESSAGE(help.find(k.fallback.dump()) != std::string::npos, k.key);
    }
    std::string out;
    CHECK(cli({"--help"}, &out) == kExitOk);
    CHECK(out.find("sampling.per_shell") != std::string::npos);
}

TEST_CASE("exit codes") {
    const auto dir = scratch("codes");
    std::string out, err;
    CHECK(cli({"verify-example", "--set", "output=" + dir}, &out) == kExitOk);
    CHECK(out.find("11/8") != std::string::npos);
    CHECK(cli({"verify-example", "-s", "output=" + dir, "-s", "example.L=40"}) == kExitFail);
    CHECK(cli({"frobnicate"}) == kExitConfig);
    CHECK(cli({}) == kExitConfig);
    CHECK(cli({"basin", "-s", "u.resolution=100"}, nullptr, &err) == kExitConfig);
    CHECK(nlohmann::json::parse(err).at("exit_code") == kExitConfig);
    CHECK(cli({"basin", "--config", dir + "/missing.json"}) == kExitConfig);
    CHECK(cli({"check", "-s", "output=" + dir, "-s", "map.preset=counterexample-1"}) == kExitFail);
    // Endpoints outside the basin.
    CHECK(cli({"distance", "-s", "output=" + dir, "-s", "distance.p=[3,0,0,0]"}) == kExitError);
    const auto e = read_json(dir + "/error.json");
    CHECK(e.at("error") == "OutOfDomain");
    CHECK(e.at("exit_code") == kExitError);
}

TEST_CASE("artifacts carry hashes and trees are checked against the map") {
    const auto dir = scratch("artifacts");
    REQUIRE(cli({"preimages", "-s", "output=" + dir, "-s", "depth=3"}) == kExitOk);
    RunConfig c;
    c.set("output=" + dir);
    c.set("depth=3");
    const auto tree = read_json(dir + "/preimages.json");
    CHECK(tree.at("config_hash") == c.hash());
    CHECK(tree.at("map_hash") == maps::worked_example(10).hash_hex());
    CHECK(read_file(dir + "/report.txt").find(c.hash()) != std::string::npos);

    const auto other = scratch("artifacts_other");
    CHECK(cli({"stable", "-s", "output=" + other, "-s", "depth=3", "--tree", dir + "/preimages.json"}) == kExitOk);
    CHECK(read_json(other + "/stable.json").at("config_hash").is_string());
    CHECK(cli({"stable", "-s", "output=" + other, "-s", "depth=3", "-s", "map.L=11", "--tree",
               dir + "/preimages.json"}) == kExitConfig);
    // A tree shallower than the configured depth is refused.
    CHECK(cli({"stable", "-s", "output=" + other, "-s", "depth=4", "--tree", dir + "/preimages.json"}) ==
          kExitConfig);

    const auto b = scratch("basin");
    REQUIRE(cli({"basin", "-s", "output=" + b, "-s", "u.resolution=128"}) == kExitOk);
    const auto side = read_json(b + "/basin.json");
    CHECK(side.at("resolution") == 128);
    CHECK(side.at("config_hash").get<std::string>().size() == 16);
    CHECK(read_file(b + "/basin.pgm").size() == std::string("P5\n128 128\n255\n").size() + 128 * 128);
}
