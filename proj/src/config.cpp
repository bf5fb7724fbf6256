#include "kobasin/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "kobasin/dynamics.hpp"
#include "kobasin/errors.hpp"
#include "kobasin/io.hpp"
#include "kobasin/rational.hpp"

namespace kobasin {

using nlohmann::json;

const std::vector<ConfigKey>& config_keys() {
    static const std::vector<ConfigKey> keys{
        {"map.preset", "worked-example", "worked-example | counterexample-1 | counterexample-2 | product | custom"},
        {"map.L", "10", "worked example: coefficient of z^2 in Q"},
        {"map.a", "1/10", "counterexamples: a"},
        {"map.b", "1/200", "counterexample-2: b"},
        {"map.c", "1/100", "counterexample-2: c"},
        {"map.p", json::array(), "custom P: coefficients c_0..c_d, each \"re\" or [\"re\", \"im\"]"},
        {"map.q", json::array(), "custom Q: terms [j, k, \"re\", \"im\"] for c z^j w^k"},
        {"u.half", 2.0, "half-width of the square U box centered at 0"},
        {"u.resolution", 512, "U grid cells per side (power of two, 64..4096)"},
        {"slice.resolution", 256, "slice grid cells per side (power of two, 64..4096)"},
        {"slice.z", json::array({0.0, 0.0}), "slice base point [re, im] for `slice`"},
        {"grid4d.resolution", 0, "4D cross-check cells per axis for `distance` (0 = off, at most 48)"},
        {"eps_attract", 0.0, "attraction polydisc radius (0 = automatic)"},
        {"max_iter", 500, "iteration cap for classification"},
        {"depth", 8, "preimage tree depth K"},
        {"depths", json::array({4, 6, 8}), "experiment: depths swept for the K monotonicity check (entries above depth are dropped)"},
        {"series.order", 12, "stable-manifold series order"},
        {"graphs.resolution", 33, "local stable graph grid cells per side"},
        {"tol.root", 1e-12, "polynomial root tolerance"},
        {"tol.merge", 1e-9, "preimage merge tolerance"},
        {"tol.branch", 1e-4, "minimum |dQ/dw| along a continued sheet, relative"},
        {"tol.newton", 1e-13, "Newton residual tolerance in sheet continuation"},
        {"condition.dilation", 2.0, "critical-point patch radius in slice cells"},
        {"condition.samples", 10000, "boundary cells examined for the first condition item"},
        {"condition.margin", 1e-9, "float-mode orbit margin from the origin"},
        {"sampling.strategy", "slice", "slice | ray"},
        {"sampling.per_shell", 100, "samples per entry-time shell"},
        {"sampling.n_max", 12, "largest shell"},
        {"sampling.seed", 1, "RNG seed (mt19937_64)"},
        {"sampling.base_samples", 64, "slice strategy: number of base points"},
        {"chain.leg2_resolution", 64, "grid for the distance along a sheet (power of two, 64..4096)"},
        {"chain.candidates", 64, "cap on sheet-leg evaluations per sample and depth"},
        {"distance.p", json::array({0.0, 0.0, 0.0, 0.0}), "`distance` first point [z_re, z_im, w_re, w_im]"},
        {"distance.q", json::array({0.0, 0.0, 0.0, 0.0}), "`distance` second point"},
        {"mode", "2d", "experiment mode: 2d | 1d"},
        {"unresolved_limit", 0.05, "experiment fails above this unresolved fraction unless the trend is growing"},
        {"example.L", "10", "`verify-example`: L"},
        {"example.B", "5", "`verify-example`: B"},
        {"threads", 1, "worker threads"},
        {"output", "out", "output directory"},
    };
    return keys;
}

namespace {

json::json_pointer pointer(const std::string& key) {
    std::string p = "/" + key;
    std::replace(p.begin(), p.end(), '.', '/');
    return json::json_pointer(p);
}

const ConfigKey* find_key(const std::string& key) {
    for (const auto& k : config_keys())
        if (k.key == key) return &k;
    return nullptr;
}

bool same_kind(const json& fallback, const json& v) {
    if (fallback.is_number_integer()) return v.is_number_integer();
    if (fallback.is_number()) return v.is_number();
    return fallback.type() == v.type();
}

void absorb(RunConfig& cfg, const json& j, const std::string& prefix) {
    if (!j.is_object()) throw Error(ErrorKind::Config, "configuration must be a JSON object");
    for (const auto& [name, value] : j.items()) {
        const std::string key = prefix.empty() ? name : prefix + "." + name;
        if (find_key(key)) cfg.set(key, value);
        else if (value.is_object()) absorb(cfg, value, key);
        else throw Error(ErrorKind::Config, "unknown configuration key '" + key + "'");
    }
}

bool power_of_two(int v) { return v > 0 && (v & (v - 1)) == 0; }

mpq_class rational(const json& v, const std::string& key) {
    try {
        if (v.is_string()) return parse_rational(v.get<std::string>());
        if (v.is_number()) return parse_rational(v.dump());
    } catch (const std::exception&) {
    }
    throw Error(ErrorKind::Config, key + ": expected a rational, got " + v.dump());
}

QComplex complex_rational(const json& v, const std::string& key) {
    if (v.is_array() && v.size() == 2) return {rational(v[0], key), rational(v[1], key)};
    return {rational(v, key)};
}

}  // namespace

RunConfig::RunConfig() {
    data_ = json::object();
    for (const auto& k : config_keys()) data_[pointer(k.key)] = k.fallback;
}

RunConfig RunConfig::from_json(const json& j) {
    RunConfig cfg;
    absorb(cfg, j, "");
    cfg.validate();
    return cfg;
}

RunConfig RunConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Config, "cannot read configuration file " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Config, path + ": " + e.what());
    }
    return from_json(j);
}

void RunConfig::set(const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) throw Error(ErrorKind::Config, "expected key=value, got '" + assignment + "'");
    const std::string key = assignment.substr(0, eq), raw = assignment.substr(eq + 1);
    const ConfigKey* k = find_key(key);
    if (!k) throw Error(ErrorKind::Config, "unknown configuration key '" + key + "'");
    json value;
    if (k->fallback.is_string()) {
        value = raw;
    } else {
        try {
            value = json::parse(raw);
        } catch (const json::exception&) {
            throw Error(ErrorKind::Config, key + ": cannot parse '" + raw + "'");
        }
    }
    set(key, value);
}

void RunConfig::set(const std::string& key, const json& value) {
    const ConfigKey* k = find_key(key);
    if (!k) throw Error(ErrorKind::Config, "unknown configuration key '" + key + "'");
    json v = value;
    if (k->fallback.is_string() && v.is_number()) v = v.dump();
    if (!same_kind(k->fallback, v))
        throw Error(ErrorKind::Config, key + ": expected " + std::string(k->fallback.type_name()) + ", got " + v.dump());
    data_[pointer(key)] = v;
}

const json& RunConfig::at(const std::string& key) const {
    if (!find_key(key)) throw Error(ErrorKind::Config, "unknown configuration key '" + key + "'");
    return data_.at(pointer(key));
}

void RunConfig::validate() const {
    auto fail = [](const std::string& key, const std::string& why) { throw Error(ErrorKind::Config, key + ": " + why); };
    const std::string preset = text("map.preset");
    if (preset != "worked-example" && preset != "counterexample-1" && preset != "counterexample-2" && preset != "product" &&
        preset != "custom")
        fail("map.preset", "unknown preset '" + preset + "'");
    for (const char* key : {"u.resolution", "slice.resolution", "chain.leg2_resolution"}) {
        const int r = integer(key);
        if (!power_of_two(r) || r < 64 || r > 4096) fail(key, "must be a power of two between 64 and 4096");
    }
    const int g4 = integer("grid4d.resolution");
    if (g4 != 0 && (g4 < 8 || g4 > 48)) fail("grid4d.resolution", "must be 0 or between 8 and 48");
    for (const char* key : {"tol.root", "tol.merge", "tol.branch", "tol.newton", "condition.dilation", "condition.margin",
                            "u.half", "unresolved_limit"})
        if (!(number(key) > 0.0)) fail(key, "must be > 0");
    const double eps = number("eps_attract");
    if (!(eps >= 0.0 && eps < 1.0)) fail("eps_attract", "must be in [0, 1)");
    if (integer("max_iter") < 1) fail("max_iter", "must be >= 1");
    const int depth = integer("depth");
    if (depth < 0 || depth > 12) fail("depth", "must be between 0 and 12");
    if (at("depths").empty()) fail("depths", "must not be empty");
    for (const auto& d : at("depths"))
        if (!d.is_number_integer() || d.get<int>() < 0) fail("depths", "entries must be non-negative integers");
    if (integer("series.order") < 1 || integer("series.order") > 40) fail("series.order", "must be between 1 and 40");
    if (integer("graphs.resolution") < 5) fail("graphs.resolution", "must be >= 5");
    if (integer("condition.samples") < 1) fail("condition.samples", "must be >= 1");
    const std::string strategy = text("sampling.strategy");
    if (strategy != "slice" && strategy != "ray") fail("sampling.strategy", "must be slice or ray");
    if (integer("sampling.per_shell") < 0) fail("sampling.per_shell", "must be >= 0");
    if (integer("sampling.n_max") < 0 || integer("sampling.n_max") > 30) fail("sampling.n_max", "must be between 0 and 30");
    if (integer("sampling.seed") < 0) fail("sampling.seed", "must be >= 0");
    if (integer("sampling.base_samples") < 1) fail("sampling.base_samples", "must be >= 1");
    if (integer("chain.candidates") < 1) fail("chain.candidates", "must be >= 1");
    for (const char* key : {"distance.p", "distance.q"})
        if (at(key).size() != 4 || !std::all_of(at(key).begin(), at(key).end(), [](const json& x) { return x.is_number(); }))
            fail(key, "must be four numbers");
    if (at("slice.z").size() != 2 || !at("slice.z")[0].is_number() || !at("slice.z")[1].is_number())
        fail("slice.z", "must be two numbers");
    const std::string mode = text("mode");
    if (mode != "2d" && mode != "1d") fail("mode", "must be 2d or 1d");
    if (integer("threads") < 1 || integer("threads") > 256) fail("threads", "must be between 1 and 256");
    if (text("output").empty()) fail("output", "must not be empty");
    for (const char* key : {"map.L", "map.a", "map.b", "map.c", "example.L", "example.B"}) rational(at(key), key);
    if (preset == "custom") map();
}

std::string RunConfig::hash() const { return hex64(fnv1a(canonical())); }

SkewProduct RunConfig::map() const {
    const std::string preset = text("map.preset");
    if (preset == "worked-example") return maps::worked_example(rational(at("map.L"), "map.L"));
    if (preset == "counterexample-1") return maps::counterexample_one(rational(at("map.a"), "map.a"));
    if (preset == "counterexample-2")
        return maps::counterexample_two(rational(at("map.a"), "map.a"), rational(at("map.b"), "map.b"),
                                        rational(at("map.c"), "map.c"));
    if (preset == "product") return maps::product_squares();
    if (preset != "custom") throw Error(ErrorKind::Config, "map.preset: unknown preset '" + preset + "'");
    std::vector<QComplex> pc;
    for (const auto& c : at("map.p")) pc.push_back(complex_rational(c, "map.p"));
    ExactBivar q;
    for (const auto& t : at("map.q")) {
        if (!t.is_array() || t.size() < 3 || t.size() > 4 || !t[0].is_number_integer() || !t[1].is_number_integer() ||
            t[0].get<int>() < 0 || t[1].get<int>() < 0)
            throw Error(ErrorKind::Config, "map.q: terms are [j, k, re] or [j, k, re, im], got " + t.dump());
        const QComplex c = t.size() == 4 ? QComplex{rational(t[2], "map.q"), rational(t[3], "map.q")}
                                         : QComplex{rational(t[2], "map.q")};
        q.add_term(t[0].get<int>(), t[1].get<int>(), c);
    }
    if (ExactPoly(pc).degree() < 2 || q.degree_w() < 2)
        throw Error(ErrorKind::Config, "custom map needs deg P >= 2 and deg_w Q >= 2");
    return SkewProduct(ExactPoly(pc), q);
}

double RunConfig::eps_attract() const {
    const double eps = number("eps_attract");
    return eps > 0.0 ? eps : choose_attraction_radius(map());
}

std::string config_help() {
    std::ostringstream os;
    os << "Configuration keys (JSON file via --config, or --set key=value):\n";
    std::size_t width = 0;
    for (const auto& k : config_keys()) width = std::max(width, k.key.size());
    for (const auto& k : config_keys()) {
        os << "  " << k.key << std::string(width + 2 - k.key.size(), ' ') << "default " << k.fallback.dump() << "\n"
           << "  " << std::string(width + 2, ' ') << k.doc << "\n";
    }
    return os.str();
}

}  // namespace kobasin
