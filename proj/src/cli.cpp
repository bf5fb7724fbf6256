#include "kobasin/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "kobasin/class_a.hpp"
#include "kobasin/errors.hpp"

namespace kobasin {

using nlohmann::json;

namespace {

std::string path_in(const RunConfig& cfg, const std::string& name) {
    return (std::filesystem::path(cfg.text("output")) / name).string();
}

json stamp(const RunConfig& cfg, const SkewProduct& f) {
    return {{"map", f.describe()}, {"map_hash", f.hash_hex()}, {"config_hash", cfg.hash()}};
}

void write_report(const RunConfig& cfg, const std::string& text, std::ostream& out) {
    write_file(path_in(cfg, "report.txt"), text);
    out << text;
}

std::string header(const RunConfig& cfg, const SkewProduct& f, const std::string& what) {
    std::ostringstream os;
    os << what << "\nmap          " << f.describe() << "\nmap hash     " << f.hash_hex() << "\nconfig hash  "
       << cfg.hash() << "\n\n";
    return os.str();
}

GridOptions grid_options(const RunConfig& cfg) { return {cfg.eps_attract(), cfg.integer("max_iter")}; }

ContinuationOptions continuation(const RunConfig& cfg) {
    ContinuationOptions c;
    c.newton_tol = cfg.number("tol.newton");
    c.branch_tol = cfg.number("tol.branch");
    return c;
}

TreeOptions tree_options(const RunConfig& cfg) {
    TreeOptions t;
    t.root_tol = cfg.number("tol.root");
    t.merge_tol = cfg.number("tol.merge");
    t.eps_attract = cfg.eps_attract();
    t.max_iter = cfg.integer("max_iter");
    return t;
}

GridDomain u_grid(const RunConfig& cfg, const SkewProduct& f, const ParallelMap& pool) {
    auto u = basin_grid_1d(f.p(), GridGeometry::square({}, cfg.number("u.half"), cfg.integer("u.resolution")),
                           grid_options(cfg), pool);
    require_decided(u, "U raster");
    return u;
}

PreimageTree obtain_tree(const RunConfig& cfg, const SkewProduct& f, const Inputs& inputs, const ParallelMap& pool) {
    if (inputs.tree.empty()) return preimage_tree(f, cfg.integer("depth"), tree_options(cfg), pool);
    auto tree = tree_from_json(read_json(inputs.tree), f.hash_hex());
    if (tree.max_depth < cfg.integer("depth"))
        throw Error(ErrorKind::Config, "tree file has depth " + std::to_string(tree.max_depth) + ", need " +
                                           std::to_string(cfg.integer("depth")));
    return tree;
}

Point2 point_of(const json& a) { return {{a[0].get<double>(), a[1].get<double>()}, {a[2].get<double>(), a[3].get<double>()}}; }

json point_json(const Point2& p) { return json::array({p.z.real(), p.z.imag(), p.w.real(), p.w.imag()}); }

json estimate_json(const DistanceEstimate& e, const std::string& label, const Point2& p, const Point2& q) {
    auto finite = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
    return {{"method", label},
            {"resolution", e.resolution},
            {"lower", finite(e.lower)},
            {"upper", finite(e.upper)},
            {"lower_slack", e.lower_slack},
            {"source", point_json(p)},
            {"target", point_json(q)}};
}

int cmd_check(const RunConfig& cfg, std::ostream& out, const ParallelMap& pool) {
    const auto f = cfg.map();
    auto report = check_hypotheses(f);
    // Condition C needs a basin of P; skip it when the hypotheses on P fail.
    const bool p_ok = std::none_of(report.p_checks.begin(), report.p_checks.end(),
                                   [](const Check& c) { return c.verdict == Verdict::Fail; });
    if (p_ok) {
        ConditionOptions co;
        co.dilation = cfg.number("condition.dilation");
        co.samples = cfg.integer("condition.samples");
        co.max_iter = cfg.integer("max_iter");
        co.eps_attract = cfg.eps_attract();
        co.slice_resolution = cfg.integer("slice.resolution");
        co.seed = static_cast<std::uint64_t>(cfg.integer("sampling.seed"));
        co.margin = cfg.number("condition.margin");
        report = check_membership(f, u_grid(cfg, f, pool), co, pool);
    }
    json j = report.to_json();
    j.update(stamp(cfg, f));
    write_json(path_in(cfg, "check.json"), j);
    std::string text = "class membership check\nconfig hash  " + cfg.hash() + "\n\n" + report.table();
    if (!p_ok) text += "condition C not evaluated: the hypotheses on P fail\n";
    write_report(cfg, text, out);
    return report.overall() == Verdict::Fail ? kExitFail : kExitOk;
}

int cmd_basin(const RunConfig& cfg, std::ostream& out, const ParallelMap& pool) {
    const auto f = cfg.map();
    const auto u = u_grid(cfg, f, pool);
    write_file(path_in(cfg, "basin.pgm"), pgm(u));
    write_file(path_in(cfg, "basin.ppm"), render(u).ppm());
    write_json(path_in(cfg, "basin.json"), raster_sidecar(u, cfg.eps_attract(), f.hash_hex(), cfg.hash()));
    std::ostringstream os;
    os << header(cfg, f, "basin of P") << "box          |Re z|, |Im z| <= " << cfg.number("u.half") << " at "
       << u.geom.resolution << "^2\n"
       << "Basin        " << u.count(CellClass::Basin) << "\nEscaped      " << u.count(CellClass::Escaped)
       << "\nUndecided    " << u.count(CellClass::Undecided) << "\ncomponents   " << u.n_components << "\n";
    write_report(cfg, os.str(), out);
    return kExitOk;
}

int cmd_slice(const RunConfig& cfg, const Inputs& inputs, std::ostream& out, const ParallelMap& pool) {
    const auto f = cfg.map();
    const cplx z{cfg.at("slice.z")[0].get<double>(), cfg.at("slice.z")[1].get<double>()};
    const auto go = grid_options(cfg);
    const auto slice = basin_grid_slice(f, z, fit_slice_box(f, z, go, cfg.integer("slice.resolution")), go, pool);
    require_decided(slice.grid, "slice raster");
    std::vector<Overlay> markers;
    std::size_t outside = 0;
    if (!inputs.tree.empty()) {
        const auto tree = tree_from_json(read_json(inputs.tree), f.hash_hex());
        for (const auto& n : tree.nodes) {
            if (std::abs(n.point.z - z) > tree.merge_tol) continue;
            markers.push_back({n.point.w});
            if (!slice.grid.geom.contains(n.point.w) || !slice.grid.is_basin(slice.grid.geom.locate(n.point.w))) ++outside;
        }
    }
    write_file(path_in(cfg, "slice.pgm"), pgm(slice.grid));
    write_file(path_in(cfg, "slice.ppm"), render(slice.grid, markers).ppm());
    json side = raster_sidecar(slice.grid, go.eps_attract, f.hash_hex(), cfg.hash());
    side["z"] = {z.real(), z.imag()};
    write_json(path_in(cfg, "slice.json"), side);
    std::ostringstream os;
    os << header(cfg, f, "slice of the basin") << "z            " << z.real() << (z.imag() < 0 ? " - " : " + ")
       << std::abs(z.imag()) << "i\nbox          center " << slice.grid.geom.center.real() << ", "
       << slice.grid.geom.center.imag() << "; half-width " << slice.grid.geom.half_x << "\nBasin        "
       << slice.grid.count(CellClass::Basin) << "\nUndecided    " << slice.grid.count(CellClass::Undecided)
       << "\ncomponents   " << slice.grid.n_components << "\n";
    for (int label = 0; label < slice.grid.n_components; ++label)
        os << "  component " << label << ": holes " << hole_count(slice.grid, label) << "\n";
    if (!inputs.tree.empty()) os << "tree nodes   " << markers.size() << " in this fiber, " << outside << " outside Basin\n";
    write_report(cfg, os.str(), out);
    return kExitOk;
}

int cmd_preimages(const RunConfig& cfg, std::ostream& out, const ParallelMap& pool) {
    const auto f = cfg.map();
    const auto tree = preimage_tree(f, cfg.integer("depth"), tree_options(cfg), pool);
    write_json(path_in(cfg, "preimages.json"), tree_to_json(tree, f.hash_hex(), cfg.hash()));
    std::ostringstream os;
    os << header(cfg, f, "preimages of the origin");
    double worst = 0.0;
    for (const auto& n : tree.nodes) worst = std::max(worst, n.residual);
    for (int d = 0; d <= tree.max_depth; ++d) os << "depth " << d << ": " << tree.count_at_depth(d) << " nodes\n";
    os << "total        " << tree.nodes.size() << "\nfiber nodes  " << tree.fiber_nodes().size()
       << "\ndropped      " << tree.dropped_non_basin << " (not Basin)\nmax residual " << worst << "\n";
    write_report(cfg, os.str(), out);
    return kExitOk;
}

int cmd_stable(const RunConfig& cfg, const Inputs& inputs, std::ostream& out, const ParallelMap& pool) {
    const auto f = cfg.map();
    const auto series = stable_manifold_series(f, cfg.integer("series.order"));
    const auto tree = obtain_tree(cfg, f, inputs, pool);
    const auto graphs = local_stable_graphs(f, series, tree, cfg.integer("graphs.resolution"), continuation(cfg));
    json coeffs = json::array();
    for (cplx c : series.coeffs) coeffs.push_back({c.real(), c.imag()});
    json gj = json::array();
    std::ostringstream os;
    os << header(cfg, f, "local stable manifold") << "order        " << series.order << "\nepsilon      " << series.epsilon
       << "\nresidual     " << series_residual(f, series, 0.5 * series.epsilon) << " on |z| = epsilon/2\n";
    for (std::size_t k = 2; k < series.coeffs.size() && k < 6; ++k)
        os << "c" << k << "           " << series.coeffs[k].real() << (series.coeffs[k].imag() < 0 ? " - " : " + ")
           << std::abs(series.coeffs[k].imag()) << "i\n";
    os << "\ngraph  depth  anchor                         base  excluded  residual\n";
    for (const auto& g : graphs) {
        const double res = graph_invariance_residual(f, series, g);
        gj.push_back({{"index", g.index},
                      {"depth", g.depth},
                      {"anchor", point_json(g.anchor)},
                      {"base_cells", g.base.size()},
                      {"excluded_cells", g.excluded.size()},
                      {"invariance_residual", res}});
        char buf[200];
        std::snprintf(buf, sizeof buf, "%5d  %5d  (%+.4f%+.4fi, %+.4f%+.4fi)  %5zu  %8zu  %.2e\n", g.index, g.depth,
                      g.anchor.z.real(), g.anchor.z.imag(), g.anchor.w.real(), g.anchor.w.imag(), g.base.size(),
                      g.excluded.size(), res);
        os << buf;
    }
    json j = stamp(cfg, f);
    j["series"] = {{"order", series.order}, {"epsilon", series.epsilon}, {"coefficients", coeffs}};
    j["graphs"] = gj;
    write_json(path_in(cfg, "stable.json"), j);
    write_report(cfg, os.str(), out);
    return kExitOk;
}

int cmd_distance(const RunConfig& cfg, const Inputs& inputs, std::ostream& out, const ParallelMap& pool) {
    const auto f = cfg.map();
    const Point2 p = point_of(cfg.at("distance.p")), q = point_of(cfg.at("distance.q"));
    const auto go = grid_options(cfg);
    for (const auto& x : {p, q})
        if (!classify_point(f, x, go.eps_attract, go.max_iter).basin())
            throw Error(ErrorKind::OutOfDomain, "distance endpoints must classify Basin");
    json rows = json::array();
    std::ostringstream os;
    os << header(cfg, f, "distance estimates");
    auto add = [&](const DistanceEstimate& e, const std::string& label, const Point2& a, const Point2& b) {
        rows.push_back(estimate_json(e, label, a, b));
        char buf[200];
        std::snprintf(buf, sizeof buf, "%-22s res %5d  lower %-10.6g upper %-10.6g\n", label.c_str(), e.resolution,
                      e.lower, e.upper);
        os << buf;
    };
    const auto u = u_grid(cfg, f, pool);
    const int ul = u.geom.contains(p.z) ? u.labels[u.geom.locate(p.z)] : -1;
    std::optional<DensityField> u_field;
    if (ul >= 0) u_field = density_field(u, ul);
    add(projection_lower(f, p, q, u_field ? &*u_field : nullptr), to_string(Method::Projection), p, q);
    if (cfg.text("map.preset") == "product") {
        DistanceEstimate e;
        e.method = Method::ClosedForm;
        e.lower = e.upper = std::max(disc_distance(p.z, q.z).upper, disc_distance(p.w, q.w).upper);
        add(e, to_string(Method::ClosedForm), p, q);
    }
    if (p.z == q.z) {
        const auto slice = basin_grid_slice(f, p.z, fit_slice_box(f, p.z, go, cfg.integer("slice.resolution")), go, pool);
        const auto& g = slice.grid;
        const int lp = g.geom.contains(p.w) ? g.labels[g.geom.locate(p.w)] : -1;
        const int lq = g.geom.contains(q.w) ? g.labels[g.geom.locate(q.w)] : -1;
        if (lp >= 0 && lp == lq) add(slice_distance(density_field(g, lp), p.w, q.w), to_string(Method::SliceGraph), p, q);
        else os << "slice-graph            endpoints in different slice components or outside the raster\n";
    }
    if (const int n4 = cfg.integer("grid4d.resolution"); n4 > 0) {
        const auto esc = f.escape();
        const auto mask = basin_mask_4d(f, GridGeometry::square({}, esc.z_bound, n4), GridGeometry::square({}, esc.w_bound, n4),
                                        go.eps_attract, go.max_iter, pool);
        try {
            add(polydisc_distance_4d(mask, p, q), to_string(Method::Polydisc4d), p, q);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::Disconnected) throw;
            os << "polydisc-4d            res " << n4 << ": endpoints not joined in the mask\n";
            rows.push_back({{"method", to_string(Method::Polydisc4d)}, {"resolution", n4}, {"status", "disconnected"}});
        }
    }
    // Distance from p to the preimage set.
    const auto series = stable_manifold_series(f, cfg.integer("series.order"));
    const auto tree = obtain_tree(cfg, f, inputs, pool);
    const auto graphs = local_stable_graphs(f, series, tree, cfg.integer("graphs.resolution"), continuation(cfg));
    ChainOptions co;
    co.leg2_resolution = cfg.integer("chain.leg2_resolution");
    co.candidates = cfg.integer("chain.candidates");
    co.cont = continuation(cfg);
    const auto slice_p = std::make_shared<const SliceDomain>(
        basin_grid_slice(f, p.z, fit_slice_box(f, p.z, go, cfg.integer("slice.resolution")), go, pool));
    const auto chain = chain_distance_to_S(f, series, p, tree, graphs, [&](cplx) { return slice_p; }, co);
    if (chain.ok) {
        auto e = chain.est;
        e.lower = projection_lower(f, p, chain.target).lower;
        add(e, "chain (p to S)", p, chain.target);
        rows.back()["node_depth"] = tree.nodes[static_cast<std::size_t>(chain.node)].depth;
        rows.back()["leg1"] = chain.leg1;
        rows.back()["leg2"] = chain.leg2;
    } else {
        os << "chain (p to S)         unresolved: " << chain.failure << "\n";
        rows.push_back({{"method", "chain (p to S)"}, {"status", chain.failure}, {"source", point_json(p)}});
    }
    json j = stamp(cfg, f);
    j["estimates"] = rows;
    write_json(path_in(cfg, "distance.json"), j);
    write_report(cfg, os.str(), out);
    return kExitOk;
}

int cmd_verify_example(const RunConfig& cfg, std::ostream& out) {
    const mpq_class L = parse_rational(cfg.text("example.L")), B = parse_rational(cfg.text("example.B"));
    const auto r = verify_example_bounds(L, B);
    json j = r.to_json();
    j["config_hash"] = cfg.hash();
    write_json(path_in(cfg, "example.json"), j);
    std::ostringstream os;
    auto line = [&](const char* name, const mpq_class& v, const char* need, bool ok) {
        os << name << to_string(v) << " (" << v.get_d() << ")  needs " << need << "  " << (ok ? "PASS" : "FAIL") << "\n";
    };
    os << "worked example bounds, L = " << to_string(L) << ", B = " << to_string(B) << "\nconfig hash  " << cfg.hash()
       << "\n\n";
    line("(*)  B - 1/2 - 25L/(16B)    = ", r.star, ">= 1", r.star_pass);
    line("(**) 9L/16 - 1/16          = ", r.starstar, "> B", r.starstar_pass);
    line("     B - 25L/(16B)         = ", r.statement, ">= 3/2", r.statement_pass);
    os << "     Q(3/4, -1/4) = " << to_string(r.critical_value) << "\n";
    os << "overall: " << (r.pass() ? "PASS" : "FAIL") << "\n";
    write_report(cfg, os.str(), out);
    return r.pass() ? kExitOk : kExitFail;
}

}  // namespace

ExperimentReport run_experiment(const RunConfig& cfg, const Inputs& inputs, std::ostream& out) {
    const ParallelMap pool(static_cast<unsigned>(cfg.integer("threads")));
    const auto f = cfg.map();
    const double eps = cfg.eps_attract();
    SamplingOptions so;
    so.strategy = cfg.text("sampling.strategy");
    so.per_shell = cfg.integer("sampling.per_shell");
    so.n_max = cfg.integer("sampling.n_max");
    so.seed = static_cast<std::uint64_t>(cfg.integer("sampling.seed"));
    so.eps_attract = eps;
    so.max_iter = cfg.integer("max_iter");
    so.u_half = cfg.number("u.half");
    so.u_resolution = cfg.integer("u.resolution");
    so.slice_resolution = cfg.integer("slice.resolution");
    so.base_samples = cfg.integer("sampling.base_samples");

    ExperimentReport rep;
    std::vector<Overlay> markers;
    if (cfg.text("mode") == "1d") {
        rep = estimate_C_1d(f.p(), so, cfg.integer("depth"), pool);
        rep.map = f.describe() + " (P only)";
        rep.map_hash = f.hash_hex();
    } else {
        const auto series = stable_manifold_series(f, cfg.integer("series.order"));
        const auto tree = obtain_tree(cfg, f, inputs, pool);
        const auto graphs = local_stable_graphs(f, series, tree, cfg.integer("graphs.resolution"), continuation(cfg));
        const auto samples = sample_basin(f, so, pool);
        EstimateOptions eo;
        std::set<int> depths{cfg.integer("depth")};
        for (const auto& d : cfg.at("depths"))
            if (d.get<int>() <= cfg.integer("depth")) depths.insert(d.get<int>());
        eo.depths.assign(depths.begin(), depths.end());
        eo.slice_resolution = so.slice_resolution;
        eo.grid = {eps, so.max_iter};
        eo.chain.leg2_resolution = cfg.integer("chain.leg2_resolution");
        eo.chain.candidates = cfg.integer("chain.candidates");
        eo.chain.cont = continuation(cfg);
        eo.unresolved_limit = cfg.number("unresolved_limit");
        rep = estimate_C(f, series, tree, graphs, samples, eo, pool);
        write_json(path_in(cfg, "preimages.json"), tree_to_json(tree, f.hash_hex(), cfg.hash()));
        for (const auto& n : tree.nodes) markers.push_back({n.point.z});
    }
    rep.config_hash = cfg.hash();
    rep.seed = so.seed;
    rep.mode = cfg.text("mode");

    std::ostringstream csv;
    rep.write_csv(csv);
    write_file(path_in(cfg, "samples.csv"), csv.str());
    write_json(path_in(cfg, "summary.json"), rep.summary());
    const auto u = u_grid(cfg, f, pool);
    write_file(path_in(cfg, "basin.ppm"), render(u, markers).ppm());
    write_json(path_in(cfg, "basin.json"), raster_sidecar(u, eps, f.hash_hex(), cfg.hash()));
    write_report(cfg, rep.text(), out);
    return rep;
}

int run_subcommand(const std::string& name, const RunConfig& cfg, const Inputs& inputs, std::ostream& out) {
    cfg.validate();
    std::filesystem::create_directories(cfg.text("output"));
    const ParallelMap pool(static_cast<unsigned>(cfg.integer("threads")));
    if (name == "check") return cmd_check(cfg, out, pool);
    if (name == "basin") return cmd_basin(cfg, out, pool);
    if (name == "slice") return cmd_slice(cfg, inputs, out, pool);
    if (name == "preimages") return cmd_preimages(cfg, out, pool);
    if (name == "stable") return cmd_stable(cfg, inputs, out, pool);
    if (name == "distance") return cmd_distance(cfg, inputs, out, pool);
    if (name == "verify-example") return cmd_verify_example(cfg, out);
    if (name == "experiment") {
        const auto rep = run_experiment(cfg, inputs, out);
        return rep.run_failed ? kExitFail : kExitOk;
    }
    throw Error(ErrorKind::Config, "unknown subcommand '" + name + "'");
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Kobayashi-distance experiments for basins of attracting skew products"};
    app.footer("\n" + config_help() +
               "\nExit codes: 0 success, 1 other error, 2 a check reported FAIL, 3 resource cap, 4 configuration error.");
    std::string config_path;
    std::vector<std::string> sets;
    Inputs inputs;
    app.add_option("-c,--config", config_path, "JSON configuration file");
    app.add_option("-s,--set", sets, "override a key: key=value (repeatable)");
    app.add_option("--tree", inputs.tree, "preimages.json from an earlier run (same map)");
    const char* names[][2] = {{"check", "class membership report"},
                              {"basin", "basin of P on the U box, with render"},
                              {"slice", "slice of the basin over slice.z, with render"},
                              {"preimages", "preimage tree of the origin to the configured depth"},
                              {"stable", "stable-manifold series and local graph continuation"},
                              {"distance", "all applicable estimates between distance.p and distance.q"},
                              {"experiment", "shell-stratified distance-to-preimages experiment"},
                              {"verify-example", "exact worked-example inequalities at example.L, example.B"}};
    for (const auto& n : names) app.add_subcommand(n[0], n[1])->fallthrough();
    app.require_subcommand(1, 1);

    auto record = [&](const std::string& kind, const std::string& message, int code) {
        json j{{"error", kind}, {"message", message}, {"exit_code", code}};
        err << j.dump() << "\n";
        return code;
    };
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        return record("Config", e.what(), kExitConfig);
    }
    const std::string name = app.get_subcommands().front()->get_name();
    RunConfig cfg;
    try {
        cfg = config_path.empty() ? RunConfig() : RunConfig::load(config_path);
        for (const auto& s : sets) cfg.set(s);
        cfg.validate();
        const int code = run_subcommand(name, cfg, inputs, out);
        return code;
    } catch (const Error& e) {
        int code = kExitError;
        if (e.kind() == ErrorKind::Config) code = kExitConfig;
        if (e.kind() == ErrorKind::ResourceCap) code = kExitResourceCap;
        if (code != kExitConfig) {
            try {
                std::filesystem::create_directories(cfg.text("output"));
                write_json(path_in(cfg, "error.json"),
                           {{"error", to_string(e.kind())}, {"message", e.what()}, {"exit_code", code}, {"config_hash", cfg.hash()}});
            } catch (const std::exception&) {
            }
        }
        return record(to_string(e.kind()), e.what(), code);
    } catch (const std::exception& e) {
        return record("Internal", e.what(), kExitError);
    }
}

}  // namespace kobasin
