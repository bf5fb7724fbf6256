#include "kobasin/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <mutex>
#include <queue>
#include <sstream>

#include "kobasin/errors.hpp"

namespace kobasin {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string num(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

nlohmann::json json_num(double v) {
    if (std::isfinite(v)) return v;
    return nullptr;
}

cplx jitter(Rng& rng, const GridGeometry& g, std::size_t cell) {
    const cplx c = g.cell_center(cell);
    return {c.real() + g.dx() * (rng.uniform() - 0.5), c.imag() + g.dy() * (rng.uniform() - 0.5)};
}

}  // namespace

double Rng::normal() {
    if (have_spare_) {
        have_spare_ = false;
        return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 2.0 * M_PI * u2;
    spare_ = r * std::sin(t);
    have_spare_ = true;
    return r * std::cos(t);
}

// ---------------------------------------------------------------------------
// Sampling

namespace {

std::vector<Sample> sample_slices(const SkewProduct& f, const SamplingOptions& opt, const ParallelMap& pool) {
    Rng rng(opt.seed);
    GridOptions go{opt.eps_attract, opt.max_iter};
    const auto u = basin_grid_1d(f.p(), GridGeometry::square({}, opt.u_half, opt.u_resolution), go, pool);
    require_decided(u, "U raster");
    // Base points are spread over the entry times of z, since a point of shell n
    // needs a base whose own entry time is at most n.
    std::vector<std::vector<std::size_t>> strata(static_cast<std::size_t>(opt.n_max) + 1);
    for (std::size_t i = 0; i < u.mask.size(); ++i)
        if (u.is_basin(i) && u.steps[i] <= opt.n_max) strata[static_cast<std::size_t>(u.steps[i])].push_back(i);
    std::vector<std::size_t> live;
    for (std::size_t k = 0; k < strata.size(); ++k)
        if (!strata[k].empty()) live.push_back(k);
    if (live.empty()) throw Error(ErrorKind::ShellEmpty, "U raster has no Basin cells");

    const double rp = escape_radius_1d(f.p());
    std::vector<cplx> bases;
    for (int b = 0; b < opt.base_samples; ++b) {
        const std::size_t k = live[static_cast<std::size_t>(b) % live.size()];
        const auto& cells = strata[k];
        for (int tries = 0; tries < 20; ++tries) {
            const cplx z = jitter(rng, u.geom, cells[rng.index(cells.size())]);
            const auto c = classify_point_1d(f.p(), z, opt.eps_attract, opt.max_iter, rp);
            if (c.basin() && c.n == static_cast<int>(k)) {
                bases.push_back(z);
                break;
            }
        }
    }

    std::vector<std::shared_ptr<const SliceDomain>> slices(bases.size());
    pool.for_each(bases.size(), [&](std::size_t i) {
        const ParallelMap serial(1);
        const auto geom = fit_slice_box(f, bases[i], go, opt.slice_resolution);
        slices[i] = std::make_shared<const SliceDomain>(basin_grid_slice(f, bases[i], geom, go, serial));
    });
    for (const auto& s : slices) require_decided(s->grid, "slice raster");

    // Cells pooled by entry time across all slices.
    std::vector<std::vector<std::pair<std::size_t, std::size_t>>> by_shell(static_cast<std::size_t>(opt.n_max) + 1);
    for (std::size_t s = 0; s < slices.size(); ++s) {
        const auto& g = slices[s]->grid;
        for (std::size_t c = 0; c < g.mask.size(); ++c)
            if (g.is_basin(c) && g.steps[c] <= opt.n_max) by_shell[static_cast<std::size_t>(g.steps[c])].push_back({s, c});
    }

    std::vector<Sample> out;
    for (int n = 0; n <= opt.n_max; ++n) {
        const auto& cells = by_shell[static_cast<std::size_t>(n)];
        if (cells.empty()) throw Error(ErrorKind::ShellEmpty, "shell " + std::to_string(n) + " has no raster support");
        int accepted = 0;
        for (int attempt = 0; accepted < opt.per_shell && attempt < 50 * opt.per_shell; ++attempt) {
            const auto [s, c] = cells[rng.index(cells.size())];
            const auto& sl = slices[s];
            const Point2 p{sl->z, jitter(rng, sl->grid.geom, c)};
            const auto cl = classify_point(f, p, opt.eps_attract, opt.max_iter);
            if (!cl.basin() || cl.n != n) continue;
            out.push_back({p, n, sl});
            ++accepted;
        }
    }
    return out;
}

std::vector<Sample> sample_rays(const SkewProduct& f, const SamplingOptions& opt) {
    Rng rng(opt.seed);
    const double R = f.escape_radius();
    std::vector<Sample> out;
    for (int n = 0; n <= opt.n_max; ++n) {
        int accepted = 0;
        for (int attempt = 0; accepted < opt.per_shell && attempt < 50 * opt.per_shell; ++attempt) {
            double g[4];
            double norm = 0.0;
            for (double& x : g) {
                x = rng.normal();
                norm += x * x;
            }
            norm = std::sqrt(norm);
            const cplx uz{g[0] / norm, g[1] / norm}, uw{g[2] / norm, g[3] / norm};
            auto at = [&](double t) { return Point2{t * uz, t * uw}; };
            // Outermost t on the ray with entry time <= m.
            auto edge = [&](int m) {
                double lo = 0.0, hi = 2.0 * R;
                for (int it = 0; it < 60; ++it) {
                    const double mid = 0.5 * (lo + hi);
                    const auto c = classify_point(f, at(mid), opt.eps_attract, opt.max_iter);
                    if (c.basin() && c.n <= m) lo = mid;
                    else hi = mid;
                }
                return lo;
            };
            const double tb = edge(n);
            const double ta = n == 0 ? 0.0 : edge(n - 1);
            if (!(tb > ta)) continue;
            const Point2 p = at(rng.uniform(ta, tb));
            const auto c = classify_point(f, p, opt.eps_attract, opt.max_iter);
            if (!c.basin() || c.n != n) continue;
            out.push_back({p, n, nullptr});
            ++accepted;
        }
        if (accepted == 0) throw Error(ErrorKind::ShellEmpty, "shell " + std::to_string(n) + " produced no ray samples");
    }
    return out;
}

}  // namespace

std::vector<Sample> sample_basin(const SkewProduct& f, const SamplingOptions& opt, const ParallelMap& pool) {
    if (opt.per_shell <= 0) return {};
    if (opt.strategy == "slice") return sample_slices(f, opt, pool);
    if (opt.strategy == "ray") return sample_rays(f, opt);
    throw Error(ErrorKind::Config, "unknown sampling strategy '" + opt.strategy + "'");
}

// ---------------------------------------------------------------------------
// Trend

Trend plateau_trend(const std::vector<double>& shell_maxima, int window) {
    std::vector<std::pair<double, double>> pts;
    for (std::size_t n = 0; n < shell_maxima.size(); ++n)
        if (std::isfinite(shell_maxima[n])) pts.push_back({static_cast<double>(n), shell_maxima[n]});
    Trend t;
    if (static_cast<int>(pts.size()) < window || window < 2) return t;
    pts.erase(pts.begin(), pts.end() - window);
    double mx = 0.0, my = 0.0;
    for (auto [x, y] : pts) {
        mx += x;
        my += y;
    }
    mx /= window;
    my /= window;
    double sxy = 0.0, sxx = 0.0;
    for (auto [x, y] : pts) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    t.slope = sxy / sxx;
    if (t.slope < 0.05) t.label = "bounded";
    else if (t.slope > 0.3) t.label = "growing";
    return t;
}

// ---------------------------------------------------------------------------
// Report

void ExperimentReport::write_csv(std::ostream& os) const {
    os << "sample_id,shell_n,z_re,z_im,w_re,w_im,preimage_depth,chain_upper,proj_lower,method,status\n";
    for (const auto& r : samples) {
        std::string status = r.status;
        std::replace(status.begin(), status.end(), ',', ';');
        os << r.id << ',' << r.shell << ',' << num(r.point.z.real()) << ',' << num(r.point.z.imag()) << ','
           << num(r.point.w.real()) << ',' << num(r.point.w.imag()) << ',' << r.preimage_depth << ','
           << num(r.chain_upper) << ',' << num(r.proj_lower) << ',' << r.method << ',' << status << '\n';
    }
}

nlohmann::json ExperimentReport::summary() const {
    nlohmann::json shells = nlohmann::json::array();
    for (std::size_t n = 0; n < shell_count.size(); ++n)
        shells.push_back({{"n", n},
                          {"samples", shell_count[n]},
                          {"resolved", shell_resolved[n]},
                          {"max_upper", json_num(shell_max_upper[n])},
                          {"max_lower", json_num(shell_max_lower[n])}});
    nlohmann::json by_depth = nlohmann::json::array();
    for (std::size_t k = 0; k < depths.size(); ++k)
        by_depth.push_back({{"depth", depths[k]}, {"c", json_num(k < c_by_depth.size() ? c_by_depth[k] : kNaN)}});
    return {{"map", map},
            {"map_hash", map_hash},
            {"config_hash", config_hash},
            {"mode", mode},
            {"seed", seed},
            {"depth", depth},
            {"eps_attract", eps_attract},
            {"stable_epsilon", epsilon},
            {"samples", samples.size()},
            {"unresolved", unresolved},
            {"verification_failures", verification_failures},
            {"shells", shells},
            {"c_empirical", json_num(c_empirical)},
            {"c_by_depth", by_depth},
            {"common_pool", common_pool},
            {"upper_trend", {{"slope", upper_trend.slope}, {"label", upper_trend.label}}},
            {"lower_trend", {{"slope", lower_trend.slope}, {"label", lower_trend.label}}},
            {"trend", trend},
            {"run_failed", run_failed},
            {"failure_reason", failure_reason}};
}

std::string ExperimentReport::text() const {
    std::ostringstream os;
    char buf[200];
    os << "map          " << map << "\n";
    os << "map hash     " << map_hash << "\nconfig hash  " << config_hash << "\n";
    os << "mode " << mode << ", seed " << seed << ", depth K = " << depth << ", eps_attract = " << num(eps_attract)
       << "\n\n";
    os << "shell  samples  resolved  max upper     max lower\n";
    for (std::size_t n = 0; n < shell_count.size(); ++n) {
        std::snprintf(buf, sizeof buf, "%5zu  %7d  %8d  %-12.6g  %-12.6g\n", n, shell_count[n], shell_resolved[n],
                      shell_max_upper[n], shell_max_lower[n]);
        os << buf;
    }
    std::snprintf(buf, sizeof buf, "\nC_empirical  %.6g\n", c_empirical);
    os << buf;
    for (std::size_t k = 0; k < depths.size() && k < c_by_depth.size(); ++k) {
        std::snprintf(buf, sizeof buf, "  K = %d: %.6g (common pool of %zu)\n", depths[k], c_by_depth[k],
                      static_cast<std::size_t>(common_pool));
        os << buf;
    }
    std::snprintf(buf, sizeof buf, "upper trend  %s (slope %.4f)\nlower trend  %s (slope %.4f)\n",
                  upper_trend.label.c_str(), upper_trend.slope, lower_trend.label.c_str(), lower_trend.slope);
    os << buf << "trend        " << trend << "\n";
    os << "unresolved   " << unresolved << " of " << samples.size() << "\n";
    os << "node checks  " << verification_failures << " failures\n";
    os << "run          " << (run_failed ? "FAILED: " + failure_reason : "ok") << "\n";
    return os.str();
}

namespace {

void summarize(ExperimentReport& rep, int n_max, double limit) {
    const std::size_t shells = static_cast<std::size_t>(n_max) + 1;
    rep.shell_count.assign(shells, 0);
    rep.shell_resolved.assign(shells, 0);
    rep.shell_max_upper.assign(shells, kNaN);
    rep.shell_max_lower.assign(shells, kNaN);
    rep.c_empirical = kNaN;
    rep.unresolved = 0;
    for (const auto& r : rep.samples) {
        const auto n = static_cast<std::size_t>(r.shell);
        if (n >= shells) continue;
        ++rep.shell_count[n];
        if (std::isfinite(r.proj_lower))
            rep.shell_max_lower[n] = std::isnan(rep.shell_max_lower[n]) ? r.proj_lower : std::max(rep.shell_max_lower[n], r.proj_lower);
        if (!r.ok) {
            ++rep.unresolved;
            continue;
        }
        ++rep.shell_resolved[n];
        rep.shell_max_upper[n] = std::isnan(rep.shell_max_upper[n]) ? r.chain_upper : std::max(rep.shell_max_upper[n], r.chain_upper);
        rep.c_empirical = std::isnan(rep.c_empirical) ? r.chain_upper : std::max(rep.c_empirical, r.chain_upper);
    }
    rep.c_by_depth.assign(rep.depths.size(), kNaN);
    rep.common_pool = 0;
    for (const auto& r : rep.samples) {
        if (r.upper_by_depth.empty() || !std::isfinite(r.upper_by_depth.front())) continue;
        ++rep.common_pool;
        for (std::size_t k = 0; k < rep.depths.size(); ++k)
            rep.c_by_depth[k] = std::isnan(rep.c_by_depth[k]) ? r.upper_by_depth[k] : std::max(rep.c_by_depth[k], r.upper_by_depth[k]);
    }
    rep.upper_trend = plateau_trend(rep.shell_max_upper);
    rep.lower_trend = plateau_trend(rep.shell_max_lower);
    rep.trend = rep.lower_trend.label == "growing" ? "growing" : rep.upper_trend.label;
    const double frac = rep.samples.empty() ? 0.0 : static_cast<double>(rep.unresolved) / static_cast<double>(rep.samples.size());
    rep.run_failed = false;
    rep.failure_reason.clear();
    if (frac > limit && rep.trend != "growing") {
        rep.run_failed = true;
        rep.failure_reason = std::to_string(rep.unresolved) + " of " + std::to_string(rep.samples.size()) +
                             " samples unresolved (limit " + num(100.0 * limit) + "%)";
    }
    if (rep.verification_failures > 0) {
        rep.run_failed = true;
        rep.failure_reason += (rep.failure_reason.empty() ? "" : "; ") + std::to_string(rep.verification_failures) +
                              " preimage nodes failed re-verification";
    }
}

}  // namespace

ExperimentReport estimate_C(const SkewProduct& f, const StableSeries& series, const PreimageTree& tree,
                            const std::vector<StableGraph>& graphs, const std::vector<Sample>& samples,
                            const EstimateOptions& opt, const ParallelMap& pool) {
    if (opt.depths.empty()) throw Error(ErrorKind::Config, "no depths given");
    ExperimentReport rep;
    rep.map = f.describe();
    rep.map_hash = f.hash_hex();
    rep.depths = opt.depths;
    rep.depth = opt.depths.back();
    rep.eps_attract = opt.grid.eps_attract;
    rep.epsilon = series.epsilon;
    rep.samples.resize(samples.size());
    ChainEstimator est(f, series, tree, graphs, opt.chain);
    // Slices are shared between samples; their density fields and chain
    // candidates are built once.
    std::map<std::pair<const SliceDomain*, int>, std::shared_ptr<const DensityField>> fields;
    std::map<const SliceDomain*, std::shared_ptr<ChainEstimator::BaseCache>> bases;
    std::mutex cache_mutex;

    pool.for_each(samples.size(), [&](std::size_t i) {
        const auto& s = samples[i];
        auto& r = rep.samples[i];
        r.id = static_cast<int>(i);
        r.shell = s.shell;
        r.point = s.point;
        auto slice = s.slice;
        if (!slice) {
            const ParallelMap serial(1);
            const auto geom = fit_slice_box(f, s.point.z, opt.grid, opt.slice_resolution);
            slice = std::make_shared<const SliceDomain>(basin_grid_slice(f, s.point.z, geom, opt.grid, serial));
        }
        std::vector<ChainResult> results;
        const auto& g = slice->grid;
        const int label = g.geom.contains(s.point.w) ? g.labels[g.geom.locate(s.point.w)] : -1;
        if (s.slice && label >= 0) {
            std::shared_ptr<const DensityField> field;
            std::shared_ptr<ChainEstimator::BaseCache> base;
            {
                std::lock_guard lock(cache_mutex);
                auto& slot = fields[{s.slice.get(), label}];
                if (!slot) slot = std::make_shared<const DensityField>(density_field(g, label));
                field = slot;
                auto& b = bases[s.slice.get()];
                if (!b) b = std::make_shared<ChainEstimator::BaseCache>(s.point.z);
                base = b;
            }
            results = est.sweep(s.point, *slice, opt.depths, field.get(), base.get());
        } else {
            results = est.sweep(s.point, *slice, opt.depths);
        }
        for (const auto& c : results) r.upper_by_depth.push_back(c.ok ? c.est.upper : kInf);
        const auto& last = results.back();
        if (last.ok) {
            r.ok = true;
            r.status = "ok";
            r.chain_upper = last.est.upper;
            r.node = last.node;
            r.target = tree.nodes[static_cast<std::size_t>(last.node)].point;
            r.preimage_depth = tree.nodes[static_cast<std::size_t>(last.node)].depth;
            r.proj_lower = projection_lower(f, s.point, r.target).lower;
        } else {
            r.status = last.failure.empty() ? "unresolved" : last.failure;
            double lower = kInf;
            for (const auto& node : tree.nodes) lower = std::min(lower, projection_lower(f, s.point, node.point).lower);
            r.proj_lower = lower;
        }
    });

    // Re-check that every reported node is a preimage of the origin.
    for (const auto& r : rep.samples) {
        if (!r.ok) continue;
        Point2 x = r.target;
        for (int k = 0; k < r.preimage_depth; ++k) x = f(x);
        if (max_modulus(x) > 1e-6 * std::max(1, r.preimage_depth)) ++rep.verification_failures;
    }
    int n_max = 0;
    for (const auto& s : samples) n_max = std::max(n_max, s.shell);
    summarize(rep, n_max, opt.unresolved_limit);
    return rep;
}

// ---------------------------------------------------------------------------
// One-variable harness

ExperimentReport estimate_C_1d(const ComplexPoly& p, const SamplingOptions& sampling, int depth,
                               const ParallelMap& pool) {
    ExperimentReport rep;
    rep.mode = "1d";
    rep.depth = depth;
    rep.depths = {depth};
    rep.seed = sampling.seed;
    rep.eps_attract = sampling.eps_attract;
    GridOptions go{sampling.eps_attract, sampling.max_iter};
    const auto u = basin_grid_1d(p, GridGeometry::square({}, sampling.u_half, sampling.u_resolution), go, pool);

    // Backward orbit of 0 under P to the given depth.
    std::vector<cplx> nodes{0.0};
    std::vector<cplx> frontier{0.0};
    for (int k = 0; k < depth; ++k) {
        std::vector<cplx> next;
        for (cplx y : frontier) {
            auto c = p.coeffs();
            c[0] -= y;
            for (const auto& r : roots_with_multiplicity(ComplexPoly(c))) {
                bool seen = false;
                for (cplx o : nodes)
                    if (std::abs(o - r.value) < 1e-9) seen = true;
                if (seen) continue;
                nodes.push_back(r.value);
                next.push_back(r.value);
            }
        }
        frontier = std::move(next);
    }

    // Multi-source shortest paths from all nodes, per component.
    std::vector<double> up(u.geom.size(), kInf), low(u.geom.size(), kInf);
    std::vector<DensityField> fields;
    for (int label = 0; label < u.n_components; ++label) fields.push_back(density_field(u, label));
    auto multi = [&](const DensityField& fld, bool upper, std::vector<double>& dist) {
        const auto& rho = upper ? fld.upper : fld.lower;
        using Item = std::pair<double, std::size_t>;
        std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
        for (cplx z : nodes) {
            if (!fld.geom.contains(z)) continue;
            const std::size_t c = fld.geom.locate(z);
            if (!fld.inside[c]) continue;
            const double d0 = upper ? cell_offset(fld, z) : 0.0;
            if (d0 < dist[c]) {
                dist[c] = d0;
                heap.push({d0, c});
            }
        }
        const int n = fld.geom.resolution;
        const double dx = fld.geom.dx(), dy = fld.geom.dy(), dd = std::hypot(dx, dy);
        const int di[8] = {1, -1, 0, 0, 1, 1, -1, -1};
        const int dj[8] = {0, 0, 1, -1, 1, -1, 1, -1};
        const double step[8] = {dx, dx, dy, dy, dd, dd, dd, dd};
        while (!heap.empty()) {
            auto [d, cell] = heap.top();
            heap.pop();
            if (d > dist[cell]) continue;
            const int i = static_cast<int>(cell % static_cast<std::size_t>(n));
            const int j = static_cast<int>(cell / static_cast<std::size_t>(n));
            for (int k = 0; k < 8; ++k) {
                const int ii = i + di[k], jj = j + dj[k];
                if (ii < 0 || jj < 0 || ii >= n || jj >= n) continue;
                const std::size_t nb = fld.geom.index(ii, jj);
                if (!fld.inside[nb]) continue;
                const double nd = d + 0.5 * (rho[cell] + rho[nb]) * step[k];
                if (nd < dist[nb]) {
                    dist[nb] = nd;
                    heap.push({nd, nb});
                }
            }
        }
    };
    for (const auto& fld : fields) {
        multi(fld, true, up);
        if (fld.simply_connected()) multi(fld, false, low);
    }

    Rng rng(sampling.seed);
    std::vector<std::vector<std::size_t>> by_shell(static_cast<std::size_t>(sampling.n_max) + 1);
    for (std::size_t c = 0; c < u.mask.size(); ++c)
        if (u.is_basin(c) && u.steps[c] <= sampling.n_max) by_shell[static_cast<std::size_t>(u.steps[c])].push_back(c);
    const double rp = escape_radius_1d(p);
    int id = 0;
    for (int n = 0; n <= sampling.n_max; ++n) {
        const auto& cells = by_shell[static_cast<std::size_t>(n)];
        if (cells.empty()) throw Error(ErrorKind::ShellEmpty, "shell " + std::to_string(n) + " has no raster support");
        int accepted = 0;
        for (int attempt = 0; accepted < sampling.per_shell && attempt < 50 * sampling.per_shell; ++attempt) {
            const std::size_t c = cells[rng.index(cells.size())];
            const cplx z = jitter(rng, u.geom, c);
            const auto cl = classify_point_1d(p, z, sampling.eps_attract, sampling.max_iter, rp);
            if (!cl.basin() || cl.n != n) continue;
            SampleRecord r;
            r.id = id++;
            r.shell = n;
            r.point = {z, 0.0};
            r.method = "slice-graph";
            const int label = u.labels[c];
            if (label >= 0 && std::isfinite(up[c])) {
                r.ok = true;
                r.status = "ok";
                r.chain_upper = up[c] + cell_offset(fields[static_cast<std::size_t>(label)], z);
                r.upper_by_depth = {r.chain_upper};
                r.proj_lower = std::isfinite(low[c]) ? low[c] : 0.0;
            } else {
                r.status = "no preimage of depth <= K in this component";
                r.upper_by_depth = {kInf};
                r.proj_lower = 0.0;
            }
            rep.samples.push_back(r);
            ++accepted;
        }
    }
    summarize(rep, sampling.n_max, 0.05);
    return rep;
}

// ---------------------------------------------------------------------------
// Rendering and tree export

Image render(const GridDomain& grid, const std::vector<Overlay>& markers, const std::vector<cplx>& path) {
    const int n = grid.geom.resolution;
    Image img(n, n);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            Rgb c{255, 255, 255};
            switch (grid.mask[grid.geom.index(i, j)]) {
                case CellClass::Basin: c = {0, 0, 0}; break;
                case CellClass::Undecided: c = {128, 128, 128}; break;
                case CellClass::Escaped: break;
            }
            img.at(i, n - 1 - j) = c;
        }
    auto pixel = [&](cplx x, int& px, int& py) {
        const auto& g = grid.geom;
        px = static_cast<int>(std::floor((x.real() - (g.center.real() - g.half_x)) / g.dx()));
        const int j = static_cast<int>(std::floor((x.imag() - (g.center.imag() - g.half_y)) / g.dy()));
        py = n - 1 - j;
    };
    for (std::size_t k = 1; k < path.size(); ++k) {
        int x0, y0, x1, y1;
        pixel(path[k - 1], x0, y0);
        pixel(path[k], x1, y1);
        const int steps = std::max({std::abs(x1 - x0), std::abs(y1 - y0), 1});
        for (int s = 0; s <= steps; ++s) {
            const int x = x0 + (x1 - x0) * s / steps, y = y0 + (y1 - y0) * s / steps;
            if (x >= 0 && y >= 0 && x < n && y < n) img.at(x, y) = {0, 96, 255};
        }
    }
    for (const auto& m : markers) {
        int px, py;
        pixel(m.at, px, py);
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
                const int x = px + dx, y = py + dy;
                if (x >= 0 && y >= 0 && x < n && y < n) img.at(x, y) = m.color;
            }
    }
    return img;
}

nlohmann::json tree_to_json(const PreimageTree& tree, const std::string& map_hash, const std::string& config_hash) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& n : tree.nodes)
        nodes.push_back({n.point.z.real(), n.point.z.imag(), n.point.w.real(), n.point.w.imag(), n.depth, n.parent,
                         n.residual});
    return {{"map_hash", map_hash},
            {"config_hash", config_hash},
            {"max_depth", tree.max_depth},
            {"merge_tol", tree.merge_tol},
            {"dropped_non_basin", tree.dropped_non_basin},
            {"columns", {"z_re", "z_im", "w_re", "w_im", "depth", "parent", "residual"}},
            {"nodes", nodes}};
}

PreimageTree tree_from_json(const nlohmann::json& j, const std::string& map_hash) {
    try {
        if (j.at("map_hash").get<std::string>() != map_hash)
            throw Error(ErrorKind::Config, "tree file was built for map " + j.at("map_hash").get<std::string>() +
                                               ", current map is " + map_hash);
        PreimageTree t;
        t.max_depth = j.at("max_depth").get<int>();
        t.merge_tol = j.at("merge_tol").get<double>();
        t.dropped_non_basin = j.at("dropped_non_basin").get<int>();
        for (const auto& n : j.at("nodes")) {
            TreeNode node;
            node.point = {{n[0].get<double>(), n[1].get<double>()}, {n[2].get<double>(), n[3].get<double>()}};
            node.depth = n[4].get<int>();
            node.parent = n[5].get<int>();
            node.residual = n[6].get<double>();
            t.add(node);
        }
        return t;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Io, std::string("malformed tree file: ") + e.what());
    }
}

}  // namespace kobasin
