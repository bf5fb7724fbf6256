#include "kobasin/chain.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "kobasin/errors.hpp"

namespace kobasin {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

cplx iterate_p(const SkewProduct& f, cplx z, int n) {
    for (int k = 0; k < n; ++k) z = f.p()(z);
    return z;
}

cplx iterate_dp(const SkewProduct& f, cplx z, int n) {
    cplx d = 1.0;
    for (int k = 0; k < n; ++k) {
        d *= f.dp()(z);
        z = f.p()(z);
    }
    return d;
}

}  // namespace

ChainEstimator::ChainEstimator(const SkewProduct& f, const StableSeries& series, const PreimageTree& tree,
                               const std::vector<StableGraph>& graphs, ChainOptions opt)
    : f_(f), series_(series), tree_(tree), graphs_(graphs), opt_(opt) {}

bool ChainEstimator::leg2(const Candidate& c, cplx z, ChainResult& r) const {
    SheetChain lifted;
    auto st = lift_to_preimage(f_, series_, c.chain, lifted, opt_.cont);
    if (st != ContinuationStatus::Ok) {
        r.failure = std::string("leg 2: lift to preimage failed (") + to_string(st) + ")";
        return false;
    }
    const Point2 target = lifted.point();
    auto node = tree_.find(target, 1e-7);
    if (!node) {
        r.failure = "leg 2: lifted point is not a tree node";
        return false;
    }
    const int T = c.chain.depth();
    const cplx zp = target.z;
    if (zp == z) {
        r.node = *node;
        r.target = tree_.nodes[static_cast<std::size_t>(*node)].point;
        r.depth = T;
        r.leg2 = 0.0;
        return true;
    }

    // Base grid around the segment from z to the node, enlarged while the solved
    // sheet base touches the box border.
    const double dp = std::abs(iterate_dp(f_, zp, T));
    const double r_v = dp > 0.0 ? series_.epsilon / dp : std::abs(z - zp);
    double half = 0.5 * std::abs(z - zp) + std::min(r_v, 4.0 * std::abs(z - zp) + 1e-12);
    cplx center = 0.5 * (z + zp);
    const double eps_in = 0.999 * series_.epsilon;
    double best = kInf;
    int grow = 0;
    for (int attempt = 0; attempt < 6; ++attempt) {
        const auto geom = GridGeometry::square(center, half, opt_.leg2_resolution);
        auto in_base = [&](std::size_t cell) { return std::abs(iterate_p(f_, geom.cell_center(cell), T)) < eps_in; };
        auto g = continue_stable_graph_from(f_, series_, c.chain, geom, in_base, opt_.cont);
        const std::size_t zc = geom.locate(z), pc = geom.locate(zp);
        if (!g.slot_of(zc) || !g.slot_of(pc)) {
            r.failure = "leg 2: sheet continuation does not reach the node";
            if (++grow > 3) break;
            half *= 2.0;
            continue;
        }
        auto at_node = g.eval(f_, series_, zp, opt_.cont);
        if (!at_node || std::abs(*at_node - target.w) > 1e-7 * (1.0 + std::abs(target.w))) {
            r.failure = "leg 2: sheet is not single-valued between sample and node";
            if (++grow > 3) break;
            half *= 2.0;
            continue;
        }
        const int n = geom.resolution;
        bool touches = false;
        int i0 = n, i1 = -1, j0 = n, j1 = -1;
        std::vector<char> inside(geom.size(), 0);
        for (std::size_t cell : g.base) {
            inside[cell] = 1;
            const int i = static_cast<int>(cell % static_cast<std::size_t>(n));
            const int j = static_cast<int>(cell / static_cast<std::size_t>(n));
            if (i == 0 || j == 0 || i == n - 1 || j == n - 1) touches = true;
            i0 = std::min(i0, i), i1 = std::max(i1, i), j0 = std::min(j0, j), j1 = std::max(j1, j);
        }
        auto field = density_field(geom, std::move(inside), -1);
        const double len = cell_distances(field, zc, true)[pc];
        if (!std::isfinite(len)) {
            r.failure = "leg 2: base raster disconnected";
            if (++grow > 3) break;
            half *= 2.0;
            continue;
        }
        best = std::min(best, len + cell_offset(field, z) + cell_offset(field, zp));
        if (touches) {
            if (++grow > 3) break;
            half *= 2.0;
            continue;
        }
        // The base sits inside the box: refit the box to it for finer cells.
        const double h = geom.dx();
        const cplx lo = geom.cell_center(geom.index(i0, j0)), hi = geom.cell_center(geom.index(i1, j1));
        const double fit = 0.5 * std::max(hi.real() - lo.real(), hi.imag() - lo.imag()) + 2.0 * h;
        if (fit > 0.7 * half) break;
        center = 0.5 * (lo + hi);
        half = fit;
    }
    if (!std::isfinite(best)) return false;
    r.failure.clear();
    r.node = *node;
    r.target = tree_.nodes[static_cast<std::size_t>(*node)].point;
    r.depth = T;
    r.leg2 = best;
    return true;
}

void ChainEstimator::build(BaseCache& cache) const {
    const int kmax = tree_.max_depth;
    // N = first n with |P^n(z)| < epsilon; the disc is forward invariant.
    std::vector<cplx> zs{cache.z_};
    for (int n = 0; n <= kmax; ++n) {
        if (cache.N_ < 0 && std::abs(zs.back()) < series_.epsilon) cache.N_ = n;
        if (n < kmax) zs.push_back(f_.p()(zs.back()));
    }
    cache.built_ = true;
    if (cache.N_ < 0) return;

    // A local graph's value at z_n, pulled back through all fiber roots over
    // z_{n-1}, ..., z_0, for every n from N to the tree depth.
    auto& cands = cache.cands_;
    for (int n = cache.N_; n <= kmax; ++n) {
        for (const auto& g : graphs_) {
            if (n + g.depth > kmax) continue;
            auto top = g.eval_chain(f_, series_, zs[static_cast<std::size_t>(n)], opt_.cont);
            if (!top) continue;
            std::vector<std::vector<cplx>> partial{{top->w.front()}};  // w at levels k..n, reversed
            bool degenerate = false;
            for (int k = n - 1; k >= 0 && !degenerate; --k) {
                std::vector<std::vector<cplx>> next;
                for (const auto& ws : partial) {
                    std::vector<cplx> roots;
                    try {
                        roots = fiber_preimages_w(f_.q(), zs[static_cast<std::size_t>(k)], ws.back());
                    } catch (const Error&) {
                        degenerate = true;
                        break;
                    }
                    std::vector<cplx> distinct;
                    for (cplx r : roots)
                        if (std::none_of(distinct.begin(), distinct.end(), [&](cplx o) { return std::abs(o - r) < 1e-10; }))
                            distinct.push_back(r);
                    for (cplx r : distinct) {
                        auto ext = ws;
                        ext.push_back(r);
                        next.push_back(std::move(ext));
                    }
                }
                partial = std::move(next);
                if (partial.size() + cands.size() > static_cast<std::size_t>(opt_.max_candidates)) degenerate = true;
            }
            if (degenerate) continue;
            for (const auto& ws : partial) {
                Candidate c;
                c.chain.z.assign(zs.begin(), zs.begin() + n + 1);
                c.chain.w.assign(ws.rbegin(), ws.rend());
                c.chain.z.insert(c.chain.z.end(), top->z.begin() + 1, top->z.end());
                c.chain.w.insert(c.chain.w.end(), top->w.begin() + 1, top->w.end());
                cands.push_back(std::move(c));
            }
        }
    }
    cache.leg2_.assign(cands.size(), std::nullopt);
}

ChainResult ChainEstimator::second_leg(BaseCache& cache, std::size_t idx) const {
    {
        std::lock_guard lock(cache.mutex_);
        if (cache.leg2_[idx]) return *cache.leg2_[idx];
    }
    ChainResult r;
    r.ok = leg2(cache.cands_[idx], cache.z_, r);
    std::lock_guard lock(cache.mutex_);
    cache.leg2_[idx] = r;
    return r;
}

std::vector<ChainResult> ChainEstimator::sweep(const Point2& p, const SliceDomain& slice,
                                               const std::vector<int>& depths, const DensityField* cached,
                                               BaseCache* shared) const {
    std::vector<ChainResult> out(depths.size());
    if (depths.empty()) return out;
    const int kmax = *std::max_element(depths.begin(), depths.end());
    if (kmax > tree_.max_depth) throw Error(ErrorKind::Config, "chain depth exceeds the preimage tree depth");

    if (auto node = tree_.find(p, 1e-12)) {
        const auto& tn = tree_.nodes[static_cast<std::size_t>(*node)];
        for (std::size_t i = 0; i < depths.size(); ++i) {
            if (tn.depth > depths[i]) continue;
            out[i].ok = true;
            out[i].est.upper = 0.0;
            out[i].node = *node;
            out[i].target = tn.point;
            out[i].depth = tn.depth;
            out[i].base_steps = 0;
        }
    }
    auto fail_rest = [&](const std::string& why, int n) {
        for (auto& r : out) {
            if (r.ok) continue;
            r.failure = why;
            r.base_steps = n;
        }
        return out;
    };

    std::optional<BaseCache> local;
    if (!shared) local.emplace(p.z);
    BaseCache& cache = shared ? *shared : *local;
    {
        std::lock_guard lock(cache.mutex_);
        if (!cache.built_) build(cache);
    }
    const int N = cache.N_;
    if (N < 0 || N > kmax) return fail_rest("leg 1: base orbit does not enter the local disc within depth K", -1);

    // Leg 1 field on the sample's slice component.
    const auto& grid = slice.grid;
    if (!grid.geom.contains(p.w)) return fail_rest("leg 1: sample outside the slice box", N);
    const std::size_t wc = grid.geom.locate(p.w);
    const int label = grid.labels[wc];
    if (label < 0) return fail_rest("leg 1: sample cell is not Basin in the slice raster", N);
    DensityField own;
    if (!cached) own = density_field(grid, label);
    const DensityField& field = cached ? *cached : own;
    const auto dist = cell_distances(field, wc, true);
    const double w_off = cell_offset(field, p.w);

    const auto& cands = cache.cands_;
    std::vector<double> leg1(cands.size(), kInf);
    std::vector<std::size_t> order;
    for (std::size_t idx = 0; idx < cands.size(); ++idx) {
        if (cands[idx].chain.depth() > kmax) continue;
        const cplx eta = cands[idx].chain.w.front();
        if (!grid.geom.contains(eta)) continue;
        const std::size_t ec = grid.geom.locate(eta);
        if (!std::isfinite(dist[ec])) continue;
        leg1[idx] = ec == wc ? std::abs(eta - p.w) * field.upper[wc] : dist[ec] + w_off + cell_offset(field, eta);
        order.push_back(idx);
    }
    if (order.empty()) return fail_rest("leg 1: no stable-sheet point in the sample's slice component", N);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (leg1[a] != leg1[b]) return leg1[a] < leg1[b];
        return cands[a].chain.depth() < cands[b].chain.depth();
    });

    // For each K, second legs in order of the first leg until the first leg alone
    // exceeds the best total; evaluated candidates stay in the pool for larger K.
    std::vector<std::optional<ChainResult>> done(cands.size());
    std::vector<std::size_t> depth_order(depths.size());
    std::iota(depth_order.begin(), depth_order.end(), std::size_t{0});
    std::sort(depth_order.begin(), depth_order.end(), [&](std::size_t a, std::size_t b) { return depths[a] < depths[b]; });
    std::string last_failure;
    for (std::size_t di : depth_order) {
        const int K = depths[di];
        ChainResult best = out[di];
        auto consider = [&](std::size_t idx) {
            const auto& r = *done[idx];
            if (r.ok && cands[idx].chain.depth() <= K && (!best.ok || r.est.upper < best.est.upper)) best = r;
        };
        for (std::size_t idx : order)
            if (done[idx]) consider(idx);
        int tried = 0;
        for (std::size_t idx : order) {
            if (tried >= opt_.candidates || (best.ok && leg1[idx] >= best.est.upper)) break;
            if (cands[idx].chain.depth() > K || done[idx]) continue;
            ++tried;
            ChainResult r = second_leg(cache, idx);
            r.leg1 = leg1[idx];
            if (r.ok) r.est.upper = r.leg1 + r.leg2;
            else last_failure = r.failure;
            done[idx] = r;
            consider(idx);
        }
        if (!best.ok) best.failure = last_failure.empty() ? "no candidate of depth <= K" : last_failure;
        best.base_steps = N;
        best.est.resolution = grid.geom.resolution;
        out[di] = best;
    }
    return out;
}

ChainResult ChainEstimator::estimate(const Point2& p, const SliceDomain& slice) const {
    return sweep(p, slice, {tree_.max_depth}).front();
}

ChainResult chain_distance_to_S(const SkewProduct& f, const StableSeries& series, const Point2& p,
                                const PreimageTree& tree, const std::vector<StableGraph>& graphs,
                                const SliceProvider& slices, const ChainOptions& opt) {
    auto slice = slices(p.z);
    ChainEstimator est(f, series, tree, graphs, opt);
    ChainResult r = est.estimate(p, *slice);
    if (!r.ok && r.failure.empty()) r.failure = "no chain found";
    return r;
}

}  // namespace kobasin
