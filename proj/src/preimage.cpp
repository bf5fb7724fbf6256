#include "kobasin/preimage.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include "kobasin/errors.hpp"

namespace kobasin {

std::vector<cplx> fiber_preimages_w(const ComplexBivar& q, cplx z, cplx target, double tol) {
    ComplexPoly slice = q.in_w(z);
    const int d = q.degree_w();
    double scale = 0.0;
    for (const auto& c : slice.coeffs()) scale = std::max(scale, std::abs(c));
    if (slice.degree() < d || std::abs(slice.coeff(d)) <= tol * std::max(1.0, scale))
        throw Error(ErrorKind::DegreeDrop, "leading w-coefficient vanishes at this z");
    std::vector<cplx> c = slice.coeffs();
    c[0] -= target;
    return roots(ComplexPoly(std::move(c)), {tol, 500});
}

// ---------------------------------------------------------------------------
// Preimage tree

std::size_t PreimageTree::KeyHash::operator()(const std::array<long long, 4>& k) const {
    std::size_t h = 1469598103934665603ULL;
    for (long long v : k) {
        h ^= static_cast<std::size_t>(v) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    }
    return h;
}

namespace {

std::array<long long, 4> key_of(const Point2& x, double cell) {
    return {static_cast<long long>(std::floor(x.z.real() / cell)), static_cast<long long>(std::floor(x.z.imag() / cell)),
            static_cast<long long>(std::floor(x.w.real() / cell)), static_cast<long long>(std::floor(x.w.imag() / cell))};
}

}  // namespace

int PreimageTree::add(const TreeNode& node) {
    nodes.push_back(node);
    int id = static_cast<int>(nodes.size()) - 1;
    index_[key_of(node.point, kIndexCell)].push_back(id);
    return id;
}

std::optional<int> PreimageTree::find(const Point2& x, double tol) const {
    if (tol > kIndexCell) {
        std::optional<int> best;
        double best_d = tol;
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            double d = distance(nodes[i].point, x);
            if (d <= best_d) {
                best_d = d;
                best = static_cast<int>(i);
            }
        }
        return best;
    }
    auto k = key_of(x, kIndexCell);
    std::optional<int> best;
    double best_d = tol;
    for (int a = -1; a <= 1; ++a)
        for (int b = -1; b <= 1; ++b)
            for (int c = -1; c <= 1; ++c)
                for (int e = -1; e <= 1; ++e) {
                    auto it = index_.find({k[0] + a, k[1] + b, k[2] + c, k[3] + e});
                    if (it == index_.end()) continue;
                    for (int id : it->second) {
                        double d = distance(nodes[static_cast<std::size_t>(id)].point, x);
                        if (d <= best_d && (!best || id < *best || d < best_d)) {
                            best_d = d;
                            best = id;
                        }
                    }
                }
    return best;
}

std::size_t PreimageTree::count_at_depth(int k) const {
    return static_cast<std::size_t>(
        std::count_if(nodes.begin(), nodes.end(), [k](const TreeNode& n) { return n.depth == k; }));
}

std::vector<int> PreimageTree::path_to_root(int node) const {
    std::vector<int> out;
    for (int id = node; id >= 0; id = nodes[static_cast<std::size_t>(id)].parent) out.push_back(id);
    return out;
}

std::vector<int> PreimageTree::fiber_nodes() const {
    std::vector<int> out;
    for (std::size_t i = 0; i < nodes.size(); ++i)
        if (std::abs(nodes[i].point.z) <= merge_tol) out.push_back(static_cast<int>(i));
    return out;
}

PreimageTree preimage_tree(const SkewProduct& f, int depth, const TreeOptions& opt, const ParallelMap& pool) {
    if (depth < 0) throw Error(ErrorKind::OutOfDomain, "negative tree depth");
    PreimageTree tree;
    tree.merge_tol = opt.merge_tol;
    tree.max_depth = depth;
    tree.add({{}, 0, -1, 0.0});

    std::vector<int> frontier{0};
    for (int k = 0; k < depth; ++k) {
        std::vector<std::vector<TreeNode>> children(frontier.size());
        pool.for_each(frontier.size(), [&](std::size_t i) {
            const TreeNode& parent = tree.nodes[static_cast<std::size_t>(frontier[i])];
            std::vector<cplx> pc = f.p().coeffs();
            pc[0] -= parent.point.z;
            std::vector<Root> zs;
            try {
                zs = roots_with_multiplicity(ComplexPoly(std::move(pc)), {opt.root_tol, 500});
            } catch (const Error& e) {
                throw Error(e.kind(), std::string(e.what()) + " (z-solve below node " + std::to_string(frontier[i]) + ")");
            }
            for (const auto& zr : zs) {
                std::vector<cplx> ws;
                try {
                    ws = fiber_preimages_w(f.q(), zr.value, parent.point.w, opt.root_tol);
                } catch (const Error& e) {
                    throw Error(e.kind(), std::string(e.what()) + " (w-solve below node " + std::to_string(frontier[i]) + ")");
                }
                cplx last{std::numeric_limits<double>::quiet_NaN(), 0.0};
                for (const auto& w : ws) {
                    if (w == last) continue;  // repeated by multiplicity
                    last = w;
                    Point2 x{zr.value, w};
                    double res = distance(f(x), parent.point);
                    children[i].push_back({x, k + 1, frontier[i], res});
                }
            }
        });

        std::vector<int> next;
        std::vector<TreeNode> fresh;
        for (auto& group : children) {
            for (auto& node : group) {
                if (tree.find(node.point, opt.merge_tol)) continue;
                bool dup = false;
                for (const auto& other : fresh)
                    if (distance(other.point, node.point) < opt.merge_tol) dup = true;
                if (dup) continue;
                fresh.push_back(node);
                int id = tree.add(node);
                (void)id;
            }
        }
        // Basin filter on the new level.
        std::size_t first_new = tree.nodes.size() - fresh.size();
        std::vector<char> basin(fresh.size(), 1);
        if (opt.filter_basin) {
            pool.for_each(fresh.size(), [&](std::size_t i) {
                basin[i] = classify_point(f, fresh[i].point, opt.eps_attract, opt.max_iter).basin() ? 1 : 0;
            });
        }
        if (std::find(basin.begin(), basin.end(), 0) != basin.end()) {
            // Rebuild without the rejected nodes.
            PreimageTree rebuilt;
            rebuilt.merge_tol = tree.merge_tol;
            rebuilt.max_depth = tree.max_depth;
            rebuilt.dropped_non_basin = tree.dropped_non_basin;
            for (std::size_t i = 0; i < first_new; ++i) rebuilt.add(tree.nodes[i]);
            for (std::size_t i = 0; i < fresh.size(); ++i) {
                if (basin[i]) rebuilt.add(fresh[i]);
                else ++rebuilt.dropped_non_basin;
            }
            tree = std::move(rebuilt);
        }
        for (std::size_t i = first_new; i < tree.nodes.size(); ++i) next.push_back(static_cast<int>(i));
        frontier = std::move(next);
        if (frontier.empty()) break;
    }
    return tree;
}

// ---------------------------------------------------------------------------
// Sheet continuation

const char* to_string(ContinuationStatus s) {
    switch (s) {
        case ContinuationStatus::Ok: return "ok";
        case ContinuationStatus::LeftDomain: return "left-domain";
        case ContinuationStatus::NewtonFailed: return "newton-failed";
        case ContinuationStatus::BranchPoint: return "branch-point";
        case ContinuationStatus::Jump: return "jump";
    }
    return "?";
}

SheetChain chain_from_tree(const PreimageTree& tree, int node) {
    SheetChain c;
    for (int id : tree.path_to_root(node)) {
        const auto& p = tree.nodes[static_cast<std::size_t>(id)].point;
        c.z.push_back(p.z);
        c.w.push_back(p.w);
    }
    return c;
}

namespace {

double coefficient_scale(const ComplexBivar& q) {
    double s = 0.0;
    for (const auto& [key, c] : q.terms()) s = std::max(s, std::abs(c));
    return std::max(s, 1e-300);
}

// dw_k/dz_0 along a chain; false if dQ/dw vanishes somewhere.
bool chain_slopes(const SkewProduct& f, const StableSeries& series, const SheetChain& c, std::vector<cplx>& dw) {
    const int T = c.depth();
    std::vector<cplx> dz(static_cast<std::size_t>(T + 1));
    dz[0] = 1.0;
    for (int k = 0; k < T; ++k) dz[static_cast<std::size_t>(k + 1)] = f.dp()(c.z[static_cast<std::size_t>(k)]) * dz[static_cast<std::size_t>(k)];
    dw.assign(static_cast<std::size_t>(T + 1), cplx{});
    dw[static_cast<std::size_t>(T)] = series.derivative(c.z[static_cast<std::size_t>(T)]) * dz[static_cast<std::size_t>(T)];
    for (int k = T - 1; k >= 0; --k) {
        const auto ku = static_cast<std::size_t>(k);
        cplx qw = f.dq_dw()(c.z[ku], c.w[ku]);
        if (qw == cplx{}) return false;
        dw[ku] = (dw[ku + 1] - f.dq_dz()(c.z[ku], c.w[ku]) * dz[ku]) / qw;
    }
    return true;
}

}  // namespace

ContinuationStatus continue_chain(const SkewProduct& f, const StableSeries& series, const SheetChain& seed, cplx z,
                                  SheetChain& out, const ContinuationOptions& opt) {
    const int T = seed.depth();
    const auto Tu = static_cast<std::size_t>(T);
    const double scale = coefficient_scale(f.q());
    const double branch = opt.branch_tol * scale;
    const double lead = std::abs(f.q().coeff(0, f.q().degree_w()));

    std::vector<cplx> dw;
    if (!chain_slopes(f, series, seed, dw)) return ContinuationStatus::BranchPoint;

    SheetChain c;
    c.z.resize(Tu + 1);
    c.w.resize(Tu + 1);
    c.z[0] = z;
    for (std::size_t k = 0; k < Tu; ++k) c.z[k + 1] = f.p()(c.z[k]);
    if (!(std::abs(c.z[Tu]) < series.epsilon)) return ContinuationStatus::LeftDomain;
    c.w[Tu] = series(c.z[Tu]);

    const cplx delta = z - seed.z[0];
    for (int k = T - 1; k >= 0; --k) {
        const auto ku = static_cast<std::size_t>(k);
        const cplx target = c.w[ku + 1];
        const cplx predicted = seed.w[ku] + dw[ku] * delta;
        cplx w = predicted;
        bool converged = false;
        for (int it = 0; it < opt.newton_iter; ++it) {
            cplx r = f.q()(c.z[ku], w) - target;
            if (std::abs(r) <= opt.newton_tol * (1.0 + std::abs(target))) {
                converged = true;
                break;
            }
            cplx qw = f.dq_dw()(c.z[ku], w);
            if (qw == cplx{}) return ContinuationStatus::BranchPoint;
            w -= r / qw;
            if (!std::isfinite(std::abs(w))) return ContinuationStatus::NewtonFailed;
        }
        if (!converged) return ContinuationStatus::NewtonFailed;
        const double qw = std::abs(f.dq_dw()(c.z[ku], w));
        if (qw < branch) return ContinuationStatus::BranchPoint;
        // Stay on the sheet: the move must be explained by the local slope and
        // stay well inside the separation from the neighboring root.
        const double limit = opt.jump_factor * std::abs(delta) * std::max(1.0, std::abs(dw[ku])) + 1e-9 * (1.0 + std::abs(w));
        if (std::abs(w - seed.w[ku]) > limit) return ContinuationStatus::Jump;
        if (std::abs(w - predicted) > 0.25 * qw / std::max(lead, 1e-300)) return ContinuationStatus::Jump;
        c.w[ku] = w;
    }
    std::vector<cplx> dw_new;
    if (!chain_slopes(f, series, c, dw_new)) return ContinuationStatus::BranchPoint;
    c.slope = dw_new[0];
    out = std::move(c);
    return ContinuationStatus::Ok;
}

namespace {

ContinuationStatus along_rec(const SkewProduct& f, const StableSeries& series, const SheetChain& seed, cplx z,
                             SheetChain& out, const ContinuationOptions& opt, int depth_left) {
    const double len = std::abs(z - seed.z[0]);
    if (opt.max_step <= 0.0 || len <= opt.max_step) {
        auto st = continue_chain(f, series, seed, z, out, opt);
        if (st == ContinuationStatus::Ok || depth_left == 0 || st == ContinuationStatus::LeftDomain) return st;
    }
    if (depth_left == 0) return ContinuationStatus::NewtonFailed;
    SheetChain mid;
    auto st = along_rec(f, series, seed, 0.5 * (seed.z[0] + z), mid, opt, depth_left - 1);
    if (st != ContinuationStatus::Ok) return st;
    return along_rec(f, series, mid, z, out, opt, depth_left - 1);
}

}  // namespace

ContinuationStatus continue_chain_along(const SkewProduct& f, const StableSeries& series, const SheetChain& seed,
                                        cplx z, SheetChain& out, const ContinuationOptions& opt) {
    if (z == seed.z[0]) {
        out = seed;
        std::vector<cplx> dw;
        if (chain_slopes(f, series, out, dw)) out.slope = dw[0];
        return ContinuationStatus::Ok;
    }
    return along_rec(f, series, seed, z, out, opt, 14);
}

ContinuationStatus lift_to_preimage(const SkewProduct& f, const StableSeries& series, const SheetChain& start,
                                    SheetChain& out, const ContinuationOptions& opt) {
    const int T = start.depth();
    const auto Tu = static_cast<std::size_t>(T);
    SheetChain cur = start;
    const cplx y0 = start.z[Tu];
    double t = 0.0;
    double dt = 1.0 / 16.0;
    int guard = 0;
    while (t < 1.0) {
        if (++guard > 20000) return ContinuationStatus::NewtonFailed;
        double t_next = std::min(1.0, t + dt);
        cplx y = (1.0 - t_next) * y0;
        // Newton for P^T(z) = y from the current base point.
        cplx z = cur.z[0];
        bool ok = false;
        for (int it = 0; it < opt.newton_iter; ++it) {
            cplx v = z;
            cplx dv = 1.0;
            for (int k = 0; k < T; ++k) {
                dv *= f.dp()(v);
                v = f.p()(v);
            }
            cplx r = v - y;
            if (std::abs(r) <= 1e-14 * (1.0 + std::abs(y0))) {
                ok = true;
                break;
            }
            if (std::abs(dv) < 1e-14) return ContinuationStatus::BranchPoint;
            z -= r / dv;
        }
        SheetChain next;
        if (ok) {
            // Base-point jump guard: the move must match the local inverse slope.
            cplx dv = 1.0;
            cplx v = cur.z[0];
            for (int k = 0; k < T; ++k) {
                dv *= f.dp()(v);
                v = f.p()(v);
            }
            cplx predicted = cur.z[0] + (y - cur.z[Tu]) / dv;
            if (std::abs(z - predicted) > 0.25 * std::abs(z - cur.z[0]) + 1e-12) ok = false;
        }
        if (ok) ok = continue_chain_along(f, series, cur, z, next, opt) == ContinuationStatus::Ok;
        if (!ok) {
            dt *= 0.5;
            if (dt < 1e-9) return ContinuationStatus::BranchPoint;
            continue;
        }
        cur = std::move(next);
        t = t_next;
        dt = std::min(1.0 / 16.0, dt * 1.5);
    }
    out = std::move(cur);
    return ContinuationStatus::Ok;
}

// ---------------------------------------------------------------------------
// Stable graphs

std::optional<std::size_t> StableGraph::slot_of(std::size_t cell) const {
    if (cell >= slot_lookup_.size() || slot_lookup_[cell] < 0) return std::nullopt;
    return static_cast<std::size_t>(slot_lookup_[cell]);
}

std::optional<SheetChain> StableGraph::eval_chain(const SkewProduct& f, const StableSeries& series, cplx z,
                                                  const ContinuationOptions& opt) const {
    if (base.empty()) return std::nullopt;
    std::optional<std::size_t> slot;
    if (geom.contains(z)) slot = slot_of(geom.locate(z));
    if (!slot) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t s = 0; s < base.size(); ++s) {
            double d = std::abs(geom.cell_center(base[s]) - z);
            if (d < best) {
                best = d;
                slot = s;
            }
        }
    }
    SheetChain out;
    if (continue_chain_along(f, series, chains[*slot], z, out, opt) != ContinuationStatus::Ok) return std::nullopt;
    return out;
}

std::optional<cplx> StableGraph::eval(const SkewProduct& f, const StableSeries& series, cplx z,
                                      const ContinuationOptions& opt) const {
    auto c = eval_chain(f, series, z, opt);
    if (!c) return std::nullopt;
    return c->w.front();
}

StableGraph continue_stable_graph_from(const SkewProduct& f, const StableSeries& series, const SheetChain& anchor,
                                       const GridGeometry& geom, const std::function<bool(std::size_t)>& in_base,
                                       const ContinuationOptions& opt) {
    StableGraph g;
    g.depth = anchor.depth();
    g.anchor = anchor.point();
    g.geom = geom;
    g.slot_lookup_.assign(geom.size(), -1);
    if (!geom.contains(anchor.z[0])) return g;

    std::vector<char> visited(geom.size(), 0);
    const std::size_t start = geom.locate(anchor.z[0]);
    visited[start] = 1;
    if (!in_base(start)) return g;
    SheetChain first;
    auto st = continue_chain_along(f, series, anchor, geom.cell_center(start), first, opt);
    if (st != ContinuationStatus::Ok) {
        g.excluded.push_back(start);
        g.excluded_reason.push_back(st);
        return g;
    }
    g.slot_lookup_[start] = 0;
    g.base.push_back(start);
    g.chains.push_back(std::move(first));

    const int n = geom.resolution;
    const double h = std::max(geom.dx(), geom.dy());
    std::deque<std::size_t> queue{start};
    while (!queue.empty()) {
        std::size_t cell = queue.front();
        queue.pop_front();
        const auto parent_slot = static_cast<std::size_t>(g.slot_lookup_[cell]);
        int i = static_cast<int>(cell % static_cast<std::size_t>(n));
        int j = static_cast<int>(cell / static_cast<std::size_t>(n));
        const int di[4] = {1, -1, 0, 0};
        const int dj[4] = {0, 0, 1, -1};
        for (int k = 0; k < 4; ++k) {
            int ii = i + di[k], jj = j + dj[k];
            if (ii < 0 || jj < 0 || ii >= n || jj >= n) continue;
            std::size_t nb = geom.index(ii, jj);
            if (visited[nb]) continue;
            visited[nb] = 1;
            if (!in_base(nb)) continue;
            SheetChain next;
            auto status = continue_chain(f, series, g.chains[parent_slot], geom.cell_center(nb), next, opt);
            if (status == ContinuationStatus::Ok) {
                // Cross-check against other solved neighbors: a disagreement means the
                // flood went around a branch point and met itself on another sheet.
                for (int m = 0; m < 4 && status == ContinuationStatus::Ok; ++m) {
                    int i2 = ii + di[m], j2 = jj + dj[m];
                    if (i2 < 0 || j2 < 0 || i2 >= n || j2 >= n) continue;
                    std::size_t other = geom.index(i2, j2);
                    if (other == cell || g.slot_lookup_[other] < 0) continue;
                    const auto& oc = g.chains[static_cast<std::size_t>(g.slot_lookup_[other])];
                    double tol = opt.jump_factor * h * std::max({1.0, std::abs(oc.slope), std::abs(next.slope)}) + 1e-9;
                    if (std::abs(oc.w.front() - next.w.front()) > tol) status = ContinuationStatus::Jump;
                }
            }
            if (status != ContinuationStatus::Ok) {
                g.excluded.push_back(nb);
                g.excluded_reason.push_back(status);
                continue;
            }
            g.slot_lookup_[nb] = static_cast<long>(g.base.size());
            g.base.push_back(nb);
            g.chains.push_back(std::move(next));
            queue.push_back(nb);
        }
    }
    return g;
}

namespace {

SheetChain prepend(cplx anchor_w, const SheetChain& tail) {
    SheetChain c;
    c.z.push_back(0.0);
    c.w.push_back(anchor_w);
    c.z.insert(c.z.end(), tail.z.begin(), tail.z.end());
    c.w.insert(c.w.end(), tail.w.begin(), tail.w.end());
    return c;
}

}  // namespace

StableGraph continue_stable_graph(const SkewProduct& f, const StableSeries& series, const StableSeries& prev,
                                  cplx anchor_w, const GridGeometry& geom,
                                  const std::function<bool(std::size_t)>& target_base,
                                  const ContinuationOptions& opt) {
    SheetChain tail;
    tail.z = {0.0};
    tail.w = {prev(0.0)};
    auto g = continue_stable_graph_from(f, series, prepend(anchor_w, tail), geom, target_base, opt);
    g.index = 1;
    return g;
}

StableGraph continue_stable_graph(const SkewProduct& f, const StableSeries& series, const StableGraph& prev,
                                  cplx anchor_w, const GridGeometry& geom,
                                  const std::function<bool(std::size_t)>& target_base,
                                  const ContinuationOptions& opt) {
    auto tail = prev.eval_chain(f, series, 0.0, opt);
    if (!tail) throw Error(ErrorKind::BranchPointProximity, "previous graph is not defined at z = 0");
    auto g = continue_stable_graph_from(f, series, prepend(anchor_w, *tail), geom, target_base, opt);
    g.index = prev.index + 1;
    return g;
}

std::vector<StableGraph> local_stable_graphs(const SkewProduct& f, const StableSeries& series,
                                             const PreimageTree& tree, int resolution,
                                             const ContinuationOptions& opt) {
    const auto geom = GridGeometry::square({}, series.epsilon, resolution);
    const double r = series.epsilon * 0.999;
    auto in_disc = [&](std::size_t cell) { return std::abs(geom.cell_center(cell)) < r; };
    std::vector<StableGraph> out;
    for (int node : tree.fiber_nodes()) {
        auto g = continue_stable_graph_from(f, series, chain_from_tree(tree, node), geom, in_disc, opt);
        g.index = node;
        out.push_back(std::move(g));
    }
    return out;
}

double graph_invariance_residual(const SkewProduct& f, const StableSeries& series, const StableGraph& g,
                                 const StableGraph* prev) {
    double worst = 0.0;
    for (std::size_t s = 0; s < g.base.size(); ++s) {
        const auto& c = g.chains[s];
        cplx z = c.z[0];
        cplx lhs = f.q()(z, c.w[0]);
        cplx rhs;
        if (prev) {
            auto v = prev->eval(f, series, f.p()(z));
            if (!v) continue;
            rhs = *v;
        } else if (g.depth == 1) {
            rhs = series(f.p()(z));
        } else if (g.depth == 0) {
            rhs = series(f.p()(z));
            lhs = f.q()(z, series(z));
        } else {
            SheetChain tail;
            tail.z.assign(c.z.begin() + 1, c.z.end());
            tail.w.assign(c.w.begin() + 1, c.w.end());
            SheetChain fresh;
            if (continue_chain(f, series, tail, tail.z[0], fresh) != ContinuationStatus::Ok) continue;
            rhs = fresh.w[0];
        }
        worst = std::max(worst, std::abs(lhs - rhs));
    }
    return worst;
}

}  // namespace kobasin
