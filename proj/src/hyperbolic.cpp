#include "kobasin/hyperbolic.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

#include "kobasin/dynamics.hpp"
#include "kobasin/errors.hpp"

namespace kobasin {

const char* to_string(Method m) {
    switch (m) {
        case Method::SliceGraph: return "slice-graph";
        case Method::Chain: return "chain";
        case Method::Polydisc4d: return "polydisc-4d";
        case Method::ClosedForm: return "closed-form";
        case Method::Projection: return "projection";
    }
    return "?";
}

DistanceEstimate disc_distance(cplx r1, cplx r2) {
    if (!(std::abs(r1) < 1.0) || !(std::abs(r2) < 1.0)) throw Error(ErrorKind::OutOfDomain, "point outside the unit disc");
    double t = std::abs(r1 - r2) / std::abs(1.0 - std::conj(r1) * r2);
    double d = std::atanh(std::min(t, 1.0));
    return {d, d, Method::ClosedForm, 0, 1.0};
}

double disc_distance_radius(cplx r1, cplx r2, double radius) {
    if (r1 == r2) return 0.0;
    if (!(std::abs(r1) < radius) || !(std::abs(r2) < radius)) return 0.0;
    return disc_distance(r1 / radius, r2 / radius).lower;
}

// ---------------------------------------------------------------------------
// Distance transform

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Lower envelope of parabolas (Felzenszwalb-Huttenlocher), sample spacing h.
void edt_1d(const std::vector<double>& f, double h, std::vector<double>& out, std::vector<int>& v,
            std::vector<double>& z) {
    const int n = static_cast<int>(f.size());
    out.assign(static_cast<std::size_t>(n), kInf);
    v.assign(static_cast<std::size_t>(n), 0);
    z.assign(static_cast<std::size_t>(n) + 1, 0.0);
    int k = -1;
    for (int q = 0; q < n; ++q) {
        if (f[static_cast<std::size_t>(q)] == kInf) continue;
        const double fq = f[static_cast<std::size_t>(q)] + (q * h) * (q * h);
        double s = -kInf;
        while (k >= 0) {
            const int p = v[static_cast<std::size_t>(k)];
            s = (fq - (f[static_cast<std::size_t>(p)] + (p * h) * (p * h))) / (2.0 * h * (q - p));
            if (s <= z[static_cast<std::size_t>(k)]) --k;
            else break;
        }
        ++k;
        v[static_cast<std::size_t>(k)] = q;
        z[static_cast<std::size_t>(k)] = k == 0 ? -kInf : s;
        z[static_cast<std::size_t>(k) + 1] = kInf;
    }
    if (k < 0) return;
    int j = 0;
    for (int q = 0; q < n; ++q) {
        while (z[static_cast<std::size_t>(j) + 1] < q * h) ++j;
        const int p = v[static_cast<std::size_t>(j)];
        const double dq = (q - p) * h;
        out[static_cast<std::size_t>(q)] = dq * dq + f[static_cast<std::size_t>(p)];
    }
}

}  // namespace

DensityField density_field(const GridGeometry& geom, std::vector<char> inside, int holes) {
    DensityField field;
    field.geom = geom;
    field.inside = std::move(inside);
    field.holes = holes;
    const int n = geom.resolution;
    const int m = n + 2;  // one ring of exterior padding
    std::vector<double> d2(static_cast<std::size_t>(m) * static_cast<std::size_t>(m), 0.0);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i)
            if (field.inside[geom.index(i, j)])
                d2[static_cast<std::size_t>(j + 1) * static_cast<std::size_t>(m) + static_cast<std::size_t>(i + 1)] = kInf;

    std::vector<double> line, out, zbuf;
    std::vector<int> vbuf;
    line.resize(static_cast<std::size_t>(m));
    for (int j = 0; j < m; ++j) {
        for (int i = 0; i < m; ++i) line[static_cast<std::size_t>(i)] = d2[static_cast<std::size_t>(j) * static_cast<std::size_t>(m) + static_cast<std::size_t>(i)];
        edt_1d(line, geom.dx(), out, vbuf, zbuf);
        for (int i = 0; i < m; ++i) d2[static_cast<std::size_t>(j) * static_cast<std::size_t>(m) + static_cast<std::size_t>(i)] = out[static_cast<std::size_t>(i)];
    }
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) line[static_cast<std::size_t>(j)] = d2[static_cast<std::size_t>(j) * static_cast<std::size_t>(m) + static_cast<std::size_t>(i)];
        edt_1d(line, geom.dy(), out, vbuf, zbuf);
        for (int j = 0; j < m; ++j) d2[static_cast<std::size_t>(j) * static_cast<std::size_t>(m) + static_cast<std::size_t>(i)] = out[static_cast<std::size_t>(j)];
    }

    const double half_cell = 0.5 * std::max(geom.dx(), geom.dy());
    field.delta.assign(geom.size(), 0.0);
    field.lower.assign(geom.size(), 0.0);
    field.upper.assign(geom.size(), 0.0);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            const std::size_t idx = geom.index(i, j);
            if (!field.inside[idx]) continue;
            double dist = std::sqrt(d2[static_cast<std::size_t>(j + 1) * static_cast<std::size_t>(m) + static_cast<std::size_t>(i + 1)]);
            double delta = std::max(dist - half_cell, 1e-3 * half_cell);
            field.delta[idx] = delta;
            field.upper[idx] = 1.0 / delta;
            if (field.simply_connected()) field.lower[idx] = 0.25 / delta;
        }

    // Tighter upper density from inscribed discs B(c, delta(c)) that contain the
    // cell without being centered on it: rho <= r / (r^2 - s^2). The offsets
    // depend only on the geometry and the largest delta.
    constexpr int kDirs = 16;
    const double hx = geom.dx(), hy = geom.dy();
    double max_delta = 0.0;
    for (double d : field.delta) max_delta = std::max(max_delta, d);
    struct Offset {
        int di, dj;
        double off;
    };
    std::vector<std::vector<Offset>> rays(kDirs);
    for (int k = 0; k < kDirs; ++k) {
        const double a = 2.0 * M_PI * k / kDirs;
        auto& ray = rays[static_cast<std::size_t>(k)];
        for (double s = std::min(hx, hy); s < max_delta; s *= M_SQRT2) {
            const int di = static_cast<int>(std::lround(s * std::cos(a) / hx));
            const int dj = static_cast<int>(std::lround(s * std::sin(a) / hy));
            if ((di == 0 && dj == 0) || (!ray.empty() && ray.back().di == di && ray.back().dj == dj)) continue;
            ray.push_back({di, dj, std::hypot(di * hx, dj * hy)});
        }
    }
    std::vector<double> refined = field.upper;
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            const std::size_t idx = geom.index(i, j);
            if (!field.inside[idx]) continue;
            double best = refined[idx];
            for (const auto& ray : rays)
                for (const auto& o : ray) {
                    const int ii = i + o.di, jj = j + o.dj;
                    if (ii < 0 || jj < 0 || ii >= n || jj >= n) break;
                    const std::size_t c = geom.index(ii, jj);
                    if (!field.inside[c]) break;
                    const double r = field.delta[c];
                    if (o.off < r) best = std::min(best, r / (r * r - o.off * o.off));
                }
            refined[idx] = best;
        }
    field.upper = std::move(refined);
    return field;
}

DensityField density_field(const GridDomain& grid, int label) {
    std::vector<char> inside(grid.geom.size(), 0);
    for (std::size_t i = 0; i < inside.size(); ++i) inside[i] = grid.labels[i] == label ? 1 : 0;
    return density_field(grid.geom, std::move(inside), hole_count(grid, label));
}

std::vector<double> cell_distances(const DensityField& field, std::size_t source, bool use_upper) {
    const auto& geom = field.geom;
    const auto& rho = use_upper ? field.upper : field.lower;
    const int n = geom.resolution;
    std::vector<double> dist(geom.size(), kInf);
    if (source >= geom.size() || !field.inside[source]) return dist;
    const double dx = geom.dx(), dy = geom.dy(), dd = std::hypot(dx, dy);
    const int di[8] = {1, -1, 0, 0, 1, 1, -1, -1};
    const int dj[8] = {0, 0, 1, -1, 1, -1, 1, -1};
    const double step[8] = {dx, dx, dy, dy, dd, dd, dd, dd};

    using Item = std::pair<double, std::size_t>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    dist[source] = 0.0;
    heap.push({0.0, source});
    while (!heap.empty()) {
        auto [d, cell] = heap.top();
        heap.pop();
        if (d > dist[cell]) continue;
        const int i = static_cast<int>(cell % static_cast<std::size_t>(n));
        const int j = static_cast<int>(cell / static_cast<std::size_t>(n));
        for (int k = 0; k < 8; ++k) {
            const int ii = i + di[k], jj = j + dj[k];
            if (ii < 0 || jj < 0 || ii >= n || jj >= n) continue;
            const std::size_t nb = geom.index(ii, jj);
            if (!field.inside[nb]) continue;
            const double nd = d + 0.5 * (rho[cell] + rho[nb]) * step[k];
            if (nd < dist[nb]) {
                dist[nb] = nd;
                heap.push({nd, nb});
            }
        }
    }
    return dist;
}

double cell_offset(const DensityField& field, cplx x) {
    const std::size_t cell = field.geom.locate(x);
    return std::abs(x - field.geom.cell_center(cell)) * field.upper[cell];
}

DistanceEstimate slice_distance(const DensityField& field, std::size_t p, std::size_t q) {
    DistanceEstimate e;
    e.method = Method::SliceGraph;
    e.resolution = field.geom.resolution;
    e.lower_slack = kLowerSlack;
    if (!field.inside[p] || !field.inside[q]) throw Error(ErrorKind::Disconnected, "endpoint outside the component");
    if (p == q) {
        e.upper = e.lower = 0.0;
        return e;
    }
    if (q < p) std::swap(p, q);  // one search direction, so the result is symmetric to the bit
    auto up = cell_distances(field, p, true);
    if (up[q] == kInf) throw Error(ErrorKind::Disconnected, "no path between the cells");
    e.upper = up[q];
    e.lower = field.simply_connected() ? cell_distances(field, p, false)[q] : 0.0;
    return e;
}

DistanceEstimate slice_distance(const DensityField& field, cplx p, cplx q) {
    if (!field.geom.contains(p) || !field.geom.contains(q)) throw Error(ErrorKind::OutOfDomain, "point outside the grid box");
    if (p == q) {
        DistanceEstimate e;
        e.method = Method::SliceGraph;
        e.resolution = field.geom.resolution;
        e.lower_slack = kLowerSlack;
        e.upper = e.lower = 0.0;
        return e;
    }
    auto e = slice_distance(field, field.geom.locate(p), field.geom.locate(q));
    e.upper += cell_offset(field, p) + cell_offset(field, q);
    return e;
}

DistanceEstimate projection_lower(const SkewProduct& f, const Point2& p, const Point2& q, const DensityField* u_field) {
    DistanceEstimate e;
    e.method = Method::Projection;
    e.upper = kInf;
    const auto& esc = f.escape();
    double lower = std::max(disc_distance_radius(p.z, q.z, esc.z_bound), disc_distance_radius(p.w, q.w, esc.w_bound));
    if (u_field && p.z != q.z && u_field->simply_connected() && u_field->geom.contains(p.z) && u_field->geom.contains(q.z)) {
        const std::size_t a = u_field->geom.locate(p.z), b = u_field->geom.locate(q.z);
        if (u_field->inside[a] && u_field->inside[b]) {
            double raster = cell_distances(*u_field, a, false)[b];
            if (std::isfinite(raster) && raster / kLowerSlack > lower) {
                lower = raster;
                e.lower_slack = kLowerSlack;
                e.resolution = u_field->geom.resolution;
            }
        }
    }
    e.lower = lower;
    return e;
}

// ---------------------------------------------------------------------------
// 4D polydisc estimator

std::size_t Mask4D::locate(const Point2& x) const {
    const std::size_t nn = static_cast<std::size_t>(n()) * static_cast<std::size_t>(n());
    return zg.locate(x.z) * nn + wg.locate(x.w);
}

Mask4D basin_mask_4d(const SkewProduct& f, const GridGeometry& zg, const GridGeometry& wg, double eps_attract,
                     int max_iter, const ParallelMap& pool) {
    if (zg.resolution != wg.resolution) throw Error(ErrorKind::Config, "4D grid axes need equal resolution");
    if (zg.resolution > 48) throw Error(ErrorKind::ResourceCap, "4D grid resolution above 48");
    Mask4D m{zg, wg, {}};
    const std::size_t nn = zg.size();
    m.inside.assign(nn * nn, 0);
    pool.for_each(nn, [&](std::size_t zc) {
        const cplx z = zg.cell_center(zc);
        for (std::size_t wc = 0; wc < nn; ++wc)
            m.inside[zc * nn + wc] = classify_point(f, {z, wg.cell_center(wc)}, eps_attract, max_iter).basin() ? 1 : 0;
    });
    return m;
}

namespace {

// Chebyshev (index) distance to the nearest outside cell, box exterior outside.
std::vector<std::uint8_t> chessboard_levels(const Mask4D& m) {
    const int n = m.n();
    const std::size_t total = m.inside.size();
    std::vector<std::uint8_t> level(total, 0);
    std::vector<char> cur(m.inside), next(total);
    // Axis order of the flat index: z row, z column, w row, w column.
    const std::size_t strides[4] = {static_cast<std::size_t>(n) * n * n, static_cast<std::size_t>(n) * n, static_cast<std::size_t>(n), 1};
    for (std::size_t i = 0; i < total; ++i) level[i] = cur[i] ? 1 : 0;
    for (int k = 2; k <= n; ++k) {
        next = cur;
        for (int axis = 0; axis < 4; ++axis) {
            std::vector<char> tmp(total);
            for (std::size_t i = 0; i < total; ++i) {
                const int coord = static_cast<int>((i / strides[axis]) % static_cast<std::size_t>(n));
                char v = next[i];
                if (v) v = coord > 0 && coord < n - 1 && next[i - strides[axis]] && next[i + strides[axis]];
                tmp[i] = v;
            }
            next.swap(tmp);
        }
        bool any = false;
        for (std::size_t i = 0; i < total; ++i)
            if (next[i]) {
                level[i] = static_cast<std::uint8_t>(k);
                any = true;
            }
        if (!any) break;
        cur.swap(next);
    }
    return level;
}

}  // namespace

DistanceEstimate polydisc_distance_4d(const Mask4D& mask, const Point2& p, const Point2& q, std::size_t max_nodes) {
    DistanceEstimate e;
    e.method = Method::Polydisc4d;
    e.resolution = mask.n();
    if (mask.inside.size() > max_nodes) throw Error(ErrorKind::ResourceCap, "4D node count above the configured cap");
    if (!mask.zg.contains(p.z) || !mask.zg.contains(q.z) || !mask.wg.contains(p.w) || !mask.wg.contains(q.w))
        throw Error(ErrorKind::OutOfDomain, "point outside the 4D box");
    if (p == q) {
        e.upper = 0.0;
        return e;
    }
    const int n = mask.n();
    const std::size_t nn = static_cast<std::size_t>(n) * static_cast<std::size_t>(n);
    const std::size_t src = mask.locate(p), dst = mask.locate(q);
    if (!mask.inside[src] || !mask.inside[dst]) throw Error(ErrorKind::Disconnected, "endpoint outside the 4D mask");
    const auto level = chessboard_levels(mask);
    const double hz = std::max(mask.zg.dx(), mask.zg.dy());
    const double hw = std::max(mask.wg.dx(), mask.wg.dy());

    auto radius_z = [&](std::size_t c) { return (level[c] - 0.5) * hz; };
    auto radius_w = [&](std::size_t c) { return (level[c] - 0.5) * hw; };
    auto polydisc = [](double step, double r) { return step < r ? std::atanh(step / r) : kInf; };

    std::vector<double> dist(mask.inside.size(), kInf);
    using Item = std::pair<double, std::size_t>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    dist[src] = 0.0;
    heap.push({0.0, src});
    const int di[8] = {1, -1, 0, 0, 1, 1, -1, -1};
    const int dj[8] = {0, 0, 1, -1, 1, -1, 1, -1};
    while (!heap.empty()) {
        auto [d, cell] = heap.top();
        heap.pop();
        if (d > dist[cell]) continue;
        if (cell == dst) break;
        const std::size_t zc = cell / nn, wc = cell % nn;
        for (int plane = 0; plane < 2; ++plane) {
            const auto& g = plane == 0 ? mask.zg : mask.wg;
            const std::size_t pc = plane == 0 ? zc : wc;
            const int i = static_cast<int>(pc % static_cast<std::size_t>(n));
            const int j = static_cast<int>(pc / static_cast<std::size_t>(n));
            for (int k = 0; k < 8; ++k) {
                const int ii = i + di[k], jj = j + dj[k];
                if (ii < 0 || jj < 0 || ii >= n || jj >= n) continue;
                const std::size_t moved = g.index(ii, jj);
                const std::size_t nb = plane == 0 ? moved * nn + wc : zc * nn + moved;
                if (!mask.inside[nb]) continue;
                const double len = std::hypot(di[k] * g.dx(), dj[k] * g.dy());
                double w;
                if (plane == 0) w = std::min(polydisc(len, radius_z(cell)), polydisc(len, radius_z(nb)));
                else w = std::min(polydisc(len, radius_w(cell)), polydisc(len, radius_w(nb)));
                if (!std::isfinite(w)) continue;
                const double nd = d + w;
                if (nd < dist[nb]) {
                    dist[nb] = nd;
                    heap.push({nd, nb});
                }
            }
        }
    }
    if (dist[dst] == kInf) throw Error(ErrorKind::Disconnected, "no 4D path between the points");
    // Points to their cell centers: the step lies in the endpoint's own polydisc.
    auto offset = [&](const Point2& x, std::size_t c) {
        const std::size_t zc = c / nn, wc = c % nn;
        return std::max(polydisc(std::abs(x.z - mask.zg.cell_center(zc)), radius_z(c)),
                        polydisc(std::abs(x.w - mask.wg.cell_center(wc)), radius_w(c)));
    };
    e.upper = dist[dst] + offset(p, src) + offset(q, dst);
    return e;
}

}  // namespace kobasin
