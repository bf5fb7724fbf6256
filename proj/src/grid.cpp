#include "kobasin/grid.hpp"

#include <deque>
#include <limits>

namespace kobasin {

std::size_t GridDomain::count(CellClass c) const {
    return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), c));
}

double GridDomain::undecided_fraction() const {
    return mask.empty() ? 0.0 : static_cast<double>(count(CellClass::Undecided)) / static_cast<double>(mask.size());
}

std::vector<std::size_t> GridDomain::boundary_cells() const {
    std::vector<std::size_t> out;
    const int n = geom.resolution;
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            std::size_t idx = geom.index(i, j);
            if (!is_basin(idx)) continue;
            bool edge = false;
            const int di[4] = {1, -1, 0, 0};
            const int dj[4] = {0, 0, 1, -1};
            for (int k = 0; k < 4 && !edge; ++k) {
                int ii = i + di[k], jj = j + dj[k];
                if (ii < 0 || jj < 0 || ii >= n || jj >= n || !is_basin(geom.index(ii, jj))) edge = true;
            }
            if (edge) out.push_back(idx);
        }
    }
    return out;
}

void label_components(GridDomain& grid) {
    const int n = grid.geom.resolution;
    grid.labels.assign(grid.geom.size(), -1);
    int next = 0;
    std::deque<std::size_t> queue;
    for (std::size_t start = 0; start < grid.geom.size(); ++start) {
        if (!grid.is_basin(start) || grid.labels[start] >= 0) continue;
        grid.labels[start] = next;
        queue.push_back(start);
        while (!queue.empty()) {
            std::size_t idx = queue.front();
            queue.pop_front();
            int i = static_cast<int>(idx % static_cast<std::size_t>(n));
            int j = static_cast<int>(idx / static_cast<std::size_t>(n));
            const int di[4] = {1, -1, 0, 0};
            const int dj[4] = {0, 0, 1, -1};
            for (int k = 0; k < 4; ++k) {
                int ii = i + di[k], jj = j + dj[k];
                if (ii < 0 || jj < 0 || ii >= n || jj >= n) continue;
                std::size_t nb = grid.geom.index(ii, jj);
                if (grid.is_basin(nb) && grid.labels[nb] < 0) {
                    grid.labels[nb] = next;
                    queue.push_back(nb);
                }
            }
        }
        ++next;
    }
    grid.n_components = next;
    if (next == 0) return;

    // Promote the component nearest the origin to id 0.
    double best = std::numeric_limits<double>::infinity();
    int origin_label = -1;
    for (std::size_t idx = 0; idx < grid.geom.size(); ++idx) {
        if (!grid.is_basin(idx)) continue;
        double r = std::abs(grid.geom.cell_center(idx));
        if (r < best) {
            best = r;
            origin_label = grid.labels[idx];
        }
    }
    if (origin_label > 0) {
        for (auto& l : grid.labels) {
            if (l == origin_label) l = 0;
            else if (l >= 0 && l < origin_label) l += 1;
        }
    }
}

int hole_count(const GridDomain& grid, int label) {
    const int n = grid.geom.resolution;
    std::vector<char> seen(grid.geom.size(), 0);
    auto outside = [&](std::size_t idx) { return grid.labels[idx] != label; };
    int holes = 0;
    std::deque<std::size_t> queue;
    for (std::size_t start = 0; start < grid.geom.size(); ++start) {
        if (!outside(start) || seen[start]) continue;
        bool touches_border = false;
        seen[start] = 1;
        queue.push_back(start);
        while (!queue.empty()) {
            std::size_t idx = queue.front();
            queue.pop_front();
            int i = static_cast<int>(idx % static_cast<std::size_t>(n));
            int j = static_cast<int>(idx / static_cast<std::size_t>(n));
            if (i == 0 || j == 0 || i == n - 1 || j == n - 1) touches_border = true;
            for (int dj = -1; dj <= 1; ++dj) {
                for (int di = -1; di <= 1; ++di) {
                    if (di == 0 && dj == 0) continue;
                    int ii = i + di, jj = j + dj;
                    if (ii < 0 || jj < 0 || ii >= n || jj >= n) continue;
                    std::size_t nb = grid.geom.index(ii, jj);
                    if (outside(nb) && !seen[nb]) {
                        seen[nb] = 1;
                        queue.push_back(nb);
                    }
                }
            }
        }
        if (!touches_border) ++holes;
    }
    return holes;
}

GridDomain mask_from_predicate(const GridGeometry& geom, const std::function<bool(cplx)>& inside) {
    GridDomain g;
    g.geom = geom;
    g.mask.resize(geom.size());
    g.steps.assign(geom.size(), 0);
    for (std::size_t idx = 0; idx < geom.size(); ++idx)
        g.mask[idx] = inside(geom.cell_center(idx)) ? CellClass::Basin : CellClass::Escaped;
    label_components(g);
    return g;
}

}  // namespace kobasin
