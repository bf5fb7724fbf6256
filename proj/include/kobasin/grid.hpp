#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <vector>

#include "kobasin/types.hpp"

namespace kobasin {

/// Axis-aligned box in C rasterized into resolution x resolution cells.
/// Cell (i, j) is column i, row j; rows increase with the imaginary part.
struct GridGeometry {
    cplx center{};
    double half_x = 1.0;
    double half_y = 1.0;
    int resolution = 256;

    static GridGeometry square(cplx center, double half_width, int resolution) {
        return {center, half_width, half_width, resolution};
    }

    double dx() const { return 2.0 * half_x / resolution; }
    double dy() const { return 2.0 * half_y / resolution; }
    double cell_diagonal() const { return std::hypot(dx(), dy()); }
    std::size_t size() const { return static_cast<std::size_t>(resolution) * static_cast<std::size_t>(resolution); }

    cplx cell_center(int i, int j) const {
        return {center.real() - half_x + (i + 0.5) * dx(), center.imag() - half_y + (j + 0.5) * dy()};
    }
    cplx cell_center(std::size_t idx) const {
        return cell_center(static_cast<int>(idx % static_cast<std::size_t>(resolution)),
                           static_cast<int>(idx / static_cast<std::size_t>(resolution)));
    }
    std::size_t index(int i, int j) const {
        return static_cast<std::size_t>(j) * static_cast<std::size_t>(resolution) + static_cast<std::size_t>(i);
    }
    bool contains(cplx x) const {
        return std::abs(x.real() - center.real()) < half_x && std::abs(x.imag() - center.imag()) < half_y;
    }
    /// Cell containing x; x must be inside the box.
    std::size_t locate(cplx x) const {
        int i = static_cast<int>(std::floor((x.real() - (center.real() - half_x)) / dx()));
        int j = static_cast<int>(std::floor((x.imag() - (center.imag() - half_y)) / dy()));
        i = std::clamp(i, 0, resolution - 1);
        j = std::clamp(j, 0, resolution - 1);
        return index(i, j);
    }
};

enum class CellClass : std::uint8_t { Escaped = 0, Basin = 1, Undecided = 2 };

/// Rasterized membership mask with per-cell entry/exit times and component labels.
struct GridDomain {
    GridGeometry geom;
    std::vector<CellClass> mask;
    std::vector<int> steps;   // entry time for Basin, exit time for Escaped
    std::vector<int> labels;  // component id for Basin cells, -1 otherwise
    int n_components = 0;

    std::size_t count(CellClass c) const;
    double undecided_fraction() const;
    bool is_basin(std::size_t idx) const { return mask[idx] == CellClass::Basin; }
    /// Basin cells with at least one 4-neighbor that is not Basin.
    std::vector<std::size_t> boundary_cells() const;
};

/// 4-connected labeling of Basin cells in scanline order; the component holding
/// the Basin cell nearest the box center's origin point gets id 0.
void label_components(GridDomain& grid);

/// Holes of one component: 8-connected components of its complement that do
/// not touch the box border.
int hole_count(const GridDomain& grid, int label);

/// Single-component mask built from an arbitrary predicate (tests, model domains).
GridDomain mask_from_predicate(const GridGeometry& geom, const std::function<bool(cplx)>& inside);

}  // namespace kobasin
