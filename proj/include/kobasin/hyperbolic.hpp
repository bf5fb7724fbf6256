#pragma once

#include <limits>
#include <string>
#include <vector>

#include "kobasin/grid.hpp"
#include "kobasin/parallel.hpp"
#include "kobasin/skew_product.hpp"

namespace kobasin {

enum class Method { SliceGraph, Chain, Polydisc4d, ClosedForm, Projection };
const char* to_string(Method m);

struct DistanceEstimate {
    double lower = 0.0;
    double upper = std::numeric_limits<double>::infinity();
    Method method = Method::ClosedForm;
    int resolution = 0;
    /// Raster lower bounds certify lower / lower_slack; 1 for closed forms.
    double lower_slack = 1.0;
};

/// Disclosed slack on raster lower bounds (grid paths only approximate the
/// infimum over all curves).
inline constexpr double kLowerSlack = 1.05;

/// Poincare distance on the unit disc, density 1 at the origin.
DistanceEstimate disc_distance(cplx r1, cplx r2);
/// Same, on the disc of the given radius about 0.
double disc_distance_radius(cplx r1, cplx r2, double radius);

/// Koebe-bracketed density of one raster component.
struct DensityField {
    GridGeometry geom;
    std::vector<char> inside;
    std::vector<double> delta;  // distance to the complement, 0 outside
    std::vector<double> lower;  // 1/(4 delta) when simply connected, else 0
    std::vector<double> upper;  // 1/delta
    int holes = -1;             // -1: not computed, lower bound disabled

    bool simply_connected() const { return holes == 0; }
};

/// Exact Euclidean distance transform on cell centers (the box exterior counts
/// as complement). delta is the distance to the nearest complement center less
/// half a cell, so the disc of radius delta lies in the union of inside cells.
DensityField density_field(const GridDomain& grid, int label);
/// Field over an arbitrary mask; hole count given by the caller (-1 if unknown).
DensityField density_field(const GridGeometry& geom, std::vector<char> inside, int holes);

/// Single-source shortest paths over the 8-neighbor cell graph with edge weight
/// = mean endpoint density times the Euclidean step. Unreachable cells get +inf.
std::vector<double> cell_distances(const DensityField& field, std::size_t source, bool use_upper);

/// Upper-density length of the straight segment from a point to the center of
/// its cell.
double cell_offset(const DensityField& field, cplx x);

/// Distance between two cells. Throws Disconnected if q is unreachable from p.
DistanceEstimate slice_distance(const DensityField& field, std::size_t p, std::size_t q);
/// Between arbitrary points of inside cells; in-cell offsets added to the upper bound.
DistanceEstimate slice_distance(const DensityField& field, cplx p, cplx q);

/// Lower bound on d_Omega(p, q) by holomorphic projection: the enclosing discs
/// |z| <= z_bound and |w| <= w_bound of the escape certificate (closed form),
/// and, when `u_field` is given and p.z, q.z lie in it, the raster lower bound in U.
DistanceEstimate projection_lower(const SkewProduct& f, const Point2& p, const Point2& q,
                                  const DensityField* u_field = nullptr);

/// Coarse 4D membership mask, cell index = z_cell * n^2 + w_cell.
struct Mask4D {
    GridGeometry zg;
    GridGeometry wg;
    std::vector<char> inside;

    int n() const { return zg.resolution; }
    std::size_t locate(const Point2& x) const;
};

/// Mask of Basin points of f on zg x wg (both of resolution n <= 48).
Mask4D basin_mask_4d(const SkewProduct& f, const GridGeometry& zg, const GridGeometry& wg, double eps_attract,
                     int max_iter, const ParallelMap& pool = ParallelMap{});

/// Dijkstra over the 4D cell graph (8 moves in the z-plane, 8 in the w-plane);
/// each edge costs the polydisc distance inside the inscribed polydisc of an
/// endpoint. Throws ResourceCap if the node count exceeds max_nodes.
DistanceEstimate polydisc_distance_4d(const Mask4D& mask, const Point2& p, const Point2& q,
                                      std::size_t max_nodes = 48ull * 48 * 48 * 48);

}  // namespace kobasin
