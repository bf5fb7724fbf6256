#pragma once

#include <vector>

#include "kobasin/grid.hpp"
#include "kobasin/parallel.hpp"
#include "kobasin/skew_product.hpp"

namespace kobasin {

struct Classification {
    enum class Kind { Basin, Escaped, Undecided };
    Kind kind = Kind::Undecided;
    int n = 0;  // entry time (Basin) or exit time (Escaped)

    bool basin() const { return kind == Kind::Basin; }
    bool escaped() const { return kind == Kind::Escaped; }
};

/// Basin(n): first n with max(|z_n|, |w_n|) <= eps_attract.
/// Escaped(n): first n with max(|z_n|, |w_n|) > escape radius.
Classification classify_point(const SkewProduct& f, const Point2& x, double eps_attract, int max_iter);

/// One-variable version for P on its own; escape past `escape_radius`.
Classification classify_point_1d(const ComplexPoly& p, cplx z, double eps_attract, int max_iter,
                                 double escape_radius);

/// Escape radius for P alone: twice the sharp Cauchy bound past which |P(z)| > |z|.
double escape_radius_1d(const ComplexPoly& p);

/// True when 50 samples on the boundary of the bidisc of radius eps all have
/// max-modulus strictly decreasing for 5 consecutive steps.
bool certify_attraction_radius(const SkewProduct& f, double eps);
/// Largest eps = start / 2^k (k <= 40) passing certify_attraction_radius.
double choose_attraction_radius(const SkewProduct& f, double start = 0.25);

struct GridOptions {
    double eps_attract = 0.03;
    int max_iter = 500;
};

/// Basin of P around its attracting fixed point 0. Throws HypothesisViolation
/// when 0 is not an attracting fixed point.
GridDomain basin_grid_1d(const ComplexPoly& p, const GridGeometry& geom, const GridOptions& opt,
                         const ParallelMap& pool = ParallelMap{});

/// Throws NonConvergence when more than `limit` of the cells are Undecided.
void require_decided(const GridDomain& grid, const std::string& what, double limit = 0.01);

struct SliceDomain {
    cplx z{};
    GridDomain grid;  // in the w-plane

    bool empty() const { return grid.count(CellClass::Basin) == 0; }
};

SliceDomain basin_grid_slice(const SkewProduct& f, cplx z, const GridGeometry& geom, const GridOptions& opt,
                             const ParallelMap& pool = ParallelMap{});

/// Slice box fitted to the slice: a coarse pass over |w| <= w_bound locates the
/// non-escaping cells (retried at 2x and 4x resolution if none are found); the
/// fine box is their bounding square padded by 2.5 coarse cells.
GridGeometry fit_slice_box(const SkewProduct& f, cplx z, const GridOptions& opt, int fine_resolution,
                           int coarse_resolution = 64);

struct MultiplierReport {
    double a = 0.0;
    double b = 0.0;
    bool a_positive = false;
    bool b_positive = false;
    bool a_attracting = false;
    bool b_attracting = false;
    bool a_lt_b = false;
    bool attracting = false;  // both multipliers inside the unit disc
};

MultiplierReport check_multipliers(const SkewProduct& f);

/// Strong stable manifold w = f0(z) = sum_{k>=2} c_k z^k near the origin.
struct StableSeries {
    std::vector<cplx> coeffs;  // index = power; coeffs[0] = coeffs[1] = 0
    int order = 0;
    double epsilon = 0.0;

    cplx operator()(cplx z) const;
    cplx derivative(cplx z) const;
};

struct SeriesOptions {
    double residual_tol = 1e-8;  // invariance residual allowed on |z| = epsilon
    double epsilon_max = 0.5;
    double resonance_tol = 1e-12;
};

/// Solves Q(z, f(z)) = f(P(z)) order by order:
/// (b_lin - a_lin^k) c_k = [z^k] f_{<k}(P(z)) - [z^k] (Q(z, f_{<k}(z)) - b_lin f_{<k}(z)).
/// Throws ResonanceDegeneracy when b_lin - a_lin^k vanishes and the right side does not.
StableSeries stable_manifold_series(const SkewProduct& f, int order, const SeriesOptions& opt = {});

/// max over |z| = r of |Q(z, f0(z)) - f0(P(z))|.
double series_residual(const SkewProduct& f, const StableSeries& s, double r, int samples = 128);

}  // namespace kobasin
