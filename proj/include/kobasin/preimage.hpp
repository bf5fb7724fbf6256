#pragma once

#include <array>
#include <optional>
#include <unordered_map>
#include <string>
#include <vector>

#include "kobasin/dynamics.hpp"

namespace kobasin {

/// All d roots (with multiplicity) of Q(z, w) = target in w.
/// Throws DegreeDrop when the leading w-coefficient vanishes at this z.
std::vector<cplx> fiber_preimages_w(const ComplexBivar& q, cplx z, cplx target, double tol = 1e-12);

struct TreeNode {
    Point2 point;
    int depth = 0;
    int parent = -1;
    double residual = 0.0;  // max-norm |F(point) - parent point|
};

/// Truncated backward orbit of (0, 0). Node 0 is the root; nodes are stored
/// level by level and each point appears once, at its lowest depth.
struct PreimageTree {
    static constexpr double kIndexCell = 1e-6;

    std::vector<TreeNode> nodes;
    int max_depth = 0;
    int dropped_non_basin = 0;
    double merge_tol = 1e-9;

    std::size_t count_at_depth(int k) const;
    /// Path node -> ... -> root as indices.
    std::vector<int> path_to_root(int node) const;
    /// Index of a node within `tol` (max-norm) of x, if any.
    std::optional<int> find(const Point2& x, double tol) const;
    /// Nodes lying on the z = 0 fiber.
    std::vector<int> fiber_nodes() const;

    /// Appends a node and indexes it.
    int add(const TreeNode& node);

private:
    struct KeyHash {
        std::size_t operator()(const std::array<long long, 4>& k) const;
    };
    std::unordered_map<std::array<long long, 4>, std::vector<int>, KeyHash> index_;
};

struct TreeOptions {
    double root_tol = 1e-12;
    double merge_tol = 1e-9;
    bool filter_basin = true;
    double eps_attract = 0.03;
    int max_iter = 500;
};

/// Breadth-first backward orbit: depth k+1 = all (z, w) with P(z) = z_parent
/// and Q(z, w) = w_parent, for every node first seen at depth k.
PreimageTree preimage_tree(const SkewProduct& f, int depth, const TreeOptions& opt = {},
                           const ParallelMap& pool = ParallelMap{});

/// Forward orbit chain of a point on a pulled-back stable sheet of depth T:
/// z[k] = P^k(z[0]), Q(z[k], w[k]) = w[k+1], and w[T] = f0(z[T]) with |z[T]| < epsilon.
struct SheetChain {
    std::vector<cplx> z;
    std::vector<cplx> w;
    cplx slope{};  // dw[0]/dz[0] along the sheet

    int depth() const { return static_cast<int>(z.size()) - 1; }
    Point2 point() const { return {z.front(), w.front()}; }
};

struct ContinuationOptions {
    double newton_tol = 1e-13;
    int newton_iter = 30;
    double branch_tol = 1e-4;   // minimum |dQ/dw| along the chain, times coefficient scale
    double jump_factor = 10.0;  // allowed |dw| over (step * local Lipschitz estimate)
    double max_step = 0.0;      // substep length for path continuation; 0 = automatic
};

enum class ContinuationStatus { Ok, LeftDomain, NewtonFailed, BranchPoint, Jump };
const char* to_string(ContinuationStatus s);

/// Chain at the depth-T sheet through a tree node: the tree path itself.
SheetChain chain_from_tree(const PreimageTree& tree, int node);

/// Re-solves the chain at base point z, seeded from `seed` (a chain on the same
/// sheet at a nearby base point). The z-part is recomputed forward; the w-part
/// by Newton from the top level down.
ContinuationStatus continue_chain(const SkewProduct& f, const StableSeries& series, const SheetChain& seed, cplx z,
                                  SheetChain& out, const ContinuationOptions& opt = {});

/// Continues along the segment from seed's base point to z in substeps.
ContinuationStatus continue_chain_along(const SkewProduct& f, const StableSeries& series, const SheetChain& seed,
                                        cplx z, SheetChain& out, const ContinuationOptions& opt = {});

/// Follows the sheet while moving the base point so that P^T(z) runs along the
/// segment from its current value to 0. Ends at a point of the backward orbit.
ContinuationStatus lift_to_preimage(const SkewProduct& f, const StableSeries& series, const SheetChain& start,
                                    SheetChain& out, const ContinuationOptions& opt = {});

/// A stable graph w = f_n(z) over a set of base cells of a z-plane grid.
struct StableGraph {
    int index = 0;
    int depth = 0;         // chain depth T
    Point2 anchor;         // tree node the graph passes through
    GridGeometry geom;     // z-plane grid the base lives on
    std::vector<std::size_t> base;          // solved cells, flood order
    std::vector<SheetChain> chains;         // per base cell
    std::vector<std::size_t> excluded;      // cells rejected by the continuation guards
    std::vector<ContinuationStatus> excluded_reason;

    std::optional<std::size_t> slot_of(std::size_t cell) const;
    cplx value(std::size_t slot) const { return chains[slot].w.front(); }
    /// Value at an arbitrary base point by continuation from the nearest base cell.
    std::optional<cplx> eval(const SkewProduct& f, const StableSeries& series, cplx z,
                             const ContinuationOptions& opt = {}) const;
    /// Chain at an arbitrary base point, same continuation as eval.
    std::optional<SheetChain> eval_chain(const SkewProduct& f, const StableSeries& series, cplx z,
                                         const ContinuationOptions& opt = {}) const;

private:
    std::vector<long> slot_lookup_;
    friend StableGraph continue_stable_graph_from(const SkewProduct&, const StableSeries&, const SheetChain&,
                                                  const GridGeometry&, const std::function<bool(std::size_t)>&,
                                                  const ContinuationOptions&);
};

/// Flood-fill continuation of the sheet through `anchor` over the grid cells
/// accepted by `in_base`, starting at the anchor's cell. Each new cell is seeded
/// from the neighbor that reached it and cross-checked against its other solved
/// neighbors; cells failing Newton, the branch guard or the jump guard are
/// excluded and recorded.
StableGraph continue_stable_graph_from(const SkewProduct& f, const StableSeries& series, const SheetChain& anchor,
                                       const GridGeometry& geom, const std::function<bool(std::size_t)>& in_base,
                                       const ContinuationOptions& opt = {});

/// One pull-back step: the graph through (0, anchor_w) with Q(0, anchor_w) equal
/// to the value of `prev` at 0, over `target_base`.
StableGraph continue_stable_graph(const SkewProduct& f, const StableSeries& series, const StableSeries& prev,
                                  cplx anchor_w, const GridGeometry& geom,
                                  const std::function<bool(std::size_t)>& target_base,
                                  const ContinuationOptions& opt = {});
StableGraph continue_stable_graph(const SkewProduct& f, const StableSeries& series, const StableGraph& prev,
                                  cplx anchor_w, const GridGeometry& geom,
                                  const std::function<bool(std::size_t)>& target_base,
                                  const ContinuationOptions& opt = {});

/// The local graphs Sigma_n over |z| < epsilon, one per z = 0 fiber node of the tree.
std::vector<StableGraph> local_stable_graphs(const SkewProduct& f, const StableSeries& series,
                                             const PreimageTree& tree, int resolution = 33,
                                             const ContinuationOptions& opt = {});

/// max over the base of |Q(z, f_n(z)) - f_{n-1}(P(z))|. f_{n-1} is `prev` when given,
/// the series for depth-1 graphs, and otherwise a fresh solve of the shorter chain.
double graph_invariance_residual(const SkewProduct& f, const StableSeries& series, const StableGraph& g,
                                 const StableGraph* prev = nullptr);

}  // namespace kobasin
