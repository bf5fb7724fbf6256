#pragma once

#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "kobasin/hyperbolic.hpp"
#include "kobasin/preimage.hpp"

namespace kobasin {

struct ChainOptions {
    int leg2_resolution = 64;  // base grid for the distance along the sheet
    int candidates = 64;       // cap on second-leg evaluations per sample and depth
    int max_candidates = 1 << 14;
    ContinuationOptions cont;
};

struct ChainResult {
    DistanceEstimate est{0.0, std::numeric_limits<double>::infinity(), Method::Chain, 0, 1.0};
    bool ok = false;
    int node = -1;     // tree node reached
    Point2 target{};   // its coordinates
    int depth = 0;     // sheet depth T
    int base_steps = -1;  // N: first n with |P^n(z)| < epsilon
    double leg1 = 0.0;
    double leg2 = 0.0;
    std::string failure;  // diagnostics when !ok
};

using SliceProvider = std::function<std::shared_ptr<const SliceDomain>(cplx z)>;

/// Upper bounds on d_Omega(p, S) by a two-leg chain: a path in the slice from w
/// to a point eta of a pulled-back stable sheet, then a path along that sheet
/// to the preimage of the origin it passes through.
class ChainEstimator {
public:
    struct Candidate {
        SheetChain chain;
        double leg1 = 0.0;
    };

    /// Candidates and their second legs depend on the base point only, so
    /// samples sharing a slice can share them. Thread safe.
    class BaseCache {
    public:
        explicit BaseCache(cplx z) : z_(z) {}

    private:
        friend class ChainEstimator;
        cplx z_;
        std::mutex mutex_;
        bool built_ = false;
        int N_ = -1;
        std::vector<Candidate> cands_;
        std::vector<std::optional<ChainResult>> leg2_;
    };

    ChainEstimator(const SkewProduct& f, const StableSeries& series, const PreimageTree& tree,
                   const std::vector<StableGraph>& graphs, ChainOptions opt = {});

    /// One result per depth in `depths` (each at most the tree depth). Candidates
    /// of sheet depth T <= K are pooled, so bounds are non-increasing in K.
    /// `field`, if given, must be density_field(slice.grid, label of p.w);
    /// `cache`, if given, must belong to p.z.
    std::vector<ChainResult> sweep(const Point2& p, const SliceDomain& slice, const std::vector<int>& depths,
                                   const DensityField* field = nullptr, BaseCache* cache = nullptr) const;
    ChainResult estimate(const Point2& p, const SliceDomain& slice) const;

private:
    void build(BaseCache& cache) const;
    ChainResult second_leg(BaseCache& cache, std::size_t idx) const;
    bool leg2(const Candidate& c, cplx z, ChainResult& r) const;

    const SkewProduct& f_;
    const StableSeries& series_;
    const PreimageTree& tree_;
    const std::vector<StableGraph>& graphs_;
    ChainOptions opt_;
};

/// Convenience wrapper over ChainEstimator::estimate at the full tree depth.
ChainResult chain_distance_to_S(const SkewProduct& f, const StableSeries& series, const Point2& p,
                                const PreimageTree& tree, const std::vector<StableGraph>& graphs,
                                const SliceProvider& slices, const ChainOptions& opt = {});

}  // namespace kobasin
