#pragma once

#include <cstdint>
#include <memory>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "kobasin/chain.hpp"
#include "kobasin/io.hpp"

namespace kobasin {

/// Deterministic stream: mt19937_64 with hand-rolled uniform and normal draws so
/// output does not depend on the standard library's distribution code.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}
    std::uint64_t next() { return eng_(); }
    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
    double uniform(double a, double b) { return a + (b - a) * uniform(); }
    std::size_t index(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n; }
    /// Standard normal by Box-Muller.
    double normal();

private:
    std::mt19937_64 eng_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

struct Sample {
    Point2 point;
    int shell = 0;
    std::shared_ptr<const SliceDomain> slice;  // raster of the slice through point.z, if known
};

struct SamplingOptions {
    std::string strategy = "slice";  // "slice" or "ray"
    int per_shell = 100;
    int n_max = 12;
    std::uint64_t seed = 1;
    double eps_attract = 0.03;
    int max_iter = 500;
    double u_half = 2.0;
    int u_resolution = 512;
    int slice_resolution = 256;
    int base_samples = 64;  // slice strategy: base points drawn from the U raster
};

/// Points stratified by entry time n = 0..n_max, each re-verified to classify
/// Basin(n). Throws ShellEmpty(n) if a shell has no raster support.
std::vector<Sample> sample_basin(const SkewProduct& f, const SamplingOptions& opt,
                                 const ParallelMap& pool = ParallelMap{});

struct SampleRecord {
    int id = 0;
    int shell = 0;
    Point2 point;
    int node = -1;
    int preimage_depth = -1;
    Point2 target;
    double chain_upper = std::numeric_limits<double>::infinity();
    double proj_lower = 0.0;
    std::vector<double> upper_by_depth;
    std::string method = "chain";
    std::string status;  // "ok" or the failure diagnostic
    bool ok = false;
};

struct Trend {
    double slope = 0.0;
    std::string label = "indeterminate";  // bounded | growing | indeterminate
};

/// Least-squares slope over the last `window` finite entries: < 0.05 bounded,
/// > 0.3 growing, otherwise indeterminate.
Trend plateau_trend(const std::vector<double>& shell_maxima, int window = 6);

struct ExperimentReport {
    std::string map;
    std::string map_hash;
    std::string config_hash;
    std::string mode = "2d";
    std::uint64_t seed = 0;
    int depth = 0;
    std::vector<int> depths;
    double eps_attract = 0.0;
    double epsilon = 0.0;  // local stable-manifold radius
    std::vector<SampleRecord> samples;

    std::vector<int> shell_count;
    std::vector<int> shell_resolved;
    std::vector<double> shell_max_upper;  // NaN where no sample resolved
    std::vector<double> shell_max_lower;
    double c_empirical = 0.0;
    /// Max over samples resolved at every depth of the sweep; non-increasing in depth.
    std::vector<double> c_by_depth;
    std::size_t common_pool = 0;
    Trend upper_trend;
    Trend lower_trend;
    std::string trend;
    int unresolved = 0;
    int verification_failures = 0;
    bool run_failed = false;
    std::string failure_reason;

    void write_csv(std::ostream& os) const;
    nlohmann::json summary() const;
    std::string text() const;
};

struct EstimateOptions {
    std::vector<int> depths{4, 6, 8};  // the last entry is the reported depth K
    int slice_resolution = 256;
    GridOptions grid;
    ChainOptions chain;
    double unresolved_limit = 0.05;
};

/// Chain upper bounds and projection lower bounds for every sample, shell
/// maxima, C_empirical and the plateau diagnostic.
ExperimentReport estimate_C(const SkewProduct& f, const StableSeries& series, const PreimageTree& tree,
                            const std::vector<StableGraph>& graphs, const std::vector<Sample>& samples,
                            const EstimateOptions& opt, const ParallelMap& pool = ParallelMap{});

/// One-variable harness for P alone: distance in U from z to the nearest
/// preimage of 0 of depth <= K, by the raster slice estimator on U.
ExperimentReport estimate_C_1d(const ComplexPoly& p, const SamplingOptions& sampling, int depth,
                               const ParallelMap& pool = ParallelMap{});

struct Overlay {
    cplx at;
    Rgb color{255, 0, 0};
};

/// Mask (Basin black, Undecided grey, Escaped white) with markers and an
/// optional polyline; identical inputs give identical bytes.
Image render(const GridDomain& grid, const std::vector<Overlay>& markers = {}, const std::vector<cplx>& path = {});

nlohmann::json tree_to_json(const PreimageTree& tree, const std::string& map_hash, const std::string& config_hash);
/// Rebuilds a tree; throws Config if its map hash differs from `map_hash`.
PreimageTree tree_from_json(const nlohmann::json& j, const std::string& map_hash);

}  // namespace kobasin
