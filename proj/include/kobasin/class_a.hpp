#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "kobasin/dynamics.hpp"

namespace kobasin {

enum class Verdict { Pass, Fail, Inconclusive };
const char* to_string(Verdict v);

struct Check {
    std::string name;
    Verdict verdict = Verdict::Inconclusive;
    std::string witness;  // violating coefficient or point on FAIL, evidence otherwise
};

struct ConditionItem {
    int item = 0;
    Verdict verdict = Verdict::Inconclusive;
    std::string witness;
    std::vector<Point2> points;
    std::size_t examined = 0;
};

struct MembershipReport {
    std::string map;
    std::string map_hash;
    std::vector<Check> p_checks;
    std::vector<Check> q_checks;
    std::vector<ConditionItem> condition_c;

    Verdict overall() const;
    nlohmann::json to_json() const;
    /// Human-readable table with witnesses.
    std::string table() const;
};

/// The standing hypotheses on P and Q, decided in exact arithmetic on the exact
/// coefficients. The degree bound on Q_j is evaluated for j >= 1; the literal
/// j > 1 form is reported as an extra informational line.
MembershipReport check_hypotheses(const SkewProduct& f);

struct ConditionOptions {
    double dilation = 2.0;      // in slice cells around each critical point
    int samples = 10000;        // boundary cells examined for item 1
    int max_iter = 500;
    double eps_attract = 0.03;
    int slice_resolution = 256; // sets the slice cell size for the dilation patch
    std::uint64_t seed = 1;
    double margin = 1e-9;       // minimum orbit distance from 0 in float mode
};

/// The four critical-orbit conditions. u_grid is the raster of U.
std::vector<ConditionItem> check_condition_c(const SkewProduct& f, const GridDomain& u_grid, const ConditionOptions& opt,
                                             const ParallelMap& pool = ParallelMap{});

/// Hypotheses plus condition C.
MembershipReport check_membership(const SkewProduct& f, const GridDomain& u_grid, const ConditionOptions& opt,
                                  const ParallelMap& pool = ParallelMap{});

struct ExampleBounds {
    mpq_class L, B;
    mpq_class star;        // B - 1/2 - 25L/(16B), needs >= 1
    mpq_class starstar;    // 9L/16 - 1/16, needs > B
    mpq_class statement;   // B - 25L/(16B), needs >= 3/2 (same constraint as star)
    mpq_class critical_value;  // Q(3/4, -1/4) = 9L/16 - 1/16
    bool star_pass = false;
    bool starstar_pass = false;
    bool statement_pass = false;

    bool pass() const { return star_pass && starstar_pass; }
    nlohmann::json to_json() const;
};

ExampleBounds verify_example_bounds(const mpq_class& L, const mpq_class& B);

}  // namespace kobasin
