#include "kobasin/class_a.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>

namespace kobasin {

const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::Pass: return "PASS";
        case Verdict::Fail: return "FAIL";
        case Verdict::Inconclusive: return "INCONCLUSIVE";
    }
    return "?";
}

namespace {

std::string fmt(cplx c) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "%.12g%+.12gi", c.real(), c.imag());
    return buf;
}

std::string fmt(const Point2& p) { return "(" + fmt(p.z) + ", " + fmt(p.w) + ")"; }

Verdict combine(const std::vector<Verdict>& vs) {
    if (std::find(vs.begin(), vs.end(), Verdict::Fail) != vs.end()) return Verdict::Fail;
    if (std::find(vs.begin(), vs.end(), Verdict::Inconclusive) != vs.end()) return Verdict::Inconclusive;
    return Verdict::Pass;
}

Check make(std::string name, bool ok, std::string witness) {
    return {std::move(name), ok ? Verdict::Pass : Verdict::Fail, std::move(witness)};
}

// Nearest rational with denominator <= 10^6 by continued fractions.
mpq_class snap(double x) {
    if (!std::isfinite(x)) return 0;
    mpz_class h0 = 0, h1 = 1, k0 = 1, k1 = 0;
    double r = x;
    for (int it = 0; it < 40; ++it) {
        double a = std::floor(r);
        mpz_class ai(a);
        mpz_class h2 = ai * h1 + h0, k2 = ai * k1 + k0;
        if (k2 > 1000000) break;
        h0 = h1;
        h1 = h2;
        k0 = k1;
        k1 = k2;
        double frac = r - a;
        if (frac < 1e-12) break;
        r = 1.0 / frac;
    }
    mpq_class q(h1, k1);
    q.canonicalize();
    return q;
}

std::optional<QComplex> exact_root(const ExactPoly& p, cplx approx) {
    QComplex c{snap(approx.real()), snap(approx.imag())};
    if (p(c).is_zero()) return c;
    return std::nullopt;
}

std::size_t bit_size(const QComplex& c) {
    return mpz_sizeinbase(c.re.get_num_mpz_t(), 2) + mpz_sizeinbase(c.re.get_den_mpz_t(), 2) +
           mpz_sizeinbase(c.im.get_num_mpz_t(), 2) + mpz_sizeinbase(c.im.get_den_mpz_t(), 2);
}

// Radius r of a disc about 0 on which g (g(0) = 0, g'(0) != 0) is injective and
// maps the disc into itself. 0 if none is found.
double injective_radius(const ComplexPoly& g) {
    const double m1 = std::abs(g.coeff(1));
    if (m1 == 0.0 || m1 >= 1.0 || std::abs(g.coeff(0)) != 0.0) return 0.0;
    for (double r = 1.0; r > 1e-30; r *= 0.5) {
        double dev = 0.0, mod = m1;
        for (int k = 2; k <= g.degree(); ++k) {
            dev += k * std::abs(g.coeff(k)) * std::pow(r, k - 1);
            mod += std::abs(g.coeff(k)) * std::pow(r, k - 1);
        }
        // |g'(w) - g'(0)| < |g'(0)| gives injectivity on the convex disc.
        if (dev < 0.5 * m1 && mod < 0.9) return 0.9 * r;
    }
    return 0.0;
}

// Decides "g^n(c) != 0 for all n >= 1" for one critical point c attracted to 0.
Verdict orbit_avoids_zero(const ComplexPoly& g, const ExactPoly& g_exact, const ExactPoly& dg_exact, cplx c,
                          int max_iter, double margin, std::string& witness, Point2& where, bool in_z) {
    const double r = injective_radius(g);
    auto place = [&](cplx v) { return in_z ? Point2{v, 0.0} : Point2{0.0, v}; };
    if (auto ce = exact_root(dg_exact, c); ce && r > 0.0) {
        const mpq_class r2 = mpq_class(r) * mpq_class(r);
        QComplex w = *ce;
        std::string orbit = w.str();
        for (int n = 1; n <= max_iter; ++n) {
            w = g_exact(w);
            if (n <= 8) orbit += " -> " + w.str();
            if (w.is_zero()) {
                witness = "exact orbit " + orbit + " reaches 0 at step " + std::to_string(n);
                where = place(ce->to_double());
                return Verdict::Fail;
            }
            if (w.norm() < r2) {
                witness = "exact orbit of " + ce->str() + " enters the injectivity disc |w| < " + std::to_string(r) +
                          " at step " + std::to_string(n) + " without hitting 0";
                where = place(ce->to_double());
                return Verdict::Pass;
            }
            if (bit_size(w) > 400000) break;
        }
    }
    if (r <= 0.0) {
        witness = "no injectivity disc about 0; cannot decide " + fmt(c);
        where = place(c);
        return Verdict::Inconclusive;
    }
    cplx w = c;
    double closest = std::numeric_limits<double>::infinity();
    for (int n = 1; n <= max_iter; ++n) {
        w = g(w);
        if (std::abs(w) < r) {
            closest = std::min(closest, std::abs(w));
            where = place(c);
            if (closest > margin) {
                witness = "float orbit of " + fmt(c) + " enters |w| < " + std::to_string(r) + " at step " +
                          std::to_string(n) + ", min distance to 0 " + std::to_string(closest);
                return Verdict::Pass;
            }
            witness = "float orbit of " + fmt(c) + " comes within " + std::to_string(closest) + " of 0";
            return Verdict::Inconclusive;
        }
        closest = std::min(closest, std::abs(w));
    }
    witness = "orbit of " + fmt(c) + " did not settle within max_iter";
    where = place(c);
    return Verdict::Inconclusive;
}

ExactPoly q0_exact(const SkewProduct& f) { return f.q_exact().q_j(0); }

}  // namespace

Verdict MembershipReport::overall() const {
    std::vector<Verdict> vs;
    for (const auto& c : p_checks) vs.push_back(c.verdict);
    for (const auto& c : q_checks) vs.push_back(c.verdict);
    for (const auto& c : condition_c) vs.push_back(c.verdict);
    return combine(vs);
}

nlohmann::json MembershipReport::to_json() const {
    nlohmann::json j;
    j["map"] = map;
    j["map_hash"] = map_hash;
    auto checks = [](const std::vector<Check>& cs) {
        nlohmann::json a = nlohmann::json::array();
        for (const auto& c : cs) a.push_back({{"name", c.name}, {"verdict", to_string(c.verdict)}, {"witness", c.witness}});
        return a;
    };
    j["p_checks"] = checks(p_checks);
    j["q_checks"] = checks(q_checks);
    nlohmann::json items = nlohmann::json::array();
    for (const auto& c : condition_c) {
        nlohmann::json pts = nlohmann::json::array();
        for (const auto& p : c.points) pts.push_back({p.z.real(), p.z.imag(), p.w.real(), p.w.imag()});
        items.push_back({{"item", c.item},
                         {"verdict", to_string(c.verdict)},
                         {"witness", c.witness},
                         {"points", pts},
                         {"examined", c.examined}});
    }
    j["condition_c"] = items;
    j["overall"] = to_string(overall());
    return j;
}

std::string MembershipReport::table() const {
    std::ostringstream os;
    os << "map   " << map << "\nhash  " << map_hash << "\n\n";
    auto row = [&](const std::string& group, const std::string& name, Verdict v, const std::string& witness) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "%-3s %-46s %-12s ", group.c_str(), name.c_str(), to_string(v));
        os << buf << witness << "\n";
    };
    for (const auto& c : p_checks) row("P", c.name, c.verdict, c.witness);
    for (const auto& c : q_checks) row("Q", c.name, c.verdict, c.witness);
    for (const auto& c : condition_c)
        row("C", "item " + std::to_string(c.item) + " (" + std::to_string(c.examined) + " examined)", c.verdict,
            c.witness);
    os << "\noverall " << to_string(overall()) << "\n";
    return os.str();
}

MembershipReport check_hypotheses(const SkewProduct& f) {
    MembershipReport r;
    r.map = f.describe();
    r.map_hash = f.hash_hex();
    const auto& p = f.p_exact();
    const auto& q = f.q_exact();
    const int d = p.degree();
    const QComplex p0 = p.coeff(0), p1 = p.coeff(1);

    r.p_checks.push_back(make("P(0) = 0", p0.is_zero(), "P(0) = " + p0.str()));
    r.p_checks.push_back(make("0 < |P'(0)|", !p1.is_zero(), "P'(0) = " + p1.str()));
    r.p_checks.push_back(make("|P'(0)| < 1", p1.norm() < 1, "|P'(0)|^2 = " + to_string(p1.norm())));
    r.p_checks.push_back(make("deg P >= 2", d >= 2, "deg P = " + std::to_string(d)));

    const ExactPoly q0 = q.q_j(0);
    const QComplex b0 = q0.coeff(0), b1 = q0.coeff(1);
    r.q_checks.push_back(make("deg_z Q <= d", q.degree_z() <= d, "deg_z Q = " + std::to_string(q.degree_z())));
    {
        bool ok = true;
        std::string w = "all Q_j, j >= 1, of degree <= " + std::to_string(d - 1);
        for (int j = 1; j <= q.degree_z(); ++j) {
            const auto qj = q.q_j(j);
            if (!qj.is_zero() && qj.degree() > d - 1) {
                ok = false;
                w = "Q_" + std::to_string(j) + " has degree " + std::to_string(qj.degree());
                break;
            }
        }
        r.q_checks.push_back(make("deg Q_j <= d-1 for j >= 1", ok, w));
    }
    {
        bool ok = true;
        std::string w = "all Q_j, j > 1, of degree <= " + std::to_string(d - 1);
        for (int j = 2; j <= q.degree_z(); ++j) {
            const auto qj = q.q_j(j);
            if (!qj.is_zero() && qj.degree() > d - 1) {
                ok = false;
                w = "Q_" + std::to_string(j) + " has degree " + std::to_string(qj.degree());
                break;
            }
        }
        r.q_checks.push_back(make("deg Q_j <= d-1 for j > 1 (as written)", ok, w));
    }
    r.q_checks.push_back(
        make("deg Q_0 = d", !q0.is_zero() && q0.degree() == d, "deg Q_0 = " + std::to_string(q0.degree())));
    r.q_checks.push_back(make("Q_0(0) = 0", b0.is_zero(), "Q_0(0) = " + b0.str()));
    r.q_checks.push_back(make("0 < |Q_0'(0)|", !b1.is_zero(), "Q_0'(0) = " + b1.str()));
    r.q_checks.push_back(make("|Q_0'(0)| < 1", b1.norm() < 1, "|Q_0'(0)|^2 = " + to_string(b1.norm())));
    r.q_checks.push_back(make("a < b", p1.norm() < b1.norm(),
                              "|P'(0)|^2 = " + to_string(p1.norm()) + ", |Q_0'(0)|^2 = " + to_string(b1.norm())));
    const QComplex qz = q.coeff(1, 0);
    r.q_checks.push_back(make("dQ/dz(0,0) = 0", qz.is_zero(), "dQ/dz(0,0) = " + qz.str()));
    return r;
}

std::vector<ConditionItem> check_condition_c(const SkewProduct& f, const GridDomain& u_grid, const ConditionOptions& opt,
                                             const ParallelMap& pool) {
    std::vector<ConditionItem> items(4);
    for (int i = 0; i < 4; ++i) items[static_cast<std::size_t>(i)].item = i + 1;

    // Item 1: critical points over the boundary of U must stay off the closure of Omega.
    {
        auto& it = items[0];
        auto cells = u_grid.boundary_cells();
        if (cells.size() > static_cast<std::size_t>(opt.samples)) {
            std::mt19937_64 rng(opt.seed);
            std::shuffle(cells.begin(), cells.end(), rng);
            cells.resize(static_cast<std::size_t>(opt.samples));
            std::sort(cells.begin(), cells.end());
        }
        const double h = 2.0 * f.escape().w_bound / opt.slice_resolution;
        const int k = static_cast<int>(std::ceil(opt.dilation));
        struct Outcome {
            Verdict v = Verdict::Pass;
            Point2 point;
            std::string why;
        };
        std::vector<Outcome> out(cells.size());
        pool.for_each(cells.size(), [&](std::size_t i) {
            const cplx z = u_grid.geom.cell_center(cells[i]);
            const auto crit = roots(f.dq_dw().in_w(z));
            for (cplx w : crit) {
                auto c = classify_point(f, {z, w}, opt.eps_attract, opt.max_iter);
                if (c.basin()) {
                    out[i] = {Verdict::Fail, {z, w}, "critical point " + fmt(Point2{z, w}) + " is in the basin"};
                    return;
                }
                bool undecided = !c.escaped();
                for (int a = -k; a <= k; ++a)
                    for (int b = -k; b <= k; ++b) {
                        if (std::hypot(a, b) > opt.dilation || (a == 0 && b == 0)) continue;
                        const Point2 x{z, w + cplx(a * h, b * h)};
                        auto cx = classify_point(f, x, opt.eps_attract, opt.max_iter);
                        if (cx.basin()) {
                            out[i] = {Verdict::Fail, x,
                                      "basin point " + fmt(x) + " within dilation of critical point " + fmt(w)};
                            return;
                        }
                        if (!cx.escaped()) undecided = true;
                    }
                if (undecided && out[i].v == Verdict::Pass)
                    out[i] = {Verdict::Inconclusive, {z, w}, "orbit of " + fmt(Point2{z, w}) + " undecided"};
            }
        });
        it.examined = cells.size();
        it.verdict = Verdict::Pass;
        it.witness = "all critical points over " + std::to_string(cells.size()) + " boundary cells escape";
        for (const auto& o : out) {
            if (o.v == Verdict::Fail) {
                it.verdict = Verdict::Fail;
                it.witness = o.why;
                it.points = {o.point};
                break;
            }
            if (o.v == Verdict::Inconclusive && it.verdict == Verdict::Pass) {
                it.verdict = Verdict::Inconclusive;
                it.witness = o.why;
                it.points = {o.point};
            }
        }
        if (cells.empty()) {
            it.verdict = Verdict::Inconclusive;
            it.witness = "no boundary cells in the U raster";
        }
    }

    const ComplexPoly q0 = f.q().q_j(0);
    const ExactPoly q0e = q0_exact(f);
    const ExactPoly dq0e = q0e.derivative();
    const auto q0_crit = roots(q0.derivative());

    // Item 2: critical points of Q_0 outside Omega_0 escape under Q_0.
    {
        auto& it = items[1];
        std::vector<Verdict> vs;
        const double rq = escape_radius_1d(q0);
        for (cplx w : q0_crit) {
            if (classify_point(f, {0.0, w}, opt.eps_attract, opt.max_iter).basin()) continue;
            ++it.examined;
            auto c = classify_point_1d(q0, w, opt.eps_attract, opt.max_iter, rq);
            if (c.escaped()) {
                vs.push_back(Verdict::Pass);
                it.witness += "w = " + fmt(w) + " escapes at step " + std::to_string(c.n) + "; ";
            } else {
                vs.push_back(Verdict::Inconclusive);
                it.points.push_back({0.0, w});
                it.witness += "w = " + fmt(w) + " stays bounded for " + std::to_string(opt.max_iter) + " steps; ";
            }
        }
        it.verdict = combine(vs);
        if (it.examined == 0) it.witness = "no critical point of Q_0 outside Omega_0";
    }

    // Item 3: critical points of Q_0 inside Omega_0 never land on 0.
    {
        auto& it = items[2];
        std::vector<Verdict> vs;
        for (cplx w : q0_crit) {
            if (!classify_point(f, {0.0, w}, opt.eps_attract, opt.max_iter).basin()) continue;
            ++it.examined;
            std::string why;
            Point2 where;
            auto v = orbit_avoids_zero(q0, q0e, dq0e, w, opt.max_iter, opt.margin, why, where, false);
            vs.push_back(v);
            if (v != Verdict::Pass) it.points.push_back(where);
            if (v == Verdict::Fail || vs.size() == 1) it.witness = why;
        }
        it.verdict = combine(vs);
        if (it.examined == 0) it.witness = "no critical point of Q_0 in Omega_0";
    }

    // Item 4: critical points of P in U never land on 0.
    {
        auto& it = items[3];
        std::vector<Verdict> vs;
        const ExactPoly pe = f.p_exact();
        const ExactPoly dpe = pe.derivative();
        const double rp = escape_radius_1d(f.p());
        for (cplx c : roots(f.dp())) {
            if (!classify_point_1d(f.p(), c, opt.eps_attract, opt.max_iter, rp).basin()) continue;
            ++it.examined;
            std::string why;
            Point2 where;
            auto v = orbit_avoids_zero(f.p(), pe, dpe, c, opt.max_iter, opt.margin, why, where, true);
            vs.push_back(v);
            if (v != Verdict::Pass) it.points.push_back(where);
            if (v == Verdict::Fail || vs.size() == 1) it.witness = why;
        }
        it.verdict = combine(vs);
        if (it.examined == 0) it.witness = "no critical point of P in U";
    }
    return items;
}

MembershipReport check_membership(const SkewProduct& f, const GridDomain& u_grid, const ConditionOptions& opt,
                                  const ParallelMap& pool) {
    auto r = check_hypotheses(f);
    r.condition_c = check_condition_c(f, u_grid, opt, pool);
    return r;
}

nlohmann::json ExampleBounds::to_json() const {
    return {{"L", to_string(L)},
            {"B", to_string(B)},
            {"star", {{"value", to_string(star)}, {"decimal", star.get_d()}, {"needs", ">= 1"}, {"verdict", star_pass ? "PASS" : "FAIL"}}},
            {"starstar",
             {{"value", to_string(starstar)}, {"decimal", starstar.get_d()}, {"needs", "> B"}, {"verdict", starstar_pass ? "PASS" : "FAIL"}}},
            {"statement_form",
             {{"value", to_string(statement)}, {"needs", ">= 3/2"}, {"verdict", statement_pass ? "PASS" : "FAIL"}}},
            {"critical_value_at_3_4", to_string(critical_value)}};
}

ExampleBounds verify_example_bounds(const mpq_class& L, const mpq_class& B) {
    ExampleBounds e;
    e.L = L;
    e.B = B;
    e.L.canonicalize();
    e.B.canonicalize();
    e.star = B - mpq_class(1, 2) - mpq_class(25) * L / (mpq_class(16) * B);
    e.starstar = mpq_class(9, 16) * L - mpq_class(1, 16);
    e.statement = B - mpq_class(25) * L / (mpq_class(16) * B);
    e.star.canonicalize();
    e.starstar.canonicalize();
    e.statement.canonicalize();
    e.star_pass = e.star >= 1;
    e.starstar_pass = e.starstar > B;
    e.statement_pass = e.statement >= mpq_class(3, 2);
    // |Q(z, -1/4)| on |z| = 3/4 is smallest at z = 3/4; evaluated on the map itself.
    const auto f = maps::worked_example(L);
    const QComplex v = f.q_exact()(QComplex(mpq_class(3, 4)), QComplex(mpq_class(-1, 4)));
    e.critical_value = v.re;
    return e;
}

}  // namespace kobasin
