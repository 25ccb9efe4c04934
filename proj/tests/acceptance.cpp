// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

#include "kwr/bounds.hpp"
#include "kwr/quadrature.hpp"
#include "kwr/revenue.hpp"
#include "kwr/worst_case_lp.hpp"

using namespace kwr;

namespace {

struct Result {
    bool pass = true;
    std::string detail;
};

void fail(Result& r, const std::string& why) {
    if (r.pass) r.detail = why;
    r.pass = false;
}

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

// Pr[at least `need` successes] by summing over all 2^n outcomes
double enumerate_count(const std::vector<double>& q, int need) {
    const std::size_t n = q.size();
    double total = 0;
    for (std::uint64_t mask = 0; mask < (1ull << n); ++mask) {
        double p = 1;
        int c = 0;
        for (std::size_t i = 0; i < n; ++i) {
            bool on = (mask >> i) & 1;
            p *= on ? q[i] : 1 - q[i];
            c += on;
        }
        if (c >= need) total += p;
    }
    return total;
}

Marginal random_regular_discrete(std::mt19937_64& g) {
    std::uniform_real_distribution<double> u(0, 1);
    const std::size_t m = 2 + g() % 5;
    const bool er = g() % 2;
    double lo = 0.5 + u(g), hi = lo * (1.5 + 3 * u(g));
    std::vector<double> pts = {lo};
    while (pts.size() < m) pts.push_back(lo + (hi - lo) * u(g));
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    auto tail = [&](double v) { return v == lo ? 1.0 : er ? std::min(1.0, lo / v) : (hi - v) / (hi - lo); };
    std::vector<double> masses;
    for (std::size_t k = 0; k < pts.size(); ++k) masses.push_back(tail(pts[k]) - (k + 1 < pts.size() ? tail(pts[k + 1]) : 0.0));
    return Marginal::discrete(pts, masses);
}

// max of Q2_ind over q_i = p_i/((1-p_i)t+p_i) with p on a 1/res grid summing to s0
double grid_max_q2(double s0, double t, std::size_t n, int res) {
    const int total = static_cast<int>(std::lround(s0 * res));
    double best = 0.0;
    std::vector<int> k(n, 0);
    std::vector<double> q(n);
    std::function<void(std::size_t, int)> rec = [&](std::size_t i, int left) {
        if (i + 1 == n) {
            k[i] = left;
            for (std::size_t j = 0; j < n; ++j) {
                double p = k[j] / static_cast<double>(res);
                q[j] = p / ((1 - p) * t + p);
            }
            best = std::max(best, enumerate_count(q, 2));
            return;
        }
        for (int a = 0; a <= left; ++a) {
            k[i] = a;
            rec(i + 1, left - a);
        }
    };
    rec(0, total);
    return best;
}

Result criterion1() {
    Result r;
    const std::size_t n = 100;
    const double eps = 1e-6, dn = 100.0;
    auto prior = myerson_counterexample(n, eps);
    auto ms = prior.marginals();
    double adv = revenue_exact(prior, Mechanism(Myerson{ms})).mean;
    double expected = 3 - 2 / dn;
    if (std::fabs(adv - expected) > 1e-6 + 10 * eps) fail(r, fmt("adversarial revenue %.12g vs %.12g", adv, expected));
    // independent prior: posting the big bidder's lowest value always sells
    const auto& big = ms.back();
    double always_sell = big.support_lo() * big.prob_greater(big.support_lo() - 1e-12);
    if (always_sell < dn) fail(r, fmt("always-sell revenue %.12g < n", always_sell));
    double ratio = always_sell / adv;
    if (ratio < dn / 3) fail(r, fmt("ratio %.6g < n/3", ratio));
    if (r.pass) r.detail = fmt("revenue %.10f, ratio %.4f", adv, ratio);
    return r;
}

Result criterion2() {
    Result r;
    const std::size_t n = 100;
    const double eps = 1e-6, dn = 100.0;
    auto prior = myerson_counterexample(n, eps);
    auto ms = prior.marginals();
    Mechanism ar(AnonymousReserve{dn * dn + eps});
    double want = dn + eps / dn;
    double prod = revenue_exact(product_prior(ms), ar).mean;
    double mix = revenue_exact(prior, ar).mean;
    if (std::fabs(prod - want) > 1e-9) fail(r, fmt("product %.15g vs %.15g", prod, want));
    if (std::fabs(mix - want) > 1e-9) fail(r, fmt("mixture %.15g vs %.15g", mix, want));
    if (r.pass) r.detail = fmt("product %.12f, mixture %.12f", prod, mix);
    return r;
}

Result criterion3() {
    Result r;
    double worst = 0;
    for (std::size_t n : {2, 5, 10}) {
        auto a = myerson_counterexample(n, 1e-6);
        auto b = uniform_q2_counterexample(n);
        for (const JointPrior* p : {&a, &b}) {
            auto rep = verify_kwise(*p, 2, natural_grids(*p), 1e-12);
            worst = std::max(worst, rep.max_deviation);
            if (!rep.pass || rep.max_deviation > 1e-12) fail(r, fmt("pairwise check failed at n=%g", double(n)));
        }
    }
    auto big = myerson_counterexample(200, 1e-6);
    auto rep3 = verify_kwise(big, 3, natural_grids(big));
    if (rep3.pass) fail(r, "3-wise check at n=200 found no violation");
    if (r.pass) r.detail = fmt("max pairwise deviation %.3g, %g 3-wise violations at n=200", worst, double(rep3.violation_count));
    return r;
}

Result criterion4() {
    Result r;
    for (std::size_t n : {2, 10, 100}) {
        const double dn = static_cast<double>(n), t = (dn - 1) / dn;
        auto prior = uniform_q2_counterexample(n);
        double ind = q2_ind(prior.marginals(), t);
        double closed = 1 - std::pow(1 - 1 / dn, dn + 1) - (dn + 1) / dn * std::pow(1 - 1 / dn, dn);
        if (std::fabs(ind - closed) > 1e-12) fail(r, fmt("Q2_ind %.15g vs %.15g at n=%g", ind, closed, dn));
        double adv = threshold_probs(prior, t).q2;
        if (std::fabs(adv - 1 / (dn * dn)) > 1e-15) fail(r, fmt("adversarial Q2 %.17g at n=%g", adv, dn));
        if (n == 100) {
            double lim = 1 - 2 / std::numbers::e;
            if (std::fabs(ind - lim) > 0.01) fail(r, fmt("Q2_ind %.6g far from %.6g", ind, lim));
            if (r.pass) r.detail = fmt("n=100: Q2_ind %.6f, limit %.6f, adversarial %.3g", ind, lim, adv);
        }
    }
    return r;
}

Result criterion5() {
    Result r;
    auto c = certify_iid_constant();
    if (std::fabs(c.beta_star - 1.0 / 3.0) > 0.01) fail(r, fmt("beta* %.6g", c.beta_star));
    if (c.min_value < 1 / 2.64 || c.min_value > 1 / 2.62) fail(r, fmt("minimum %.8g", c.min_value));
    if (r.pass) r.detail = fmt("beta* %.6f, min %.7f, constant %.5f", c.beta_star, c.min_value, c.constant);
    return r;
}

Result criterion6() {
    Result r;
    auto a = certify_ar_constant(0.674);
    double i = a.detail("integral"), qr = a.detail("qr_lb"), c1 = a.detail("case1");
    if (i < 0.0984) fail(r, fmt("I(p) %.8g", i));
    if (qr < 0.215) fail(r, fmt("QR_LB %.8g", qr));
    if (std::fabs(c1 - 2.91) > 1e-3) fail(r, fmt("case-1 constant %.8g", c1));
    if (a.value > 18.07) fail(r, fmt("final constant %.8g", a.value));
    if (r.pass) r.detail = fmt("I %.7f, QR_LB %.7f, final %.5f", i, qr, a.value);
    return r;
}

Result criterion7() {
    Result r;
    double worst = 0;
    std::size_t vectors = 0;
    for (std::size_t n = 1; n <= 4; ++n) {
        std::vector<int> k(n, 0);
        for (;;) {
            std::vector<double> q(n);
            for (std::size_t i = 0; i < n; ++i) q[i] = k[i] / 10.0;
            worst = std::max(worst, std::fabs(q2_ind_from_q(q) - enumerate_count(q, 2)));
            ++vectors;
            std::size_t i = 0;
            while (i < n && ++k[i] == 11) k[i++] = 0;
            if (i == n) break;
        }
    }
    if (worst > 1e-12) fail(r, fmt("q2_ind error %.3g", worst));

    std::mt19937_64 g(2024);
    std::uniform_real_distribution<double> u(0, 1);
    std::size_t mismatches = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 2 + g() % 3;
        std::vector<std::vector<double>> sup(n), mass(n);
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t m = 1 + g() % 3;
            for (std::size_t j = 0; j < m; ++j) sup[i].push_back(static_cast<double>(j + (g() % 2)) + j);
            std::sort(sup[i].begin(), sup[i].end());
            sup[i].erase(std::unique(sup[i].begin(), sup[i].end()), sup[i].end());
            double tot = 0;
            for (std::size_t j = 0; j < sup[i].size(); ++j) tot += (mass[i].emplace_back(0.1 + u(g)), mass[i].back());
            for (auto& x : mass[i]) x /= tot;
        }
        // perturb the product into a correlated table
        auto prod = Table::product(sup, mass);
        std::vector<std::uint32_t> cells;
        std::vector<double> pmf;
        double tot = 0;
        for (std::size_t c = 0; c < prod.num_cells(); ++c) {
            for (std::size_t i = 0; i < n; ++i) cells.push_back(prod.index(c, i));
            pmf.push_back(prod.pmf()[c] * (0.5 + u(g)));
            tot += pmf.back();
        }
        for (auto& x : pmf) x /= tot;
        Table table(sup, cells, pmf);
        for (double t : {0.0, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 5.0, 6.0}) {
            double e1 = 0, e2 = 0;
            for (std::size_t c = 0; c < table.num_cells(); ++c) {
                auto vals = table.values(c);
                int cnt = 0;
                for (double v : vals) cnt += v >= t;
                if (cnt >= 1) e1 += table.pmf()[c];
                if (cnt >= 2) e2 += table.pmf()[c];
            }
            auto tp = threshold_probs(table, t);
            if (tp.q1 != e1 || tp.q2 != e2) ++mismatches;
        }
    }
    if (mismatches) fail(r, fmt("%g threshold_probs mismatches", double(mismatches)));
    if (r.pass) r.detail = fmt("%g grid vectors, max error %.3g; tables exact", double(vectors), worst);
    return r;
}

Result criterion8() {
    Result r;
    std::mt19937_64 g(8);
    std::uniform_real_distribution<double> u(0, 1);
    double min_slack1 = INFINITY, min_slack2 = INFINITY;
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 2 + trial % 3;
        std::vector<std::vector<double>> sup(n, {0.0, 1.0}), mass;
        double s = 0;
        for (std::size_t i = 0; i < n; ++i) {
            double q = 0.02 + 0.96 * u(g);
            s += q;
            mass.push_back({1 - q, q});
        }
        auto poly = build_polytope(sup, mass, 2);
        double m1 = minimize_event_prob(poly, 1.0, 1).objective;
        double m2 = minimize_event_prob(poly, 1.0, 2).objective;
        min_slack1 = std::min(min_slack1, m1 - lb1(s));
        min_slack2 = std::min(min_slack2, m2 - lb2_clamped(s));
    }
    if (min_slack1 < -1e-9) fail(r, fmt("lb1 exceeds an LP minimum by %.3g", -min_slack1));
    if (min_slack2 < -1e-9) fail(r, fmt("lb2 exceeds an LP minimum by %.3g", -min_slack2));

    int tails = 0;
    while (tails < 50) {
        const std::size_t n = 1 + g() % 5;
        std::vector<Marginal> ms;
        for (std::size_t i = 0; i < n; ++i) {
            if (g() % 2) ms.push_back(Marginal::uniform(0, 1 + 3 * u(g)));
            else ms.push_back(Marginal::equal_revenue(0.05 + 0.9 * u(g), 1 + 5 * u(g)));
        }
        double s0 = 0, hi = 1;
        std::vector<double> bps;
        for (const auto& m : ms) {
            s0 += m.prob_greater(1.0);
            hi = std::max(hi, m.support_hi());
            bps.push_back(m.support_hi());
        }
        if (s0 > 1) continue;
        double tail = integrate([&](double t) { return q2_ind(ms, t); }, 1.0, hi, bps).value;
        if (tail > tail_upper(s0) + 1e-9) fail(r, fmt("tail %.8g above bound %.8g", tail, tail_upper(s0)));
        ++tails;
    }

    // envelopes: for regular F with p = Pr[v >= 1], the bound is above q(t) for t >= 1, below for t <= 1
    std::size_t env_points = 0;
    for (int trial = 0; trial < 40; ++trial) {
        Marginal m = g() % 2 ? Marginal::uniform(0, 1.05 + 4 * u(g)) : Marginal::equal_revenue(0.05 + 0.9 * u(g), 1.5 + 9 * u(g));
        double p = m.quantile_q(1.0);
        for (int i = 1; i <= 2000; ++i) {
            double t = 10.0 * i / 2000.0;
            double q = m.quantile_q(t), b = regular_quantile_bound(p, t);
            bool ok = t >= 1 ? q <= b + 1e-12 : q >= b - 1e-12;
            if (!ok) fail(r, fmt("envelope violated at t=%.6g: q=%.8g bound=%.8g", t, q, b));
            ++env_points;
        }
    }

    std::size_t range2_cases = 0, range2_bad = 0;
    double range2_excess = 0, bad_s0_max = 0;
    for (double s0 : {0.3, 0.6, 0.9, 1.0}) {
        for (std::size_t n : {2, 3, 4}) {
            double m1 = grid_max_q2(s0, 1.0, n, 200);
            if (m1 > range1_bound(s0) + 1e-12) fail(r, fmt("range1 below grid max at s0=%.3g", s0));
            for (double dt : {0.0, 0.5, 3.0}) {
                double t = std::max(1.0, range2_threshold(s0)) + dt;
                double m2 = grid_max_q2(s0, t, n, 200);
                ++range2_cases;
                if (m2 > range2_bound(s0, t) + 1e-12) {
                    ++range2_bad;
                    range2_excess = std::max(range2_excess, m2 - range2_bound(s0, t));
                    bad_s0_max = std::max(bad_s0_max, s0);
                }
            }
        }
    }
    if (range2_bad)
        fail(r, fmt("range2 below the grid max in %g of %g cases, s0 up to %.2g;", double(range2_bad), double(range2_cases),
                    bad_s0_max) +
                    fmt(" max excess %.3g", range2_excess));
    if (r.pass)
        r.detail = fmt("min LP slack lb1 %.3g lb2 %.3g; %g envelope points", min_slack1, min_slack2, double(env_points));
    return r;
}

Result criterion9() {
    Result r;
    std::vector<double> ps = {0.5};
    for (int i = 1; ps.size() < 50; ++i) ps.push_back(static_cast<double>(i) / 50.0 - 0.0037 * (i % 3));
    double worst = 0;
    for (double p : ps) {
        auto f = fact_integral(p);
        worst = std::max({worst, std::fabs(f.closed_form - f.left_quadrature), std::fabs(f.closed_form - f.right_quadrature)});
    }
    auto half = fact_integral(0.5);
    if (half.closed_form != 0.5) fail(r, fmt("value at 1/2 is %.17g", half.closed_form));
    if (worst > 1e-8) fail(r, fmt("three-way disagreement %.3g", worst));
    if (r.pass) r.detail = fmt("%g values, max disagreement %.3g", double(ps.size()), worst);
    return r;
}

Result criterion10() {
    Result r;
    std::mt19937_64 g(10);
    std::uniform_real_distribution<double> u(0, 1);
    double min_relax = INFINITY;
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<Marginal> ms;
        const std::size_t n = 2 + g() % 4;
        for (std::size_t i = 0; i < n; ++i) ms.push_back(random_regular_discrete(g));
        auto ex = ex_ante_level(ms);
        double my = myerson_revenue_independent(ms);
        min_relax = std::min(min_relax, 2 * ex.total_rev() - my);
        if (2 * ex.total_rev() < my - 1e-9) fail(r, fmt("2 sum rev %.10g < Myer %.10g", 2 * ex.total_rev(), my));
    }
    double worst_ratio = 0;
    for (int trial = 0; trial < 60; ++trial) {
        const std::size_t n = 3 + g() % 2;
        std::vector<Marginal> ms;
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t m = 2 + g() % 2;
            std::vector<double> pts, w;
            double v = 0.2 * u(g), tot = 0;
            for (std::size_t j = 0; j < m; ++j) {
                v += 0.2 + 2 * u(g);
                pts.push_back(v);
                w.push_back(0.1 + u(g));
                tot += w.back();
            }
            for (auto& x : w) x /= tot;
            ms.push_back(Marginal::discrete(pts, w));
        }
        auto poly = build_polytope(ms, 3);
        auto sol = minimize_revenue(poly, Mechanism(Myerson{ms}));
        double ind = myerson_revenue_independent(ms);
        worst_ratio = std::max(worst_ratio, ind / sol.objective);
        if (64 * sol.objective < ind - 1e-9) fail(r, fmt("64 Myer(F) %.10g < Myer(F_ind) %.10g", 64 * sol.objective, ind));
        if (!verify_kwise(sol.table, 3, 1e-9).pass) fail(r, "LP table is not 3-wise independent");
    }
    if (r.pass) r.detail = fmt("min relaxation slack %.3g, worst LP ratio %.5f", min_relax, worst_ratio);
    return r;
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        const char* name;
        double budget_s;
        Result (*run)();
    };
    const Criterion all[] = {
        {1, "myerson collapse", 5, criterion1},          {2, "anonymous reserve on the construction", 1, criterion2},
        {3, "pairwise certification", 30, criterion3},   {4, "Q2 gap", 30, criterion4},
        {5, "i.i.d. constant", 10, criterion5},          {6, "anonymous reserve constant", 10, criterion6},
        {7, "closed forms vs enumeration", 60, criterion7}, {8, "bound dominance", 300, criterion8},
        {9, "integral identity", 30, criterion9},        {10, "3-wise predicates", 300, criterion10},
    };
    int failures = 0;
    for (const auto& c : all) {
        auto t0 = Clock::now();
        Result r;
        try {
            r = c.run();
        } catch (const std::exception& e) {
            r.pass = false;
            r.detail = std::string("exception: ") + e.what();
        }
        double secs = seconds_since(t0);
        if (secs > c.budget_s) {
            r.detail += fmt(" (over time budget of %gs)", c.budget_s);
            r.pass = false;
        }
        std::printf("criterion %2d %s: %s [%.2fs] %s\n", c.id, r.pass ? "PASS" : "FAIL", c.name, secs, r.detail.c_str());
        std::fflush(stdout);
        failures += !r.pass;
    }
    return failures == 0 ? 0 : 1;
}
