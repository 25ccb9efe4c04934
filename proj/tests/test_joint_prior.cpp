#include <doctest.h>

#include <stdexcept>
#include <cmath>
#include <map>
#include <random>

#include "kwr/joint_prior.hpp"

using namespace kwr;
using doctest::Approx;

namespace {

double branch_weight(const JointPrior& p, std::size_t b) {
    return std::get<MixturePrior>(p.variant()).branches.at(b).weight;
}

// Pr[v_i >= t_i for all i in S] by brute force over table cells
double joint_tail(const Table& t, const std::vector<std::size_t>& s, const std::vector<double>& th) {
    double acc = 0.0;
    for (std::size_t c = 0; c < t.num_cells(); ++c) {
        bool ok = true;
        for (std::size_t k = 0; k < s.size(); ++k) ok = ok && t.value(c, s[k]) >= th[k];
        if (ok) acc += t.pmf()[c];
    }
    return acc;
}

}  // namespace

TEST_CASE("product prior basics") {
    auto p = product_prior({Marginal::uniform(0, 1), Marginal::uniform(0, 1)});
    auto tab = discretize(p, {{0, 0.5, 1}, {0, 0.5, 1}});
    CHECK(joint_tail(tab, {0, 1}, {0.5, 0.5}) == Approx(0.25));
    CHECK(tab.num_cells() == 4);
    for (double m : tab.pmf()) CHECK(m == Approx(0.25));
    auto one = product_prior({Marginal::uniform(0, 2)});
    CHECK(one.marginal_quantile(0, 1.0) == Approx(0.5));
    auto three = product_prior({myerson_small_marginal(2), myerson_small_marginal(2), myerson_big_marginal(2, 1e-6)});
    CHECK(three.num_bidders() == 3);
}

TEST_CASE("myerson counterexample structure") {
    auto p2 = myerson_counterexample(2, 1e-6);
    CHECK(branch_weight(p2, 0) == Approx(0.25));
    CHECK(branch_weight(p2, 1) == Approx(0.25));
    CHECK(branch_weight(p2, 2) == Approx(0.5));
    const double eps = 1e-6;
    auto p10 = myerson_counterexample(10, eps);
    CHECK(p10.marginal_quantile(10, 100 + eps) == Approx(0.1).epsilon(1e-12));
    auto p3 = myerson_counterexample(3, eps);
    CHECK(p3.marginal_quantile(0, 1.0) == Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK_THROWS_AS(myerson_counterexample(1, eps), std::domain_error);
}

TEST_CASE("mixture marginals equal the declared marginals") {
    const double eps = 1e-4;
    for (std::size_t n : {2u, 5u}) {
        auto p = myerson_counterexample(n, eps);
        auto small = myerson_small_marginal(n);
        auto big = myerson_big_marginal(n, eps);
        const double dn = static_cast<double>(n);
        for (int k = 0; k <= 100; ++k) {
            double ts = 1.0 / dn + (1.0 - 1.0 / dn) * k / 100.0;
            double tb = dn + eps + (dn * dn - dn) * k / 100.0;
            CHECK(std::fabs(p.marginal_quantile(0, ts) - small.quantile_q(ts)) <= 1e-10);
            CHECK(std::fabs(p.marginal_quantile(n, tb) - big.quantile_q(tb)) <= 1e-10);
        }
        auto q = uniform_q2_counterexample(n);
        auto u = Marginal::uniform(0, 1);
        for (int k = 0; k <= 100; ++k) CHECK(std::fabs(q.marginal_quantile(1, k / 100.0) - u.quantile_q(k / 100.0)) <= 1e-10);
    }
}

TEST_CASE("uniform Q2 construction") {
    for (std::size_t n : {2u, 3u, 4u, 7u}) {
        auto p = uniform_q2_counterexample(n);
        const double dn = static_cast<double>(n), t = (dn - 1) / dn;
        for (std::size_t i = 0; i <= n; ++i) CHECK(p.marginal_quantile(i, t) == Approx(1.0 / dn).epsilon(1e-12));
        auto tab = discretize(p, natural_grids(p));
        CHECK(joint_tail(tab, {0, 1}, {t, t}) == Approx(1.0 / (dn * dn)).epsilon(1e-12));
        CHECK(threshold_probs(p, t).q2 == Approx(1.0 / (dn * dn)).epsilon(1e-12));
    }
    auto p3 = uniform_q2_counterexample(3);
    auto tab = discretize(p3, Grids(4, {0.0, 2.0 / 3.0, 1.0}));
    CHECK(tab.num_cells() == 5);  // all high, or exactly one high
    CHECK(joint_tail(tab, {0, 1, 2, 3}, {2.0 / 3, 2.0 / 3, 2.0 / 3, 2.0 / 3}) == Approx(1.0 / 9.0));
}

TEST_CASE("sampling") {
    auto pm = product_prior({Marginal::point_mass(2.0), Marginal::point_mass(3.0)});
    CHECK(sample(pm, 1) == std::vector<double>{2.0, 3.0});
    const double eps = 1e-6;
    auto p = myerson_counterexample(2, eps);
    for (std::uint64_t s = 0; s < 200; ++s) {
        auto v = sample(p, s);
        CHECK(((v[2] < 4 + eps && v[2] >= 2 + eps) || v[2] == 4 + eps));
        CHECK(v[0] >= 0.5);
        CHECK(v[0] <= 1.0);
    }
    CHECK(sample(p, 42) == sample(p, 42));
}

TEST_CASE("table sampling frequencies match the pmf") {
    Table t({{0, 1}, {0, 1}}, {0, 0, 0, 1, 1, 0, 1, 1}, {0.1, 0.2, 0.3, 0.4});
    JointPrior p(t);
    Sampler s(p);
    std::mt19937_64 rng(5);
    std::map<std::vector<double>, int> freq;
    std::vector<double> v;
    const int draws = 100000;
    for (int i = 0; i < draws; ++i) {
        s.draw(rng, v);
        ++freq[v];
    }
    double chi2 = 0.0;
    for (std::size_t c = 0; c < 4; ++c) {
        double expected = t.pmf()[c] * draws;
        double d = freq[t.values(c)] - expected;
        chi2 += d * d / expected;
    }
    CHECK(chi2 < 16.27);  // 3 dof, p = 0.001
}

TEST_CASE("empirical Q2 is within four standard errors") {
    auto p = uniform_q2_counterexample(4);
    Sampler s(p);
    std::mt19937_64 rng(99);
    std::vector<double> v;
    const double t = 0.75;
    const int draws = 1000000;
    int hits = 0;
    for (int i = 0; i < draws; ++i) {
        s.draw(rng, v);
        int c = 0;
        for (double x : v) c += x >= t;
        hits += c >= 2;
    }
    double q2 = threshold_probs(p, t).q2;
    double se = std::sqrt(q2 * (1 - q2) / draws);
    CHECK(std::fabs(hits / static_cast<double>(draws) - q2) <= 4 * se);
}

TEST_CASE("discretize preserves marginal cell masses") {
    const double eps = 1e-6;
    auto p = myerson_counterexample(2, eps);
    auto grids = natural_grids(p);
    auto tab = discretize(p, grids);
    CHECK(tab.total_mass() == Approx(1.0).epsilon(1e-12));
    for (std::size_t i = 0; i < 3; ++i) {
        auto m = p.marginal(i);
        auto masses = tab.marginal_masses(i);
        const auto& g = tab.supports()[i];
        for (std::size_t j = 0; j < g.size(); ++j) {
            double hi = j + 1 < g.size() ? m.quantile_q(g[j + 1]) : 0.0;
            CHECK(std::fabs(masses[j] - (m.quantile_q(g[j]) - hi)) <= 1e-12);
        }
    }
    // the atoms of ER[1/2, 1] at 1 and of the big bidder at 4 + eps
    CHECK(tab.marginal(0).atom_mass(1.0) == Approx(0.5).epsilon(1e-12));
    CHECK(tab.marginal(2).atom_mass(4 + eps) == Approx(0.5).epsilon(1e-12));
}

TEST_CASE("discretize rejects grids missing atoms") {
    auto p = myerson_counterexample(2, 1e-6);
    Grids g = natural_grids(p);
    g[0].erase(std::find(g[0].begin(), g[0].end(), 1.0));
    CHECK_THROWS(discretize(p, g));
}

TEST_CASE("pairwise verification of the constructions") {
    for (std::size_t n : {2u, 5u, 10u}) {
        auto m = myerson_counterexample(n, 1e-6);
        auto r = verify_kwise(m, 2, natural_grids(m));
        CHECK(r.pass);
        CHECK(r.max_deviation <= 1e-12);
        auto u = uniform_q2_counterexample(n);
        auto ru = verify_kwise(u, 2, natural_grids(u));
        CHECK(ru.pass);
        CHECK(ru.max_deviation <= 1e-12);
    }
    auto u4 = uniform_q2_counterexample(4);
    CHECK(verify_kwise(u4, 2, Grids(5, {0.0, 0.75, 1.0})).pass);
    auto u3 = uniform_q2_counterexample(3);
    auto r3 = verify_kwise(u3, 3, natural_grids(u3));
    CHECK_FALSE(r3.pass);
    CHECK(r3.violation_count > 0);
    CHECK(r3.max_deviation > 1e-3);
    CHECK_THROWS_AS(verify_kwise(u3, 5, natural_grids(u3)), std::domain_error);
    CHECK_THROWS_AS(verify_kwise(u3, 0, natural_grids(u3)), std::domain_error);
}

TEST_CASE("product priors pass every k") {
    auto p = product_prior({Marginal::discrete({1, 2}, {0.3, 0.7}), Marginal::discrete({0, 5, 6}, {0.2, 0.2, 0.6}),
                            Marginal::uniform(0, 1)});
    Grids g = {{1, 2}, {0, 5, 6}, {0, 0.25, 0.5}};
    for (std::size_t k = 1; k <= 3; ++k) {
        auto r = verify_kwise(p, k, g);
        CHECK(r.pass);
        CHECK(r.max_deviation <= 1e-15);
    }
}

TEST_CASE("pairwise independent tables on two bidders are products") {
    std::mt19937_64 g(3);
    std::uniform_real_distribution<double> u(0.05, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> a = {u(g), u(g), u(g)}, b = {u(g), u(g)};
        double sa = a[0] + a[1] + a[2], sb = b[0] + b[1];
        for (auto& x : a) x /= sa;
        for (auto& x : b) x /= sb;
        // perturb the product along a direction that changes a marginal unless zero
        Table prod = Table::product({{1, 2, 3}, {1, 2}}, {a, b});
        auto pmf = prod.pmf();
        std::vector<std::uint32_t> idx;
        for (std::size_t c = 0; c < prod.num_cells(); ++c)
            for (std::size_t i = 0; i < 2; ++i) idx.push_back(prod.index(c, i));
        Table same(prod.supports(), idx, pmf);
        auto r = verify_kwise(same, 2);
        REQUIRE(r.pass);
        for (std::size_t c = 0; c < prod.num_cells(); ++c)
            CHECK(std::fabs(same.pmf()[c] - a[same.index(c, 0)] * b[same.index(c, 1)]) <= 1e-10);
        double delta = 0.01 * std::min(pmf[0], pmf[1]);
        pmf[0] += delta;
        pmf[1] -= delta;
        Table moved(prod.supports(), idx, pmf);
        // marginals are preserved only for bidder 0; pairwise must fail
        CHECK_FALSE(verify_kwise(moved, 2).pass);
    }
}

TEST_CASE("threshold probabilities") {
    auto p = product_prior({Marginal::uniform(0, 1), Marginal::uniform(0, 1)});
    auto tp = threshold_probs(p, 0.5);
    CHECK(tp.q1 == Approx(0.75));
    CHECK(tp.q2 == Approx(0.25));
    for (std::size_t n : {2u, 5u, 10u}) {
        const double dn = static_cast<double>(n), t = (dn - 1) / dn;
        std::vector<Marginal> ms(n + 1, Marginal::uniform(0, 1));
        double expected = 1 - std::pow(1 - 1 / dn, dn + 1) - (dn + 1) * (1 / dn) * std::pow(1 - 1 / dn, dn);
        CHECK(threshold_probs(product_prior(ms), t).q2 == Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("table threshold probabilities match enumeration") {
    std::mt19937_64 g(17);
    std::uniform_real_distribution<double> u(0, 1);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t n = 2 + trial % 3;
        std::vector<std::vector<double>> sup(n, {0.0, 0.5, 1.0});
        std::vector<std::uint32_t> idx;
        std::vector<double> pmf;
        double total = 0;
        for (int c = 0; c < 12; ++c) {
            for (std::size_t i = 0; i < n; ++i) idx.push_back(static_cast<std::uint32_t>(g() % 3));
            pmf.push_back(u(g));
            total += pmf.back();
        }
        for (auto& x : pmf) x /= total;
        Table t(sup, idx, pmf);
        for (double th : {0.0, 0.25, 0.5, 1.0, 1.5}) {
            double q1 = 0, q2 = 0;
            for (std::size_t c = 0; c < t.num_cells(); ++c) {
                int cnt = 0;
                for (std::size_t i = 0; i < n; ++i) cnt += t.value(c, i) >= th;
                if (cnt >= 1) q1 += t.pmf()[c];
                if (cnt >= 2) q2 += t.pmf()[c];
            }
            auto r = threshold_probs(t, th);
            CHECK(r.q1 == q1);
            CHECK(r.q2 == q2);
        }
    }
}

TEST_CASE("table validation") {
    CHECK_THROWS(Table({{0, 1}}, {0, 1}, {0.5, 0.6}));
    CHECK_THROWS(Table({{0, 1}}, {0, 2}, {0.5, 0.5}));
    CHECK_THROWS(Table({{0, 1}}, {0, 1}, {-0.5, 1.5}));
}
