#include "kwr/worst_case_lp.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <string>
#include <unordered_map>

namespace kwr {
namespace {

// all subsets of `items` with size <= k, as index lists
void for_each_subset(const std::vector<std::size_t>& items, std::size_t k,
                     const std::function<void(const std::vector<std::size_t>&)>& fn) {
    std::vector<std::size_t> cur;
    std::function<void(std::size_t)> rec = [&](std::size_t start) {
        fn(cur);
        if (cur.size() == k) return;
        for (std::size_t i = start; i < items.size(); ++i) {
            cur.push_back(items[i]);
            rec(i + 1);
            cur.pop_back();
        }
    };
    rec(0);
}

std::uint64_t mask_of(const std::vector<std::size_t>& s) {
    std::uint64_t m = 0;
    for (auto i : s) m |= std::uint64_t{1} << i;
    return m;
}

}  // namespace

std::size_t KwisePolytope::num_cells() const {
    std::size_t c = 1;
    for (const auto& s : supports) c *= s.size();
    return c;
}

std::size_t KwisePolytope::num_variables() const { return matrix.cols(); }

std::size_t KwisePolytope::num_full_constraints() const {
    // elementary symmetric sums of the support sizes up to degree k
    std::vector<double> e(k + 1, 0.0);
    e[0] = 1.0;
    for (const auto& s : supports)
        for (std::size_t d = k; d >= 1; --d) e[d] += e[d - 1] * static_cast<double>(s.size());
    double total = 0.0;
    for (std::size_t d = 1; d <= k; ++d) total += e[d];
    return static_cast<std::size_t>(std::llround(total));
}

std::vector<std::uint32_t> KwisePolytope::cell_indices(std::size_t j) const {
    std::vector<std::uint32_t> idx(supports.size());
    for (std::size_t i = 0; i < supports.size(); ++i) idx[i] = static_cast<std::uint32_t>(fixed_point[i]);
    for (std::size_t f = free_bidders.size(); f-- > 0;) {
        std::size_t d = free_points[f].size();
        idx[free_bidders[f]] = static_cast<std::uint32_t>(free_points[f][j % d]);
        j /= d;
    }
    return idx;
}

Table KwisePolytope::to_table(const std::vector<double>& x) const {
    if (x.size() != num_variables()) throw std::invalid_argument("solution size does not match the polytope");
    std::vector<std::uint32_t> idx;
    std::vector<double> pmf;
    for (std::size_t j = 0; j < x.size(); ++j) {
        if (!(x[j] > 0.0)) continue;
        auto c = cell_indices(j);
        idx.insert(idx.end(), c.begin(), c.end());
        pmf.push_back(x[j]);
    }
    return Table(supports, std::move(idx), std::move(pmf));
}

std::vector<double> KwisePolytope::product_point() const {
    std::vector<double> p(num_variables(), 1.0);
    for (std::size_t j = 0; j < p.size(); ++j) {
        auto c = cell_indices(j);
        for (std::size_t f = 0; f < free_bidders.size(); ++f) {
            std::size_t i = free_bidders[f];
            p[j] *= masses[i][c[i]];
        }
    }
    return p;
}

KwisePolytope build_polytope(const std::vector<std::vector<double>>& supports,
                             const std::vector<std::vector<double>>& masses, std::size_t k) {
    const std::size_t n = supports.size();
    if (n == 0) throw std::invalid_argument("need at least one bidder");
    if (masses.size() != n) throw std::invalid_argument("supports and masses differ in bidder count");
    if (k < 1 || k > n) throw std::domain_error("k must lie in [1, n]");
    KwisePolytope poly;
    poly.k = k;
    poly.supports = supports;
    poly.fixed_point.assign(n, 0);

    std::size_t cells = 1;
    for (std::size_t i = 0; i < n; ++i) {
        if (supports[i].empty()) throw std::invalid_argument("bidder " + std::to_string(i) + " has an empty support");
        if (masses[i].size() != supports[i].size())
            throw std::invalid_argument("bidder " + std::to_string(i) + ": support and mass lengths differ");
        double sum = 0.0;
        for (double m : masses[i]) {
            if (!(m >= 0.0)) throw std::invalid_argument("negative mass for bidder " + std::to_string(i));
            sum += m;
        }
        if (std::fabs(sum - 1.0) > 1e-9) throw std::invalid_argument("masses of bidder " + std::to_string(i) + " do not sum to 1");
        std::vector<double> norm = masses[i];
        for (double& m : norm) m /= sum;
        poly.masses.push_back(norm);
        if (cells > kMaxPolytopeCells / supports[i].size() + 1) throw std::length_error("polytope exceeds the cell cap");
        cells *= supports[i].size();
    }
    if (cells > kMaxPolytopeCells) throw std::length_error("polytope exceeds the cell cap of 100000 cells");

    // condition away zero-mass points and point masses
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::size_t> pts;
        for (std::size_t v = 0; v < supports[i].size(); ++v)
            if (poly.masses[i][v] > 0.0) pts.push_back(v);
        if (pts.size() == 1) {
            poly.fixed_point[i] = pts[0];
        } else {
            poly.free_bidders.push_back(i);
            poly.free_points.push_back(pts);
        }
    }
    const std::size_t nf = poly.free_bidders.size();
    std::size_t vars = 1;
    for (const auto& p : poly.free_points) vars *= p.size();

    // rows: for each subset S of free positions with |S| <= k, combos avoiding each
    // bidder's last point; these span all marginal constraints and are independent
    std::vector<std::size_t> positions(nf);
    std::iota(positions.begin(), positions.end(), 0);
    std::unordered_map<std::uint64_t, std::size_t> offset;
    for_each_subset(positions, k, [&](const std::vector<std::size_t>& s) {
        offset[mask_of(s)] = poly.rows.size();
        std::vector<std::size_t> combo(s.size(), 0);
        for (;;) {
            KwiseRow row;
            row.rhs = 1.0;
            for (std::size_t t = 0; t < s.size(); ++t) {
                std::size_t bidder = poly.free_bidders[s[t]];
                std::size_t point = poly.free_points[s[t]][combo[t]];
                row.subset.push_back(bidder);
                row.combo.push_back(point);
                row.rhs *= poly.masses[bidder][point];
            }
            poly.rows.push_back(std::move(row));
            bool done = true;
            for (std::size_t t = s.size(); t-- > 0;) {
                if (++combo[t] + 1 < poly.free_points[s[t]].size()) {
                    done = false;
                    break;
                }
                combo[t] = 0;
            }
            if (done) break;
        }
    });

    poly.matrix.rows = poly.rows.size();
    std::vector<std::size_t> local(nf), nonlast, r;
    std::vector<double> ones;
    for (std::size_t j = 0; j < vars; ++j) {
        std::size_t rest = j;
        for (std::size_t f = nf; f-- > 0;) {
            local[f] = rest % poly.free_points[f].size();
            rest /= poly.free_points[f].size();
        }
        nonlast.clear();
        for (std::size_t f = 0; f < nf; ++f)
            if (local[f] + 1 < poly.free_points[f].size()) nonlast.push_back(f);
        r.clear();
        for_each_subset(nonlast, k, [&](const std::vector<std::size_t>& s) {
            std::size_t code = 0;
            for (auto f : s) code = code * (poly.free_points[f].size() - 1) + local[f];
            r.push_back(offset.at(mask_of(s)) + code);
        });
        std::sort(r.begin(), r.end());
        ones.assign(r.size(), 1.0);
        poly.matrix.push_column(r, ones);
    }
    return poly;
}

KwisePolytope build_polytope(const std::vector<Marginal>& marginals, std::size_t k) {
    std::vector<std::vector<double>> supports, masses;
    for (const auto& m : marginals) {
        if (!m.is_discrete()) throw std::invalid_argument("worst-case LP needs discrete marginals: " + m.describe());
        const auto& d = std::get<DiscretePmf>(m.variant());
        supports.push_back(d.points);
        masses.push_back(d.masses);
    }
    return build_polytope(supports, masses, k);
}

WorstCaseSolution minimize_linear(const KwisePolytope& poly, const std::vector<double>& cell_cost) {
    if (cell_cost.size() != poly.num_variables()) throw std::invalid_argument("cost vector size mismatch");
    LpProblem lp;
    lp.a = poly.matrix;
    for (const auto& row : poly.rows) lp.b.push_back(row.rhs);
    lp.c = cell_cost;
    lp.implied_upper.assign(cell_cost.size(), 1.0);
    LpSolution s = solve_lp(lp);
    const double allowed = 1e-7 * std::max(1.0, std::fabs(s.objective));
    if (s.duality_gap > allowed) throw LpError("duality gap exceeds the certificate tolerance", s.duality_gap);
    WorstCaseSolution out;
    out.table = poly.to_table(s.x);
    out.objective = s.objective;
    out.duality_gap = s.duality_gap;
    out.dual_bound = s.dual_bound;
    out.primal_residual = s.primal_residual;
    out.iterations = s.iterations;
    return out;
}

namespace {

std::vector<double> cell_values(const KwisePolytope& poly, std::size_t j) {
    auto idx = poly.cell_indices(j);
    std::vector<double> v(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) v[i] = poly.supports[i][idx[i]];
    return v;
}

}  // namespace

WorstCaseSolution minimize_revenue(const KwisePolytope& poly, const Mechanism& mech) {
    std::vector<double> cost(poly.num_variables());
    for (std::size_t j = 0; j < cost.size(); ++j) cost[j] = mech.run(cell_values(poly, j)).payment;
    return minimize_linear(poly, cost);
}

WorstCaseSolution minimize_event_prob(const KwisePolytope& poly, double t, int count_at_least) {
    if (count_at_least != 1 && count_at_least != 2) throw std::invalid_argument("count_at_least must be 1 or 2");
    std::vector<double> cost(poly.num_variables());
    for (std::size_t j = 0; j < cost.size(); ++j) {
        int hits = 0;
        for (double v : cell_values(poly, j))
            if (v >= t) ++hits;
        cost[j] = hits >= count_at_least ? 1.0 : 0.0;
    }
    return minimize_linear(poly, cost);
}

}  // namespace kwr
