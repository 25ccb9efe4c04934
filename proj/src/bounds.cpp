#include "kwr/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "kwr/quadrature.hpp"
#include "kwr/revenue.hpp"

namespace kwr {
namespace {

constexpr double kE = std::numbers::e;
constexpr double kIidTarget = 1.0 / 2.63;
// lb2(1/u) is taken as 0 on [1 - kTerminalGap, 1]
constexpr double kTerminalGap = 1e-6;

// u = 1/s where floor(s^2/(s-1)) changes, for m = 5..m_max
std::vector<double> lb2_inverse_breakpoints(std::size_t m_max) {
    std::vector<double> out = {0.5};
    for (std::size_t m = 5; m <= m_max; ++m) {
        double dm = static_cast<double>(m);
        double root = std::sqrt(dm * dm - 4.0 * dm);
        out.push_back(2.0 / (dm + root));
        out.push_back(2.0 / (dm - root));
    }
    std::sort(out.begin(), out.end());
    return out;
}

double lb2_of_inverse(double u) {
    if (u >= 1.0 - kTerminalGap) return 0.0;
    return lb2_clamped(1.0 / u);
}

// integral of lb2(1/u) over [a, b] inside (0, 1]
double lb2_inverse_integral(double a, double b, const std::vector<double>& bps, double tol) {
    b = std::min(b, 1.0 - kTerminalGap);
    if (b <= a) return 0.0;
    std::vector<double> local;
    auto lo = std::lower_bound(bps.begin(), bps.end(), a);
    auto hi = std::upper_bound(bps.begin(), bps.end(), b);
    local.assign(lo, hi);
    QuadratureOptions opts;
    opts.abs_tol = tol;
    opts.initial_panels = 2;
    return integrate(lb2_of_inverse, a, b, local, opts).value;
}

double fact_integrand(double p, double x) {
    return p * (1.0 - p) / (((1.0 - p) * x + p) * (p * x + (1.0 - p)));
}

void partitions(std::size_t remaining, std::size_t max_part, std::size_t slots, std::vector<std::size_t>& cur,
                const std::function<void(const std::vector<std::size_t>&)>& visit) {
    if (remaining == 0) {
        visit(cur);
        return;
    }
    if (slots == 0) return;
    // the remaining slots must absorb what is left
    std::size_t lo = (remaining + slots - 1) / slots;
    for (std::size_t part = std::min(max_part, remaining); part >= lo && part >= 1; --part) {
        cur.push_back(part);
        partitions(remaining - part, part, slots - 1, cur, visit);
        cur.pop_back();
        if (part == 1) break;
    }
}

}  // namespace

double lb1(double s) {
    if (!(s >= 0.0) || !std::isfinite(s)) throw std::domain_error("lb1 needs s >= 0");
    double m = std::floor(s + 1.0);
    return (2.0 * m * s - s * s) / (m * (m + 1.0));
}

double lb2(double s) {
    if (!(s > 1.0) || !std::isfinite(s)) throw std::domain_error("lb2 is valid only for s > 1");
    double m = std::floor(s * s / (s - 1.0));
    double v = (2.0 * m * (s - 1.0) - s * s) / (m * (m - 1.0));
    return std::max(0.0, v);
}

double lb2_clamped(double s) { return s > 1.0 ? lb2(s) : 0.0; }

double q1_ratio_constant() { return kQ1Ratio; }

BoundReport check_q1_ratio(const Table& table, double t) {
    std::vector<double> q;
    for (std::size_t i = 0; i < table.num_bidders(); ++i) {
        double s = 0.0;
        auto m = table.marginal_masses(i);
        for (std::size_t k = 0; k < m.size(); ++k)
            if (table.supports()[i][k] >= t) s += m[k];
        q.push_back(s);
    }
    double q1 = threshold_probs(table, t).q1;
    double q1i = q1_ind_from_q(q);
    BoundReport r;
    r.bound_id = "q1_ratio";
    r.inputs = {{"t", t}};
    r.value = kQ1Ratio;
    r.check = make_check(kQ1Ratio * q1, q1i);
    r.details = {{"q1", q1}, {"q1_ind", q1i}};
    return r;
}

double wine2_bound(double s) {
    if (!(s >= 0.0)) throw std::domain_error("wine2_bound needs s >= 0");
    return s / (s + 1.0);
}

double tail_upper(double s0) {
    if (!(s0 >= 0.0 && s0 <= 1.0)) throw std::domain_error("tail_upper needs s0 in [0, 1]");
    double d = 2.0 - s0;
    return 2.0 * s0 * (1.0 - std::exp(-s0) * (1.0 + s0)) / (d * d) + s0 * s0 / 4.0;
}

double range1_bound(double s) {
    if (!(s >= 0.0 && s <= 1.0)) throw std::domain_error("range1_bound needs s in [0, 1]");
    return 1.0 - std::exp(-s) * (1.0 + s);
}

double range2_threshold(double s0) {
    if (!(s0 > 0.0 && s0 <= 1.0)) throw std::domain_error("range2 needs s0 in (0, 1]");
    return 1.0 + 2.0 * s0 / ((2.0 - s0) * (2.0 - s0));
}

double range2_bound(double s0, double t) {
    if (t < range2_threshold(s0) - 1e-12) throw std::domain_error("range2_bound: t below its valid range");
    double x = (2.0 - s0) / s0 * t + 1.0;
    return 1.0 / (x * x);
}

double qr_lb(double p) {
    if (!(p > 0.0 && p <= 1.0)) throw std::domain_error("qr_lb needs p in (0, 1]");
    double first = 1.0 / kQ1Ratio - (1.0 - p) * kE / (kE - 1.0);
    return std::min(first, lb2(1.0 + p));
}

double tail_core_case1() { return (9.0 / 4.0 - 4.0 / kE) / (1.0 - 1.0 / kE); }

double tail_core_case2b(double p) {
    if (!(p > 0.0 && p <= 1.0)) throw std::domain_error("tail_core_case2b needs p in (0, 1]");
    return (2.0 * p * p - 2.0 * p + 1.0) / (p * p * p) * kE / (kE - 1.0);
}

FactIntegral fact_integral(double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::domain_error("fact_integral needs p in (0, 1)");
    FactIntegral out{};
    if (p == 0.5) {
        out.closed_form = 0.5;
    } else {
        // log(1/p - 1) = log1p((1 - 2p)/p) stays accurate near p = 1/2
        out.closed_form = p * (p - 1.0) * std::log1p((1.0 - 2.0 * p) / p) / (2.0 * p - 1.0);
    }
    QuadratureOptions opts;
    opts.abs_tol = 1e-12;
    out.left_quadrature = integrate([p](double x) { return fact_integrand(p, x); }, 0.0, 1.0, {}, opts).value;
    // x = 1/y folded into the integrand
    out.right_quadrature =
        integrate([p](double y) { return p * (1.0 - p) / (((1.0 - p) + p * y) * (p + (1.0 - p) * y)); }, 0.0, 1.0, {}, opts)
            .value;
    return out;
}

double iid_objective(double beta) {
    if (!(beta > 0.0 && beta <= 1.0)) throw std::domain_error("beta must lie in (0, 1]");
    static const std::vector<double> bps = lb2_inverse_breakpoints(4000);
    return beta * lb1(1.0 / beta) + lb2_inverse_integral(beta, 1.0, bps, 1e-11);
}

namespace {

// F on beta_k = k/grid, k = 1..grid, with the integral accumulated from the right
void iid_grid(std::size_t grid, std::vector<double>& beta, std::vector<double>& value) {
    static const std::vector<double> bps = lb2_inverse_breakpoints(4000);
    beta.resize(grid);
    value.resize(grid);
    const double g = static_cast<double>(grid);
    double tail = 0.0;
    for (std::size_t k = grid; k >= 1; --k) {
        double b = static_cast<double>(k) / g;
        if (k < grid) tail += lb2_inverse_integral(b, static_cast<double>(k + 1) / g, bps, 1e-13);
        beta[k - 1] = b;
        value[k - 1] = b * lb1(1.0 / b) + tail;
    }
}

}  // namespace

IidCertificate certify_iid_constant(std::size_t grid) {
    if (grid < 1000) throw std::invalid_argument("grid must have at least 1000 points");
    IidCertificate c;
    iid_grid(grid, c.beta, c.value);
    auto it = std::min_element(c.value.begin(), c.value.end());
    std::size_t k = static_cast<std::size_t>(it - c.value.begin());
    c.beta_star = c.beta[k];
    c.min_value = *it;
    c.constant = 1.0 / c.min_value;
    c.pass = c.min_value >= kIidTarget - 1e-3;
    return c;
}

std::vector<Figure1Row> figure1_curves(std::size_t rows) {
    if (rows < 2) throw std::invalid_argument("need at least two rows");
    std::vector<double> beta, value;
    iid_grid(rows, beta, value);
    std::vector<Figure1Row> out;
    for (std::size_t k = 0; k < rows; ++k) {
        double s = 1.0 / beta[k];
        out.push_back({beta[k], lb1(s), lb2_clamped(s), value[k]});
    }
    return out;
}

double case2a_integral(double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::domain_error("case2a_integral needs p in (0, 1)");
    auto f = [p](double t) { return lb2_clamped(p / ((1.0 - p) * t + p) + (1.0 - p) / (p * t + (1.0 - p))); };
    QuadratureOptions opts;
    opts.abs_tol = 1e-12;
    opts.initial_panels = 64;
    return integrate(f, 0.0, 1.0, {}, opts).value;
}

BoundReport certify_ar_constant(double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::domain_error("certify_ar_constant needs p in (0, 1)");
    BoundReport r;
    r.bound_id = "ar_pairwise_constant";
    r.inputs = {{"p", p}};

    const double tc1 = tail_core_case1();
    const double case1_exact = kQ1Ratio * (1.0 + tc1);
    // the published case-1 constant rounds Tail/Core up to 1.24
    const double case1 = tc1 < 1.24 ? kQ1Ratio * (1.0 + 1.24) : case1_exact;

    const double integral = case2a_integral(p);
    const double case2a = integral > 0.0 ? (13.0 / 4.0 - 4.0 / kE) / integral : std::numeric_limits<double>::infinity();

    const double qr = qr_lb(p);
    const double tc2 = tail_core_case2b(p);
    const double case2b = qr > 0.0 ? (1.0 + tc2) / qr : std::numeric_limits<double>::infinity();

    r.value = std::max({case1, case2a, case2b});
    r.check = make_check(18.07, r.value, 0.0);
    r.details = {{"tail_core_case1", tc1}, {"case1_exact", case1_exact}, {"case1", case1},
                 {"integral", integral},   {"case2a", case2a},           {"qr_lb", qr},
                 {"tail_core_case2b", tc2}, {"case2b", case2b}};
    if (qr <= 0.0) r.note = "qr_lb is vacuous at this p";
    return r;
}

double replacement_objective(const std::vector<double>& p, double t) {
    std::vector<double> q;
    for (double x : p) {
        if (x < 0.0 || x > 1.0) throw std::domain_error("p entries must lie in [0, 1]");
        q.push_back(x == 0.0 ? 0.0 : x / ((1.0 - x) * t + x));
    }
    return q2_ind_from_q(q);
}

ReplacementResult replacement_maximizer(double s0, double t, std::size_t n, std::size_t resolution) {
    if (!(s0 >= 0.0 && s0 <= 1.0)) throw std::domain_error("s0 must lie in [0, 1]");
    if (n == 0 || resolution == 0) throw std::invalid_argument("n and resolution must be positive");
    const double res = static_cast<double>(resolution);
    const double k_real = s0 * res;
    const auto K = static_cast<std::size_t>(std::llround(k_real));
    if (std::fabs(k_real - static_cast<double>(K)) > 1e-9) throw std::invalid_argument("s0 must lie on the grid");
    ReplacementResult best;
    best.max_value = -1.0;
    std::vector<std::size_t> cur;
    std::vector<double> p(n);
    auto visit = [&](const std::vector<std::size_t>& parts) {
        std::fill(p.begin(), p.end(), 0.0);
        for (std::size_t i = 0; i < parts.size(); ++i) p[i] = static_cast<double>(parts[i]) / res;
        double v = replacement_objective(p, t);
        ++best.evaluated;
        if (v > best.max_value) {
            best.max_value = v;
            best.argmax_p = p;
        }
    };
    if (K == 0) {
        visit({});
    } else {
        partitions(K, K, n, cur, visit);
    }
    return best;
}

double replacement_merge_gain(const std::vector<double>& p, std::size_t i, std::size_t j, double t) {
    if (i == j || i >= p.size() || j >= p.size()) throw std::invalid_argument("bad merge indices");
    std::vector<double> merged = p;
    merged[i] += merged[j];
    merged[j] = 0.0;
    return replacement_objective(merged, t) - replacement_objective(p, t);
}

bool sn_condition(double alpha, double t_sum, double t) {
    double at = alpha * t;
    return t * ((at - 1.0) * (1.0 - t_sum) + at) >= t_sum + at * (1.0 - t_sum);
}

bool merge_precondition_general(double t_sum, double t) {
    return t >= 1.0 + t_sum / ((1.0 - t_sum) * (1.0 - t_sum));
}

bool merge_precondition_three(double t_sum, double t) {
    double a = (1.0 - t_sum) * (1.0 - t_sum);
    return t >= (a + t_sum * t_sum) / (2.0 * a);
}

double equal_split_q2(double s, double m) {
    if (!(m > s)) throw std::domain_error("equal_split_q2 needs m > s");
    return 1.0 - std::exp(m * std::log1p(-s / m)) * (1.0 + m * s / (m - s));
}

bool equal_split_monotone_check(double s, std::size_t m_max) {
    if (!(s > 0.0 && s <= 1.0)) throw std::domain_error("s must lie in (0, 1]");
    if (m_max < 2) throw std::invalid_argument("m_max must be at least 2");
    const double cap = range1_bound(s);
    const auto m0 = static_cast<std::size_t>(std::ceil(s)) + 1;
    double prev = -std::numeric_limits<double>::infinity();
    for (std::size_t m = m0; m <= m_max; ++m) {
        double f = equal_split_q2(s, static_cast<double>(m));
        if (f < prev - 1e-15) return false;
        if (f > cap + 1e-15) return false;
        prev = f;
    }
    return true;
}

}  // namespace kwr
