#pragma once

// Single-bidder value distributions: exact quantiles, virtual values, monopoly
// reserves, revenue-quantile curves and discrete ironing.
//
// Conventions: cdf(x) = Pr[v <= x] is right-continuous; quantile_q(t) = Pr[v >= t]
// includes the atom at t. All supported marginals have bounded support.

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace kwr {

/// ER[lo, hi]: s * Pr[v >= s] = lo on [lo, hi], with an atom of mass lo/hi at hi.
struct EqualRevenue {
    double lo;
    double hi;
};

/// EqualRevenue{lo, hi} translated by +eps. Virtual value is eps on the interior.
struct ShiftedEqualRevenue {
    double lo;
    double hi;
    double eps;
};

struct Uniform {
    double lo;
    double hi;
};

struct DiscretePmf {
    std::vector<double> points;  // strictly ascending
    std::vector<double> masses;
};

struct QuantileRevenue {
    double q;
    double revenue;
};

/// Samples of q -> q * q_inverse(q), ascending in q.
struct RevenueQuantileCurve {
    std::vector<QuantileRevenue> samples;
};

/// Upper concave hull of a discrete revenue-quantile polyline.
struct IronedCurve {
    RevenueQuantileCurve curve;        // (0,0) followed by one vertex per support point
    std::vector<QuantileRevenue> hull;  // hull vertices, ascending in q
    std::vector<double> points;         // support points, ascending
    std::vector<double> ironed_values;  // hull slope on each point's quantile interval

    /// Hull evaluated by linear interpolation; q in [0, 1].
    double hull_at(double q) const;
};

class Marginal {
public:
    using Variant = std::variant<EqualRevenue, ShiftedEqualRevenue, Uniform, DiscretePmf>;

    static Marginal equal_revenue(double lo, double hi);
    static Marginal shifted_equal_revenue(double lo, double hi, double eps);
    static Marginal uniform(double lo, double hi);
    static Marginal discrete(std::vector<double> points, std::vector<double> masses);
    static Marginal point_mass(double v) { return discrete({v}, {1.0}); }

    const Variant& variant() const { return v_; }
    bool is_discrete() const { return std::holds_alternative<DiscretePmf>(v_); }
    std::string describe() const;

    double support_lo() const;
    double support_hi() const;
    bool in_support(double v) const;
    /// Values carrying positive probability mass, ascending.
    std::vector<double> atoms() const;
    double atom_mass(double v) const;

    double cdf(double x) const;
    /// Pr[v >= t].
    double quantile_q(double t) const;
    /// Pr[v > x] = 1 - cdf(x).
    double prob_greater(double x) const;
    /// sup{t : quantile_q(t) >= p}; p = 0 gives the top of the support.
    double q_inverse(double p) const;

    /// Myerson virtual value. Throws std::domain_error outside the support and at
    /// interior atoms of a discrete marginal (use ironed_virtual_value there).
    double virtual_value(double v) const;
    /// Ironed virtual value: hull slope for discrete marginals, virtual_value otherwise.
    double ironed_virtual_value(double v) const;
    double monopoly_reserve() const;

    /// Revenue-curve value R(q): q * q_inverse(q) for continuous marginals, the
    /// concave hull for discrete ones (randomized prices between atoms).
    double revenue_at_quantile(double q) const;

    // Distribution of the (ironed) virtual value phi(v), used by the ex-ante relaxation.
    double vv_prob_ge(double level) const;
    double vv_prob_gt(double level) const;
    /// Levels carrying positive mass in the distribution of phi(v).
    std::vector<double> vv_atoms() const;
    double vv_min() const;
    double vv_max() const;
    /// inf{v in support : phi(v) >= level}, or the top of the support if none.
    double value_at_vv(double level) const;

    /// Cached ironing for discrete marginals; nullptr otherwise.
    const IronedCurve* ironing() const { return ironed_ ? &*ironed_ : nullptr; }

private:
    explicit Marginal(Variant v);

    Variant v_;
    std::vector<double> tail_;  // discrete: tail_[k] = sum_{j >= k} masses[j]
    std::optional<IronedCurve> ironed_;
};

double cdf(const Marginal& m, double x);
double quantile_q(const Marginal& m, double t);
double q_inverse(const Marginal& m, double p);
double virtual_value(const Marginal& m, double v);
double monopoly_reserve(const Marginal& m);

/// Grid quantiles k/(grid_size-1) plus every atom quantile. grid_size >= 2.
RevenueQuantileCurve revenue_curve(const Marginal& m, std::size_t grid_size = 1000);
/// True iff the revenue curve is concave within 1e-9 on all consecutive triples.
bool check_regular(const Marginal& m, std::size_t grid_size = 1000);
/// Upper concave hull of the revenue-quantile polyline (Andrew's monotone chain).
IronedCurve iron_discrete(const DiscretePmf& pmf);

/// p / ((1-p) t + p): for a regular marginal with q(1) = p this bounds q(t) from
/// above for t >= 1 and from below for t <= 1.
double regular_quantile_bound(double p, double t);

inline constexpr double kRegularityTol = 1e-9;
inline constexpr double kMassTol = 1e-12;

}  // namespace kwr
