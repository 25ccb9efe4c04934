#include "kwr/marginal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace kwr {
namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void check_finite(double x, const char* what) {
    if (!std::isfinite(x)) throw std::invalid_argument(std::string(what) + " must be finite");
}

double er_q(double lo, double hi, double t) {
    if (t <= lo) return 1.0;
    if (t > hi) return 0.0;
    return lo / t;
}

double er_cdf(double lo, double hi, double x) {
    if (x < lo) return 0.0;
    if (x >= hi) return 1.0;
    return 1.0 - lo / x;
}

double er_qinv(double lo, double hi, double p) {
    if (p <= lo / hi) return hi;
    return std::min(hi, lo / p);
}

// shifted variants compare against the shifted endpoints so that (hi + eps) - eps
// rounding never moves the atom
double ser_q(const ShiftedEqualRevenue& e, double t) {
    if (t <= e.lo + e.eps) return 1.0;
    if (t > e.hi + e.eps) return 0.0;
    if (t == e.hi + e.eps) return e.lo / e.hi;
    return std::min(1.0, e.lo / (t - e.eps));
}

double ser_cdf(const ShiftedEqualRevenue& e, double x) {
    if (x < e.lo + e.eps) return 0.0;
    if (x >= e.hi + e.eps) return 1.0;
    return std::max(0.0, 1.0 - e.lo / (x - e.eps));
}

double ser_qinv(const ShiftedEqualRevenue& e, double p) {
    if (p <= e.lo / e.hi) return e.hi + e.eps;
    return std::min(e.hi + e.eps, e.lo / p + e.eps);
}

// Index of the first point >= t, or size.
std::size_t lower_index(const std::vector<double>& pts, double t) {
    return static_cast<std::size_t>(std::lower_bound(pts.begin(), pts.end(), t) - pts.begin());
}

std::size_t exact_index(const std::vector<double>& pts, double v) {
    std::size_t k = lower_index(pts, v);
    if (k == pts.size() || pts[k] != v) throw std::domain_error("value is not a support point");
    return k;
}

void check_p(double p) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::domain_error("probability outside [0,1]");
}

}  // namespace

double IronedCurve::hull_at(double q) const {
    if (hull.empty()) return 0.0;
    if (q <= hull.front().q) return hull.front().revenue;
    if (q >= hull.back().q) return hull.back().revenue;
    auto it = std::lower_bound(hull.begin(), hull.end(), q,
                               [](const QuantileRevenue& a, double x) { return a.q < x; });
    const auto& b = *it;
    const auto& a = *(it - 1);
    if (b.q == a.q) return b.revenue;
    return a.revenue + (b.revenue - a.revenue) * (q - a.q) / (b.q - a.q);
}

Marginal::Marginal(Variant v) : v_(std::move(v)) {
    if (auto* d = std::get_if<DiscretePmf>(&v_)) {
        tail_.assign(d->points.size() + 1, 0.0);
        for (std::size_t k = d->points.size(); k-- > 0;) tail_[k] = tail_[k + 1] + d->masses[k];
        ironed_ = iron_discrete(*d);
    }
}

Marginal Marginal::equal_revenue(double lo, double hi) {
    check_finite(lo, "lo");
    check_finite(hi, "hi");
    if (!(lo > 0.0) || hi < lo) throw std::invalid_argument("equal revenue needs 0 < lo <= hi");
    return Marginal(EqualRevenue{lo, hi});
}

Marginal Marginal::shifted_equal_revenue(double lo, double hi, double eps) {
    check_finite(lo, "lo");
    check_finite(hi, "hi");
    check_finite(eps, "eps");
    if (!(lo > 0.0) || hi < lo) throw std::invalid_argument("shifted equal revenue needs 0 < lo <= hi");
    if (eps < 0.0) throw std::invalid_argument("shift must be non-negative");
    return Marginal(ShiftedEqualRevenue{lo, hi, eps});
}

Marginal Marginal::uniform(double lo, double hi) {
    check_finite(lo, "lo");
    check_finite(hi, "hi");
    if (!(hi > lo)) throw std::invalid_argument("uniform needs lo < hi");
    if (lo < 0.0) throw std::invalid_argument("values must be non-negative");
    return Marginal(Uniform{lo, hi});
}

Marginal Marginal::discrete(std::vector<double> points, std::vector<double> masses) {
    if (points.empty()) throw std::invalid_argument("discrete marginal needs at least one point");
    if (points.size() != masses.size()) throw std::invalid_argument("points/masses size mismatch");
    double total = 0.0;
    for (std::size_t k = 0; k < points.size(); ++k) {
        check_finite(points[k], "point");
        check_finite(masses[k], "mass");
        if (points[k] < 0.0) throw std::invalid_argument("values must be non-negative");
        if (masses[k] < 0.0) throw std::invalid_argument("masses must be non-negative");
        if (k > 0 && !(points[k] > points[k - 1]))
            throw std::invalid_argument("points must be strictly ascending");
        total += masses[k];
    }
    if (std::fabs(total - 1.0) > kMassTol) throw std::invalid_argument("masses must sum to 1");
    return Marginal(DiscretePmf{std::move(points), std::move(masses)});
}

std::string Marginal::describe() const {
    std::ostringstream os;
    os.precision(17);
    std::visit(overloaded{
                   [&](const EqualRevenue& e) { os << "ER[" << e.lo << ", " << e.hi << "]"; },
                   [&](const ShiftedEqualRevenue& e) {
                       os << "ER[" << e.lo << ", " << e.hi << "] + " << e.eps;
                   },
                   [&](const Uniform& u) { os << "U[" << u.lo << ", " << u.hi << "]"; },
                   [&](const DiscretePmf& d) { os << "discrete(" << d.points.size() << " points)"; },
               },
               v_);
    return os.str();
}

double Marginal::support_lo() const {
    return std::visit(overloaded{
                          [](const EqualRevenue& e) { return e.lo; },
                          [](const ShiftedEqualRevenue& e) { return e.lo + e.eps; },
                          [](const Uniform& u) { return u.lo; },
                          [](const DiscretePmf& d) { return d.points.front(); },
                      },
                      v_);
}

double Marginal::support_hi() const {
    return std::visit(overloaded{
                          [](const EqualRevenue& e) { return e.hi; },
                          [](const ShiftedEqualRevenue& e) { return e.hi + e.eps; },
                          [](const Uniform& u) { return u.hi; },
                          [](const DiscretePmf& d) { return d.points.back(); },
                      },
                      v_);
}

bool Marginal::in_support(double v) const {
    if (const auto* d = std::get_if<DiscretePmf>(&v_)) {
        return std::binary_search(d->points.begin(), d->points.end(), v);
    }
    return v >= support_lo() && v <= support_hi();
}

std::vector<double> Marginal::atoms() const {
    return std::visit(overloaded{
                          [](const EqualRevenue& e) { return std::vector<double>{e.hi}; },
                          [](const ShiftedEqualRevenue& e) { return std::vector<double>{e.hi + e.eps}; },
                          [](const Uniform&) { return std::vector<double>{}; },
                          [](const DiscretePmf& d) {
                              std::vector<double> out;
                              for (std::size_t k = 0; k < d.points.size(); ++k)
                                  if (d.masses[k] > 0.0) out.push_back(d.points[k]);
                              return out;
                          },
                      },
                      v_);
}

double Marginal::atom_mass(double v) const {
    return std::visit(overloaded{
                          [&](const EqualRevenue& e) { return v == e.hi ? e.lo / e.hi : 0.0; },
                          [&](const ShiftedEqualRevenue& e) {
                              return v == e.hi + e.eps ? e.lo / e.hi : 0.0;
                          },
                          [](const Uniform&) { return 0.0; },
                          [&](const DiscretePmf& d) {
                              std::size_t k = lower_index(d.points, v);
                              return (k < d.points.size() && d.points[k] == v) ? d.masses[k] : 0.0;
                          },
                      },
                      v_);
}

double Marginal::cdf(double x) const {
    return std::visit(overloaded{
                          [&](const EqualRevenue& e) { return er_cdf(e.lo, e.hi, x); },
                          [&](const ShiftedEqualRevenue& e) { return ser_cdf(e, x); },
                          [&](const Uniform& u) {
                              if (x < u.lo) return 0.0;
                              if (x >= u.hi) return 1.0;
                              return (x - u.lo) / (u.hi - u.lo);
                          },
                          [&](const DiscretePmf& d) {
                              std::size_t k = static_cast<std::size_t>(
                                  std::upper_bound(d.points.begin(), d.points.end(), x) -
                                  d.points.begin());
                              if (k == d.points.size()) return 1.0;
                              return std::clamp(1.0 - tail_[k], 0.0, 1.0);
                          },
                      },
                      v_);
}

double Marginal::quantile_q(double t) const {
    return std::visit(overloaded{
                          [&](const EqualRevenue& e) { return er_q(e.lo, e.hi, t); },
                          [&](const ShiftedEqualRevenue& e) { return ser_q(e, t); },
                          [&](const Uniform& u) {
                              if (t <= u.lo) return 1.0;
                              if (t >= u.hi) return 0.0;
                              return (u.hi - t) / (u.hi - u.lo);
                          },
                          [&](const DiscretePmf& d) {
                              std::size_t k = lower_index(d.points, t);
                              if (k == 0) return 1.0;
                              return std::clamp(tail_[k], 0.0, 1.0);
                          },
                      },
                      v_);
}

double Marginal::prob_greater(double x) const { return 1.0 - cdf(x); }

double Marginal::q_inverse(double p) const {
    check_p(p);
    return std::visit(overloaded{
                          [&](const EqualRevenue& e) { return er_qinv(e.lo, e.hi, p); },
                          [&](const ShiftedEqualRevenue& e) { return ser_qinv(e, p); },
                          [&](const Uniform& u) {
                              if (p == 0.0) return u.hi;
                              return u.hi - p * (u.hi - u.lo);
                          },
                          [&](const DiscretePmf& d) {
                              // largest k with Pr[v >= x_k] >= p; Pr[v >= x_0] = 1
                              for (std::size_t k = d.points.size(); k-- > 1;) {
                                  if (tail_[k] >= p) return d.points[k];
                              }
                              return d.points.front();
                          },
                      },
                      v_);
}

double Marginal::virtual_value(double v) const {
    if (!in_support(v)) throw std::domain_error("virtual value requested outside the support");
    return std::visit(overloaded{
                          [&](const EqualRevenue& e) { return v == e.hi ? e.hi : 0.0; },
                          [&](const ShiftedEqualRevenue& e) {
                              return v == e.hi + e.eps ? e.hi + e.eps : e.eps;
                          },
                          [&](const Uniform& u) { return 2.0 * v - u.hi; },
                          [&](const DiscretePmf& d) {
                              if (v != d.points.back())
                                  throw std::domain_error(
                                      "virtual value of an interior discrete atom is undefined; "
                                      "use the ironed virtual value");
                              return v;
                          },
                      },
                      v_);
}

double Marginal::ironed_virtual_value(double v) const {
    if (const auto* d = std::get_if<DiscretePmf>(&v_)) {
        return ironed_->ironed_values[exact_index(d->points, v)];
    }
    return virtual_value(v);
}

double Marginal::monopoly_reserve() const {
    return std::visit(overloaded{
                          [](const EqualRevenue& e) { return e.lo; },
                          [](const ShiftedEqualRevenue& e) { return e.lo + e.eps; },
                          [](const Uniform& u) { return std::max(u.lo, 0.5 * u.hi); },
                          [&](const DiscretePmf& d) {
                              for (std::size_t k = 0; k < d.points.size(); ++k)
                                  if (ironed_->ironed_values[k] >= 0.0) return d.points[k];
                              return d.points.back();
                          },
                      },
                      v_);
}

double Marginal::revenue_at_quantile(double q) const {
    check_p(q);
    if (ironed_) return ironed_->hull_at(q);
    if (q == 0.0) return 0.0;
    return q * q_inverse(q);
}

double Marginal::vv_prob_ge(double level) const {
    return std::visit(overloaded{
                          [&](const EqualRevenue& e) {
                              if (e.lo == e.hi) return level <= e.hi ? 1.0 : 0.0;
                              if (level <= 0.0) return 1.0;
                              return level <= e.hi ? e.lo / e.hi : 0.0;
                          },
                          [&](const ShiftedEqualRevenue& e) {
                              double top = e.hi + e.eps;
                              if (e.lo == e.hi) return level <= top ? 1.0 : 0.0;
                              if (level <= e.eps) return 1.0;
                              return level <= top ? e.lo / e.hi : 0.0;
                          },
                          [&](const Uniform& u) { return quantile_q(0.5 * (level + u.hi)); },
                          [&](const DiscretePmf& d) {
                              double s = 0.0;
                              for (std::size_t k = 0; k < d.points.size(); ++k)
                                  if (ironed_->ironed_values[k] >= level) s += d.masses[k];
                              return std::min(1.0, s);
                          },
                      },
                      v_);
}

double Marginal::vv_prob_gt(double level) const {
    return std::visit(overloaded{
                          [&](const EqualRevenue& e) {
                              if (e.lo == e.hi) return level < e.hi ? 1.0 : 0.0;
                              if (level < 0.0) return 1.0;
                              return level < e.hi ? e.lo / e.hi : 0.0;
                          },
                          [&](const ShiftedEqualRevenue& e) {
                              double top = e.hi + e.eps;
                              if (e.lo == e.hi) return level < top ? 1.0 : 0.0;
                              if (level < e.eps) return 1.0;
                              return level < top ? e.lo / e.hi : 0.0;
                          },
                          [&](const Uniform& u) { return quantile_q(0.5 * (level + u.hi)); },
                          [&](const DiscretePmf& d) {
                              double s = 0.0;
                              for (std::size_t k = 0; k < d.points.size(); ++k)
                                  if (ironed_->ironed_values[k] > level) s += d.masses[k];
                              return std::min(1.0, s);
                          },
                      },
                      v_);
}

std::vector<double> Marginal::vv_atoms() const {
    return std::visit(overloaded{
                          [](const EqualRevenue& e) {
                              if (e.lo == e.hi) return std::vector<double>{e.hi};
                              return std::vector<double>{0.0, e.hi};
                          },
                          [](const ShiftedEqualRevenue& e) {
                              if (e.lo == e.hi) return std::vector<double>{e.hi + e.eps};
                              return std::vector<double>{e.eps, e.hi + e.eps};
                          },
                          [](const Uniform&) { return std::vector<double>{}; },
                          [&](const DiscretePmf& d) {
                              std::vector<double> out;
                              for (std::size_t k = 0; k < d.points.size(); ++k)
                                  if (d.masses[k] > 0.0) out.push_back(ironed_->ironed_values[k]);
                              std::sort(out.begin(), out.end());
                              out.erase(std::unique(out.begin(), out.end()), out.end());
                              return out;
                          },
                      },
                      v_);
}

double Marginal::vv_min() const {
    if (const auto* u = std::get_if<Uniform>(&v_)) return 2.0 * u->lo - u->hi;
    return vv_atoms().front();
}

double Marginal::vv_max() const {
    if (const auto* u = std::get_if<Uniform>(&v_)) return u->hi;
    return vv_atoms().back();
}

double Marginal::value_at_vv(double level) const {
    return std::visit(overloaded{
                          [&](const EqualRevenue& e) {
                              if (e.lo < e.hi && level <= 0.0) return e.lo;
                              return e.hi;
                          },
                          [&](const ShiftedEqualRevenue& e) {
                              if (e.lo < e.hi && level <= e.eps) return e.lo + e.eps;
                              return e.hi + e.eps;
                          },
                          [&](const Uniform& u) { return std::clamp(0.5 * (level + u.hi), u.lo, u.hi); },
                          [&](const DiscretePmf& d) {
                              for (std::size_t k = 0; k < d.points.size(); ++k)
                                  if (ironed_->ironed_values[k] >= level) return d.points[k];
                              return d.points.back();
                          },
                      },
                      v_);
}

double cdf(const Marginal& m, double x) { return m.cdf(x); }
double quantile_q(const Marginal& m, double t) { return m.quantile_q(t); }
double q_inverse(const Marginal& m, double p) { return m.q_inverse(p); }
double virtual_value(const Marginal& m, double v) { return m.virtual_value(v); }
double monopoly_reserve(const Marginal& m) { return m.monopoly_reserve(); }

RevenueQuantileCurve revenue_curve(const Marginal& m, std::size_t grid_size) {
    if (grid_size < 2) throw std::invalid_argument("grid_size must be at least 2");
    RevenueQuantileCurve out;
    if (const IronedCurve* ir = m.ironing()) {
        // raw polyline through the atom points, sampled on the grid plus its vertices
        const auto& pts = ir->curve.samples;
        std::vector<double> qs;
        for (std::size_t k = 0; k < grid_size; ++k)
            qs.push_back(static_cast<double>(k) / static_cast<double>(grid_size - 1));
        for (const auto& p : pts) qs.push_back(std::clamp(p.q, 0.0, 1.0));
        std::sort(qs.begin(), qs.end());
        qs.erase(std::unique(qs.begin(), qs.end()), qs.end());
        for (double q : qs) {
            auto it = std::lower_bound(pts.begin(), pts.end(), q,
                                       [](const QuantileRevenue& a, double x) { return a.q < x; });
            double r;
            if (it == pts.end()) r = pts.back().revenue;
            else if (it->q == q || it == pts.begin()) r = it->revenue;
            else {
                auto a = *(it - 1);
                r = a.revenue + (it->revenue - a.revenue) * (q - a.q) / (it->q - a.q);
            }
            out.samples.push_back({q, r});
        }
        return out;
    }
    std::vector<double> qs;
    for (std::size_t k = 0; k < grid_size; ++k)
        qs.push_back(static_cast<double>(k) / static_cast<double>(grid_size - 1));
    for (double a : m.atoms()) qs.push_back(m.quantile_q(a));
    std::sort(qs.begin(), qs.end());
    qs.erase(std::unique(qs.begin(), qs.end()), qs.end());
    for (double q : qs) out.samples.push_back({q, q == 0.0 ? 0.0 : q * m.q_inverse(q)});
    return out;
}

bool check_regular(const Marginal& m, std::size_t grid_size) {
    auto c = revenue_curve(m, grid_size);
    const auto& s = c.samples;
    for (std::size_t i = 1; i + 1 < s.size(); ++i) {
        const auto& a = s[i - 1];
        const auto& b = s[i];
        const auto& d = s[i + 1];
        if (d.q - a.q <= 0.0) continue;
        double chord = a.revenue + (d.revenue - a.revenue) * (b.q - a.q) / (d.q - a.q);
        if (b.revenue < chord - kRegularityTol) return false;
    }
    return true;
}

IronedCurve iron_discrete(const DiscretePmf& pmf) {
    IronedCurve out;
    const std::size_t K = pmf.points.size();
    out.points = pmf.points;
    // q_k = Pr[v >= x_k]; ascending q order is descending value order
    std::vector<double> tail(K + 1, 0.0);
    for (std::size_t k = K; k-- > 0;) tail[k] = tail[k + 1] + pmf.masses[k];
    auto& s = out.curve.samples;
    s.push_back({0.0, 0.0});
    for (std::size_t k = K; k-- > 0;) s.push_back({tail[k], tail[k] * pmf.points[k]});

    auto cross = [](const QuantileRevenue& o, const QuantileRevenue& a, const QuantileRevenue& b) {
        return (a.q - o.q) * (b.revenue - o.revenue) - (a.revenue - o.revenue) * (b.q - o.q);
    };
    for (const auto& p : s) {
        if (!out.hull.empty() && p.q == out.hull.back().q) {
            if (p.revenue > out.hull.back().revenue) out.hull.back() = p;
            continue;
        }
        while (out.hull.size() >= 2 && cross(out.hull[out.hull.size() - 2], out.hull.back(), p) >= 0.0)
            out.hull.pop_back();
        out.hull.push_back(p);
    }

    // slope of the hull segment covering (q - delta, q]
    auto slope_left_of = [&](double q) {
        for (std::size_t i = 1; i < out.hull.size(); ++i) {
            if (out.hull[i].q >= q) {
                const auto& a = out.hull[i - 1];
                const auto& b = out.hull[i];
                return (b.revenue - a.revenue) / (b.q - a.q);
            }
        }
        const auto& a = out.hull[out.hull.size() - 2];
        const auto& b = out.hull.back();
        return (b.revenue - a.revenue) / (b.q - a.q);
    };

    out.ironed_values.assign(K, 0.0);
    if (out.hull.size() < 2) {
        for (std::size_t k = 0; k < K; ++k) out.ironed_values[k] = pmf.points[k];
        return out;
    }
    for (std::size_t k = 0; k < K; ++k) {
        double qk = tail[k];
        if (k + 1 == K) {
            out.ironed_values[k] = pmf.points[k];
            continue;
        }
        out.ironed_values[k] = slope_left_of(qk);
    }
    // monotone in value; guards rounding between adjacent segments
    for (std::size_t k = K - 1; k-- > 0;)
        out.ironed_values[k] = std::min(out.ironed_values[k], out.ironed_values[k + 1]);
    return out;
}

double regular_quantile_bound(double p, double t) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::domain_error("p must lie in [0,1]");
    if (t < 0.0) throw std::domain_error("t must be non-negative");
    if (p == 0.0) return 0.0;
    if (p == 1.0) return 1.0;
    return p / ((1.0 - p) * t + p);
}

}  // namespace kwr
