#include "kwr/mechanism.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace kwr {
namespace {

constexpr int kBisectionSteps = 60;

// Ordering key: bidder a beats b iff key(a) > key(b) lexicographically.
struct Key {
    double phi;
    double value;  // 0 under lexicographic ties
    std::size_t index;
};

bool beats(const Key& a, const Key& b) {
    if (a.phi != b.phi) return a.phi > b.phi;
    if (a.value != b.value) return a.value > b.value;
    return a.index < b.index;
}

void check_values(std::span<const double> values) {
    for (double v : values)
        if (!std::isfinite(v) || v < 0.0) throw std::invalid_argument("values must be finite and non-negative");
}

}  // namespace

Mechanism::Mechanism(AnonymousReserve ar) : v_(ar) {
    if (!std::isfinite(ar.r) || ar.r < 0.0) throw std::invalid_argument("reserve must be finite and non-negative");
}

Mechanism::Mechanism(Myerson m) : v_(std::move(m)) {
    if (std::get<Myerson>(v_).marginals.empty()) throw std::invalid_argument("Myerson needs marginals");
}

std::string Mechanism::describe() const {
    std::ostringstream os;
    os.precision(17);
    if (const auto* a = std::get_if<AnonymousReserve>(&v_)) {
        os << "AR(" << a->r << ")";
    } else {
        const auto& m = std::get<Myerson>(v_);
        os << "Myerson(" << (m.tie_break == TieBreak::HighestValue ? "highest_value" : "lex") << ")";
    }
    return os.str();
}

Outcome Mechanism::run(std::span<const double> values) const {
    if (const auto* a = std::get_if<AnonymousReserve>(&v_)) return run_ar(a->r, values);
    return run_myerson(std::get<Myerson>(v_), values);
}

Outcome run_ar(double r, std::span<const double> values) {
    check_values(values);
    Outcome out;
    std::size_t best = values.size();
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (values[i] < r) continue;
        if (best == values.size() || values[i] > values[best]) best = i;
    }
    if (best == values.size()) return out;
    double second = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i)
        if (i != best) second = std::max(second, values[i]);
    out.winner = best;
    out.payment = std::max(r, second);
    return out;
}

Outcome run_myerson(const Myerson& mech, std::span<const double> values) {
    const std::size_t n = values.size();
    if (mech.marginals.size() != n) throw std::invalid_argument("Myerson needs one marginal per bidder");
    check_values(values);
    const bool by_value = mech.tie_break == TieBreak::HighestValue;

    std::vector<Key> keys(n);
    for (std::size_t i = 0; i < n; ++i) {
        double phi = mech.marginals[i].ironed_virtual_value(values[i]);
        keys[i] = {phi, by_value ? values[i] : 0.0, i};
    }
    std::optional<std::size_t> w;
    for (std::size_t i = 0; i < n; ++i) {
        if (keys[i].phi < 0.0) continue;
        if (!w || beats(keys[i], keys[*w])) w = i;
    }
    Outcome out;
    if (!w) return out;
    out.winner = w;

    // strongest competitor of w
    std::optional<Key> rival;
    for (std::size_t i = 0; i < n; ++i) {
        if (i == *w || keys[i].phi < 0.0) continue;
        if (!rival || beats(keys[i], *rival)) rival = keys[i];
    }
    const Marginal& f = mech.marginals[*w];
    auto wins = [&](double b) {
        double phi = f.ironed_virtual_value(b);
        if (phi < 0.0) return false;
        if (!rival) return true;
        return beats(Key{phi, by_value ? b : 0.0, *w}, *rival);
    };

    if (const auto* d = std::get_if<DiscretePmf>(&f.variant())) {
        // winning set is an up-set of the support
        std::size_t lo = 0, hi = d->points.size() - 1;
        while (lo < hi) {
            std::size_t mid = lo + (hi - lo) / 2;
            if (wins(d->points[mid])) hi = mid;
            else lo = mid + 1;
        }
        out.payment = d->points[lo];
        return out;
    }

    double a = f.support_lo();
    if (wins(a)) {
        out.payment = a;
        return out;
    }
    double b = values[*w];
    for (int it = 0; it < kBisectionSteps && b - a > 0.0; ++it) {
        double mid = 0.5 * (a + b);
        if (mid <= a || mid >= b) break;
        if (wins(mid)) b = mid;
        else a = mid;
    }
    // exact thresholds sit at atoms, support ends, rival values or phi^{-1} levels
    std::vector<double> cand = {f.support_lo(), f.support_hi(), f.value_at_vv(0.0)};
    for (double x : f.atoms()) cand.push_back(x);
    if (rival) {
        cand.push_back(f.value_at_vv(rival->phi));
        cand.push_back(values[rival->index]);
    }
    double best = std::numeric_limits<double>::infinity();
    for (double c : cand)
        if (c >= a && c <= b) best = std::min(best, c);
    out.payment = std::isfinite(best) ? best : b;
    return out;
}

bool myerson_iid_equals_ar(const Marginal& marginal, std::span<const double> values) {
    Myerson m{std::vector<Marginal>(values.size(), marginal), TieBreak::HighestValue};
    Outcome a = run_myerson(m, values);
    Outcome b = run_ar(marginal.monopoly_reserve(), values);
    if (a.winner != b.winner) return false;
    return std::fabs(a.payment - b.payment) <= 1e-9 * std::max(1.0, std::fabs(b.payment));
}

}  // namespace kwr
