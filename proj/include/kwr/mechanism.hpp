#pragma once

// Truthful single-item auctions: Myerson's virtual-value auction with threshold
// payments, and the second-price auction with an anonymous reserve.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "kwr/marginal.hpp"

namespace kwr {

enum class TieBreak { HighestValue, Lexicographic };

struct Outcome {
    std::optional<std::size_t> winner;
    double payment = 0.0;
};

struct AnonymousReserve {
    double r = 0.0;
};

struct Myerson {
    std::vector<Marginal> marginals;
    TieBreak tie_break = TieBreak::HighestValue;
};

class Mechanism {
public:
    Mechanism(AnonymousReserve ar);
    Mechanism(Myerson m);

    const std::variant<Myerson, AnonymousReserve>& variant() const { return v_; }
    std::string describe() const;
    Outcome run(std::span<const double> values) const;

private:
    std::variant<Myerson, AnonymousReserve> v_;
};

Outcome run_ar(double r, std::span<const double> values);
Outcome run_myerson(const Myerson& mech, std::span<const double> values);
/// Does Myerson (shared regular marginal, highest-value ties) agree with AR at the
/// monopoly reserve on this value vector?
bool myerson_iid_equals_ar(const Marginal& marginal, std::span<const double> values);

}  // namespace kwr
