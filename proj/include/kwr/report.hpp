#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace kwr {

struct InequalityCheck {
    double lhs = 0.0;
    double rhs = 0.0;
    bool pass = false;
};

/// A bound value with its inputs and, optionally, the inequality it certifies
/// (pass iff lhs >= rhs - 1e-9).
struct BoundReport {
    std::string bound_id;
    std::vector<std::pair<std::string, double>> inputs;
    double value = 0.0;
    std::optional<InequalityCheck> check;
    std::string note;
    std::vector<std::pair<std::string, double>> details;

    double detail(const std::string& key) const;
    bool passed() const { return !check || check->pass; }
};

inline constexpr double kInequalitySlack = 1e-9;

InequalityCheck make_check(double lhs, double rhs, double slack = kInequalitySlack);

}  // namespace kwr
