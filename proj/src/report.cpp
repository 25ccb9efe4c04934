#include "kwr/report.hpp"

#include <stdexcept>

namespace kwr {

double BoundReport::detail(const std::string& key) const {
    for (const auto& [k, v] : details)
        if (k == key) return v;
    throw std::out_of_range("no detail named " + key);
}

InequalityCheck make_check(double lhs, double rhs, double slack) { return {lhs, rhs, lhs >= rhs - slack}; }

}  // namespace kwr
