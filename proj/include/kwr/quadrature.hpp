#pragma once

// Adaptive Simpson quadrature with mandatory breakpoints.

#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace kwr {

struct QuadratureResult {
    double value = 0.0;
    double error_estimate = 0.0;
    std::size_t evaluations = 0;
};

class QuadratureError : public std::runtime_error {
public:
    QuadratureError(const std::string& what, double achieved)
        : std::runtime_error(what), achieved_(achieved) {}
    double achieved_tolerance() const { return achieved_; }

private:
    double achieved_;
};

struct QuadratureOptions {
    double abs_tol = 1e-9;
    int max_depth = 48;
    std::size_t max_evaluations = 20'000'000;
    // initial uniform split of every breakpoint segment
    int initial_panels = 8;
};

/// Integrates f over [a, b]. Breakpoints inside (a, b) split the range; segment
/// ends are nudged one ulp inward so step functions with jumps at breakpoints
/// integrate exactly. Throws QuadratureError when the tolerance is not met.
QuadratureResult integrate(const std::function<double(double)>& f, double a, double b,
                           const std::vector<double>& breakpoints = {},
                           const QuadratureOptions& opts = {});

}  // namespace kwr
