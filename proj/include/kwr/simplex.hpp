#pragma once

// Two-phase revised simplex for min c'x s.t. Ax = b, x >= 0 with a sparse A.
// Dense basis inverse, product-form pivots, periodic LU refactorization.

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <vector>

namespace kwr {

struct SparseColumns {
    std::size_t rows = 0;
    std::vector<std::size_t> col_ptr = {0};
    std::vector<std::size_t> row_idx;
    std::vector<double> values;

    std::size_t cols() const { return col_ptr.size() - 1; }
    void push_column(const std::vector<std::size_t>& r, const std::vector<double>& v);
    // y = A x
    std::vector<double> multiply(const std::vector<double>& x) const;
};

struct LpProblem {
    SparseColumns a;
    std::vector<double> b;
    std::vector<double> c;
    // Finite column bounds implied by the constraints; they tighten the dual
    // certificate. Empty means none are known.
    std::vector<double> implied_upper;
};

struct LpSolution {
    std::vector<double> x;
    std::vector<double> y;  // duals
    double objective = 0.0;
    double dual_bound = 0.0;
    double duality_gap = 0.0;
    double primal_residual = 0.0;
    std::size_t iterations = 0;
};

class LpError : public std::runtime_error {
public:
    LpError(const std::string& what, double residual) : std::runtime_error(what), residual_(residual) {}
    double residual() const { return residual_; }

private:
    double residual_;
};

struct SimplexOptions {
    double feasibility_tol = 1e-9;
    double optimality_tol = 1e-11;
    std::size_t refactor_every = 64;
    std::size_t max_iterations = 1'000'000;
    // consecutive degenerate pivots before switching to Bland's rule
    std::size_t degenerate_limit = 50;
};

// Throws LpError when infeasible, unbounded, or numerically unresolved.
LpSolution solve_lp(const LpProblem& problem, const SimplexOptions& opts = {});

}  // namespace kwr
