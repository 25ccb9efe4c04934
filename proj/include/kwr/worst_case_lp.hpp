#pragma once

// Worst-case k-wise independent priors with fixed finite marginals: minimize a
// mechanism's revenue or a threshold-count probability over the polytope.

#include <cstddef>
#include <vector>

#include "kwr/joint_prior.hpp"
#include "kwr/mechanism.hpp"
#include "kwr/simplex.hpp"

namespace kwr {

inline constexpr std::size_t kMaxPolytopeCells = 100'000;

struct KwiseRow {
    std::vector<std::size_t> subset;  // bidders, increasing
    std::vector<std::size_t> combo;   // support index per subset bidder
    double rhs = 0.0;
};

struct KwisePolytope {
    std::vector<std::vector<double>> supports;
    std::vector<std::vector<double>> masses;
    std::size_t k = 0;

    // after conditioning: free bidders and their positive-mass support indices
    std::vector<std::size_t> free_bidders;
    std::vector<std::vector<std::size_t>> free_points;
    std::vector<std::size_t> fixed_point;  // for bidders with a single positive-mass point

    // linearly independent constraints on the LP cells (empty subset = total mass)
    std::vector<KwiseRow> rows;
    SparseColumns matrix;

    std::size_t num_cells() const;     // prod |supports_i|
    std::size_t num_variables() const;  // LP cells after conditioning
    /// Count of all marginal constraints over 1 <= |S| <= k, before reduction.
    std::size_t num_full_constraints() const;
    /// Support index vector of LP cell j (all bidders).
    std::vector<std::uint32_t> cell_indices(std::size_t j) const;
    /// Per-LP-cell lifted table.
    Table to_table(const std::vector<double>& x) const;
    /// Product pmf on LP cells.
    std::vector<double> product_point() const;
};

KwisePolytope build_polytope(const std::vector<std::vector<double>>& supports,
                             const std::vector<std::vector<double>>& masses, std::size_t k);
/// Every marginal must be discrete.
KwisePolytope build_polytope(const std::vector<Marginal>& marginals, std::size_t k);

struct WorstCaseSolution {
    Table table;
    double objective = 0.0;
    double duality_gap = 0.0;
    double dual_bound = 0.0;
    double primal_residual = 0.0;
    std::size_t iterations = 0;
};

WorstCaseSolution minimize_linear(const KwisePolytope& poly, const std::vector<double>& cell_cost);
WorstCaseSolution minimize_revenue(const KwisePolytope& poly, const Mechanism& mech);
/// count_at_least is 1 or 2.
WorstCaseSolution minimize_event_prob(const KwisePolytope& poly, double t, int count_at_least);

}  // namespace kwr
