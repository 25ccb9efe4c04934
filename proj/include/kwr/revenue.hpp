#pragma once

// Expected revenue: exact table enumeration, Monte Carlo, the threshold integral
// representation of AR revenue, independent-prior threshold probabilities and the
// ex-ante relaxation quantities.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "kwr/joint_prior.hpp"
#include "kwr/marginal.hpp"
#include "kwr/mechanism.hpp"
#include "kwr/report.hpp"

namespace kwr {

struct RevenueEstimate {
    double mean = 0.0;
    double half_width_95 = 0.0;
    std::size_t n_samples = 0;
    bool exact = false;
};

RevenueEstimate revenue_exact_table(const Table& table, const Mechanism& mech);

/// Exact revenue when the prior admits it: tables directly, mixtures and products
/// through discretize() on natural grids. Throws if the table would be too large.
RevenueEstimate revenue_exact(const JointPrior& prior, const Mechanism& mech);

inline constexpr std::size_t kDefaultMcBlocks = 64;

/// Sample mean of payments over independent blocks with seeds derived from `seed`;
/// bit-identical for a fixed (seed, blocks) regardless of thread count.
RevenueEstimate revenue_mc(const JointPrior& prior, const Mechanism& mech, std::size_t n_samples,
                           std::uint64_t seed, std::size_t blocks = kDefaultMcBlocks);

double q1_ind(const std::vector<Marginal>& marginals, double t);
double q2_ind(const std::vector<Marginal>& marginals, double t);
/// 1 - prod(1-q_i) (1 + sum q_i/(1-q_i)), with bidders at q_i = 1 factored out.
double q2_ind_from_q(const std::vector<double>& q);
double q1_ind_from_q(const std::vector<double>& q);

using ProbFn = std::function<double(double)>;

/// r * q1(r) + integral of q2 over [r, hi].
double ar_revenue_integral(double r, const ProbFn& q1, const ProbFn& q2, double hi,
                           const std::vector<double>& breakpoints = {}, double abs_tol = 1e-9);

/// AR(r) revenue under the independent prior via the integral representation.
double ar_revenue_independent(const std::vector<Marginal>& marginals, double r);

/// Myer(F_ind): product-table enumeration when every marginal is discrete, else
/// E[max_i phi_i^+] = integral over t >= 0 of 1 - prod Pr[phi_i < t].
double myerson_revenue_independent(const std::vector<Marginal>& marginals);

struct ExAnteSummary {
    double budget = 0.5;
    double tau_ex = 0.0;           // -inf when every level fits in the budget
    std::vector<double> v_bar;     // inf{v : phi_i(v) >= tau_ex}
    std::vector<double> q;         // ex-ante sale probability, atoms demoted so sum = budget
    std::vector<double> rev;       // v_bar_i * q_i
    double demotion_theta = 1.0;   // share of the atom mass at tau_ex that is kept
    double r_ex = 0.0;             // sup{v : sum_i Pr[v_i >= v] >= 1}
    double s0 = 0.0;               // sum_i Pr[v_i > max(reserve, r_ex)]
    double reserve = 0.0;

    double total_q() const;
    double total_rev() const;
};

ExAnteSummary ex_ante_level(const std::vector<Marginal>& marginals, double budget = 0.5, double reserve = 0.0);

/// Both sides of 2 sum rev_i >= Myer(F_ind), the case split of the 3-wise argument
/// and c * Myer(F) >= Myer(F_ind) for the case constant and the global 64.
/// The table must be 3-wise independent (checked; throws otherwise).
BoundReport check_3wise_inequalities(const std::vector<Marginal>& marginals, const Table& table);
BoundReport check_3wise_inequalities(const std::vector<Marginal>& marginals, const JointPrior& prior);

}  // namespace kwr
