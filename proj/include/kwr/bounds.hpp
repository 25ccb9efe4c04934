#pragma once

// Closed-form probability and revenue bounds for pairwise independent priors, and
// the numerical pipelines certifying the i.i.d. and anonymous-reserve constants.

#include <cstddef>
#include <vector>

#include "kwr/joint_prior.hpp"
#include "kwr/report.hpp"

namespace kwr {

/// Lower bound on Pr[at least one] given expected count s; m1 = floor(s + 1).
double lb1(double s);
/// Lower bound on Pr[at least two] given expected count s > 1; m2 = floor(s^2/(s-1)),
/// clamped at 0. Throws for s <= 1.
double lb2(double s);
/// lb2 extended by 0 for s <= 1.
double lb2_clamped(double s);

inline constexpr double kQ1Ratio = 1.299;
double q1_ratio_constant();
/// 1.299 * Q1(table, t) >= Q1_ind(table marginals, t).
BoundReport check_q1_ratio(const Table& table, double t);

/// s / (s + 1).
double wine2_bound(double s);
/// Upper bound on the integral of Q2_ind above 1 given mass s0 in [0, 1].
double tail_upper(double s0);
/// 1 - e^{-s}(1 + s).
double range1_bound(double s);
/// ((2 - s0)/s0 * t + 1)^{-2}; valid for t >= range2_threshold(s0).
double range2_bound(double s0, double t);
double range2_threshold(double s0);

/// min{1/1.299 - (1 - p) e/(e - 1), lb2(1 + p)}; <= 0 means the bound is vacuous.
double qr_lb(double p);
/// (9/4 - 4/e) / (1 - 1/e).
double tail_core_case1();
/// (2p^2 - 2p + 1)/p^3 * e/(e - 1).
double tail_core_case2b(double p);

struct FactIntegral {
    double closed_form;
    double left_quadrature;   // over [0, 1]
    double right_quadrature;  // over [1, inf) via x = 1/y
};
FactIntegral fact_integral(double p);

/// F(beta) = beta * lb1(1/beta) + integral_beta^1 lb2(1/u) du.
double iid_objective(double beta);

struct IidCertificate {
    double beta_star = 0.0;
    double min_value = 0.0;
    double constant = 0.0;  // 1 / min_value
    bool pass = false;      // min_value >= 1/2.63 - 1e-3
    std::vector<double> beta;
    std::vector<double> value;
};
IidCertificate certify_iid_constant(std::size_t grid = 10000);

struct Figure1Row {
    double beta, lb1_inv, lb2_inv, objective;
};
std::vector<Figure1Row> figure1_curves(std::size_t rows = 1000);

/// I(p) = integral_0^1 lb2(p/((1-p)t+p) + (1-p)/(pt+(1-p))) dt.
double case2a_integral(double p);

/// Case constants of the anonymous-reserve argument at p; value = max of the three.
/// details: case1_exact, case1, integral, case2a, qr_lb, tail_core_case2b, case2b.
BoundReport certify_ar_constant(double p = 0.674);

struct ReplacementResult {
    double max_value = 0.0;
    std::vector<double> argmax_p;  // descending
    std::size_t evaluated = 0;
};

/// Objective of the successive-replacement program: Q2_ind of q_i = p_i/((1-p_i)t + p_i).
double replacement_objective(const std::vector<double>& p, double t);
/// Grid search (resolution 1/resolution) over sum p_i = s0 with n entries.
ReplacementResult replacement_maximizer(double s0, double t, std::size_t n, std::size_t resolution = 200);
/// Change of the objective when p_i and p_j are merged into p_i + p_j.
double replacement_merge_gain(const std::vector<double>& p, std::size_t i, std::size_t j, double t);
/// Closed-form criterion for a merge of p1 + p2 = t_sum not to decrease the objective,
/// alpha = sum over the other entries of p/(t(1-p)).
bool sn_condition(double alpha, double t_sum, double t);
bool merge_precondition_general(double t_sum, double t);  // t >= 1 + t_sum/(1-t_sum)^2
bool merge_precondition_three(double t_sum, double t);    // t >= ((1-t_sum)^2 + t_sum^2)/(2(1-t_sum)^2)

/// f(m) = 1 - (1 - s/m)^m (1 + m s/(m - s)).
double equal_split_q2(double s, double m);
/// f nondecreasing on integers [ceil(s)+1, m_max] and bounded by range1_bound(s).
bool equal_split_monotone_check(double s, std::size_t m_max);

}  // namespace kwr
