#pragma once

// Joint priors over n bidder values: product priors, branch mixtures (the
// adversarial constructions), and sparse finite tables. Sampling, exact
// discretization onto per-bidder grids, k-wise independence verification and
// threshold-count probabilities.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <utility>
#include <variant>
#include <vector>

#include "kwr/marginal.hpp"

namespace kwr {

/// How one bidder's value is drawn inside a mixture branch, relative to that
/// bidder's declared marginal F_i.
struct Generator {
    enum class Kind { Full, Below, AtLeast, Fixed };
    Kind kind = Kind::Full;
    double param = 0.0;  // cutoff for Below/AtLeast, the value for Fixed

    static Generator full() { return {Kind::Full, 0.0}; }
    static Generator below(double c) { return {Kind::Below, c}; }  // F_i | v < c
    static Generator at_least(double c) { return {Kind::AtLeast, c}; }  // F_i | v >= c
    static Generator fixed(double v) { return {Kind::Fixed, v}; }

    /// Pr[v >= t] under this generator.
    double prob_ge(const Marginal& m, double t) const;
    /// Inverse-quantile draw; u uniform on (0,1].
    double draw(const Marginal& m, double u) const;
};

/// One bidder from `indices`, chosen uniformly, uses `chosen`; the rest use `unchosen`.
struct RandomIndexSlot {
    std::vector<std::size_t> indices;
    Generator chosen;
    Generator unchosen;
};

struct Branch {
    double weight = 0.0;
    /// One entry per bidder; entries for bidders in the slot are ignored.
    std::vector<Generator> components;
    std::optional<RandomIndexSlot> slot;
};

struct ProductPrior {
    std::vector<Marginal> marginals;
};

struct MixturePrior {
    std::vector<Marginal> marginals;  // declared marginal of each bidder
    std::vector<Branch> branches;
};

/// Sparse joint pmf. Cell c assigns bidder i the value supports[i][index(c, i)].
class Table {
public:
    Table() = default;
    Table(std::vector<std::vector<double>> supports, std::vector<std::uint32_t> cell_index,
          std::vector<double> pmf);

    /// Dense product table of discrete marginals.
    static Table product(const std::vector<std::vector<double>>& supports,
                         const std::vector<std::vector<double>>& masses);

    std::size_t num_bidders() const { return supports_.size(); }
    std::size_t num_cells() const { return pmf_.size(); }
    const std::vector<std::vector<double>>& supports() const { return supports_; }
    const std::vector<double>& pmf() const { return pmf_; }
    std::uint32_t index(std::size_t cell, std::size_t bidder) const {
        return idx_[cell * supports_.size() + bidder];
    }
    double value(std::size_t cell, std::size_t bidder) const {
        return supports_[bidder][index(cell, bidder)];
    }
    std::vector<double> values(std::size_t cell) const;
    /// Marginal masses of bidder i over supports[i].
    std::vector<double> marginal_masses(std::size_t bidder) const;
    /// Marginal as a DiscretePmf (masses renormalized if they drift by < 1e-9).
    Marginal marginal(std::size_t bidder) const;
    double total_mass() const;

private:
    std::vector<std::vector<double>> supports_;
    std::vector<std::uint32_t> idx_;
    std::vector<double> pmf_;
};

class JointPrior {
public:
    using Variant = std::variant<ProductPrior, MixturePrior, Table>;

    JointPrior(ProductPrior p);
    JointPrior(MixturePrior m);
    JointPrior(Table t);

    const Variant& variant() const { return v_; }
    std::size_t num_bidders() const;
    /// Declared marginal (product/mixture) or table marginal.
    Marginal marginal(std::size_t i) const;
    std::vector<Marginal> marginals() const;
    /// Pr[v_i >= t] computed from the joint representation.
    double marginal_quantile(std::size_t i, double t) const;

private:
    Variant v_;
};

JointPrior product_prior(std::vector<Marginal> marginals);

/// n small bidders ER[1/n, 1] plus one big bidder ER[n, n^2] shifted by eps; the
/// three-branch pairwise-independent mixture. Bidder n (0-based) is the big one.
JointPrior myerson_counterexample(std::size_t n, double eps);
Marginal myerson_small_marginal(std::size_t n);
Marginal myerson_big_marginal(std::size_t n, double eps);

/// n+1 Uniform[0,1] bidders whose pairwise joint law is independent but
/// Pr[two or more >= (n-1)/n] = 1/n^2.
JointPrior uniform_q2_counterexample(std::size_t n);

/// Draws joint value vectors. Deterministic for a fixed seed.
class Sampler {
public:
    explicit Sampler(const JointPrior& prior);
    void draw(std::mt19937_64& rng, std::vector<double>& out) const;

private:
    const JointPrior& prior_;
    std::vector<double> cum_;  // cumulative branch weights or table pmf
};

/// Uniform on (0,1] with 53 random bits.
double uniform_open0(std::mt19937_64& rng);

std::vector<double> sample(const JointPrior& prior, std::uint64_t seed);

using Grids = std::vector<std::vector<double>>;

/// Grid boundaries containing every atom, cutoff and fixed value plus the support
/// lower end of each bidder.
Grids natural_grids(const JointPrior& prior);

/// Exact cell masses for cells [g_j, g_{j+1}) and [g_m, inf) (the last kept only
/// when it carries mass); representative value = lower endpoint.
Table discretize(const JointPrior& prior, const Grids& grids);

struct KwiseViolation {
    std::vector<std::size_t> subset;
    std::vector<double> cell;  // representative values on the subset
    double joint = 0.0;
    double product = 0.0;
    double deviation = 0.0;
};

struct KwiseReport {
    std::size_t k = 0;
    std::vector<KwiseViolation> violations;  // capped; largest first
    std::size_t violation_count = 0;
    double max_deviation = 0.0;
    double tolerance = 1e-10;
    bool pass = true;
};

KwiseReport verify_kwise(const Table& table, std::size_t k, double tolerance = 1e-10,
                         std::size_t max_reported = 32);
KwiseReport verify_kwise(const JointPrior& prior, std::size_t k, const Grids& grids,
                         double tolerance = 1e-10, std::size_t max_reported = 32);

struct ThresholdProbs {
    double q1;  // Pr[at least one v_i >= t]
    double q2;  // Pr[at least two v_i >= t]
};

/// Exact distribution of the count of successes for independent q_i, truncated at 2.
ThresholdProbs count_probs_independent(const std::vector<double>& q);
ThresholdProbs threshold_probs(const JointPrior& prior, double t);
ThresholdProbs threshold_probs(const Table& table, double t);

inline constexpr std::size_t kMaxDiscretizedCells = 20'000'000;

}  // namespace kwr
