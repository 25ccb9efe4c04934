#include "kwr/joint_prior.hpp"
#include "kwr/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <queue>
#include <stdexcept>
#include <string>

namespace kwr {
namespace {

constexpr double kTwoPow53Inv = 1.0 / 9007199254740992.0;

double uniform_closed0(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * kTwoPow53Inv;  // [0,1)
}

std::size_t pick_index(std::mt19937_64& rng, std::size_t size) {
    auto k = static_cast<std::size_t>(uniform_closed0(rng) * static_cast<double>(size));
    return std::min(k, size - 1);
}

void validate_branches(const MixturePrior& m) {
    const std::size_t n = m.marginals.size();
    if (n == 0) throw std::invalid_argument("mixture needs at least one bidder");
    if (m.branches.empty()) throw std::invalid_argument("mixture needs at least one branch");
    double total = 0.0;
    for (const auto& b : m.branches) {
        if (!(b.weight >= 0.0)) throw std::invalid_argument("branch weights must be non-negative");
        if (b.components.size() != n)
            throw std::invalid_argument("branch must give one component per bidder");
        total += b.weight;
        if (b.slot) {
            if (b.slot->indices.empty()) throw std::invalid_argument("random index slot is empty");
            std::vector<bool> seen(n, false);
            for (auto i : b.slot->indices) {
                if (i >= n || seen[i]) throw std::invalid_argument("bad random index slot");
                seen[i] = true;
            }
        }
    }
    if (std::fabs(total - 1.0) > kMassTol) throw std::invalid_argument("branch weights must sum to 1");
}

// Generator of bidder i in branch b when the slot picked `chosen` (or no slot).
const Generator& component_for(const Branch& b, std::size_t i, std::size_t chosen) {
    if (b.slot) {
        const auto& idx = b.slot->indices;
        if (std::find(idx.begin(), idx.end(), i) != idx.end())
            return i == chosen ? b.slot->chosen : b.slot->unchosen;
    }
    return b.components[i];
}

bool in_slot(const Branch& b, std::size_t i) {
    if (!b.slot) return false;
    const auto& idx = b.slot->indices;
    return std::find(idx.begin(), idx.end(), i) != idx.end();
}

// Runs f(chosen, weight) once per slot choice (or once with no choice).
template <class F>
void for_each_choice(const Branch& b, F&& f) {
    if (!b.slot) {
        f(std::numeric_limits<std::size_t>::max(), b.weight);
        return;
    }
    const double w = b.weight / static_cast<double>(b.slot->indices.size());
    for (auto c : b.slot->indices) f(c, w);
}

bool on_grid(const std::vector<double>& g, double x) {
    return std::binary_search(g.begin(), g.end(), x);
}

// Cell masses of one generator on grid g: [g_j, g_{j+1}) and the final [g_m, inf).
std::vector<double> cell_masses(const Generator& gen, const Marginal& m, const std::vector<double>& g,
                                std::size_t bidder) {
    std::vector<double> out(g.size(), 0.0);
    double below = 1.0 - gen.prob_ge(m, g.front());
    if (below > 1e-12)
        throw std::invalid_argument("grid of bidder " + std::to_string(bidder) +
                                    " does not cover the support");
    for (std::size_t j = 0; j < g.size(); ++j) {
        double a = gen.prob_ge(m, g[j]);
        double b = j + 1 < g.size() ? gen.prob_ge(m, g[j + 1]) : 0.0;
        out[j] = std::max(0.0, a - b);
    }
    return out;
}

void check_grid_points(const Marginal& m, const std::vector<double>& g, std::size_t bidder) {
    for (double a : m.atoms()) {
        if (a >= g.front() && !on_grid(g, a))
            throw std::invalid_argument("grid of bidder " + std::to_string(bidder) +
                                        " is missing the atom " + std::to_string(a));
    }
}

void check_generator_points(const Generator& gen, const std::vector<double>& g, std::size_t bidder) {
    if (gen.kind == Generator::Kind::Full) return;
    if (!on_grid(g, gen.param))
        throw std::invalid_argument("grid of bidder " + std::to_string(bidder) +
                                    " is missing the cutoff/value " + std::to_string(gen.param));
}

void validate_grids(const Grids& grids, std::size_t n) {
    if (grids.size() != n) throw std::invalid_argument("need one grid per bidder");
    for (const auto& g : grids) {
        if (g.empty()) throw std::invalid_argument("grid must be nonempty");
        for (std::size_t j = 1; j < g.size(); ++j)
            if (!(g[j] > g[j - 1])) throw std::invalid_argument("grid must be strictly ascending");
    }
}

// Drops trailing [g_m, inf) cells that carry no marginal mass.
Table finalize_table(const Grids& grids, std::map<std::vector<std::uint32_t>, double>& acc) {
    const std::size_t n = grids.size();
    std::vector<std::vector<double>> supports = grids;
    std::vector<std::vector<double>> mass(n);
    for (std::size_t i = 0; i < n; ++i) mass[i].assign(grids[i].size(), 0.0);
    for (const auto& [key, w] : acc)
        for (std::size_t i = 0; i < n; ++i) mass[i][key[i]] += w;
    for (std::size_t i = 0; i < n; ++i) {
        if (supports[i].size() > 1 && mass[i].back() <= 0.0) supports[i].pop_back();
    }
    std::vector<std::uint32_t> idx;
    std::vector<double> pmf;
    idx.reserve(acc.size() * n);
    pmf.reserve(acc.size());
    for (const auto& [key, w] : acc) {
        if (w <= 0.0) continue;
        idx.insert(idx.end(), key.begin(), key.end());
        pmf.push_back(w);
    }
    return Table(std::move(supports), std::move(idx), std::move(pmf));
}

}  // namespace

double Generator::prob_ge(const Marginal& m, double t) const {
    switch (kind) {
        case Kind::Full:
            return m.quantile_q(t);
        case Kind::Below: {
            if (t >= param) return 0.0;
            double qc = m.quantile_q(param);
            if (qc >= 1.0) throw std::domain_error("conditioning on an event of probability 0");
            return std::clamp((m.quantile_q(t) - qc) / (1.0 - qc), 0.0, 1.0);
        }
        case Kind::AtLeast: {
            double qc = m.quantile_q(param);
            if (qc <= 0.0) throw std::domain_error("conditioning on an event of probability 0");
            return std::clamp(m.quantile_q(std::max(t, param)) / qc, 0.0, 1.0);
        }
        case Kind::Fixed:
            return t <= param ? 1.0 : 0.0;
    }
    return 0.0;
}

double Generator::draw(const Marginal& m, double u) const {
    switch (kind) {
        case Kind::Full:
            return m.q_inverse(u);
        case Kind::Below: {
            double qc = m.quantile_q(param);
            double p = qc + u * (1.0 - qc);
            if (p <= qc) p = std::nextafter(qc, 2.0);
            return m.q_inverse(std::min(p, 1.0));
        }
        case Kind::AtLeast: {
            double qc = m.quantile_q(param);
            return std::max(param, m.q_inverse(u * qc));
        }
        case Kind::Fixed:
            return param;
    }
    return 0.0;
}

Table::Table(std::vector<std::vector<double>> supports, std::vector<std::uint32_t> cell_index,
             std::vector<double> pmf)
    : supports_(std::move(supports)), idx_(std::move(cell_index)), pmf_(std::move(pmf)) {
    const std::size_t n = supports_.size();
    if (n == 0) throw std::invalid_argument("table needs at least one bidder");
    for (const auto& s : supports_) {
        if (s.empty()) throw std::invalid_argument("table support must be nonempty");
        for (std::size_t j = 1; j < s.size(); ++j)
            if (!(s[j] > s[j - 1])) throw std::invalid_argument("table supports must be ascending");
    }
    if (idx_.size() != pmf_.size() * n) throw std::invalid_argument("table index size mismatch");
    double total = 0.0;
    for (std::size_t c = 0; c < pmf_.size(); ++c) {
        if (!(pmf_[c] >= 0.0) || !std::isfinite(pmf_[c]))
            throw std::invalid_argument("table masses must be non-negative");
        total += pmf_[c];
        for (std::size_t i = 0; i < n; ++i)
            if (idx_[c * n + i] >= supports_[i].size())
                throw std::invalid_argument("table cell index out of range");
    }
    double tol = kMassTol + 4.0 * std::numeric_limits<double>::epsilon() * static_cast<double>(pmf_.size());
    if (std::fabs(total - 1.0) > tol) throw std::invalid_argument("table masses must sum to 1");
}

Table Table::product(const std::vector<std::vector<double>>& supports,
                     const std::vector<std::vector<double>>& masses) {
    const std::size_t n = supports.size();
    if (masses.size() != n) throw std::invalid_argument("supports/masses size mismatch");
    double cells = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (supports[i].size() != masses[i].size()) throw std::invalid_argument("support/mass size mismatch");
        cells *= static_cast<double>(supports[i].size());
    }
    if (cells > static_cast<double>(kMaxDiscretizedCells)) throw std::length_error("product table too large");
    std::vector<std::uint32_t> idx;
    std::vector<double> pmf;
    std::vector<std::uint32_t> cur(n, 0);
    for (;;) {
        double w = 1.0;
        for (std::size_t i = 0; i < n; ++i) w *= masses[i][cur[i]];
        idx.insert(idx.end(), cur.begin(), cur.end());
        pmf.push_back(w);
        std::size_t i = n;
        while (i-- > 0) {
            if (++cur[i] < supports[i].size()) break;
            cur[i] = 0;
        }
        if (i == static_cast<std::size_t>(-1)) break;
    }
    return Table(supports, std::move(idx), std::move(pmf));
}

std::vector<double> Table::values(std::size_t cell) const {
    std::vector<double> v(num_bidders());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = value(cell, i);
    return v;
}

std::vector<double> Table::marginal_masses(std::size_t bidder) const {
    std::vector<double> m(supports_.at(bidder).size(), 0.0);
    for (std::size_t c = 0; c < pmf_.size(); ++c) m[index(c, bidder)] += pmf_[c];
    return m;
}

Marginal Table::marginal(std::size_t bidder) const {
    auto m = marginal_masses(bidder);
    double total = 0.0;
    for (double x : m) total += x;
    if (std::fabs(total - 1.0) <= 1e-9)
        for (double& x : m) x /= total;
    return Marginal::discrete(supports_[bidder], std::move(m));
}

double Table::total_mass() const {
    double s = 0.0;
    for (double w : pmf_) s += w;
    return s;
}

JointPrior::JointPrior(ProductPrior p) : v_(std::move(p)) {
    if (std::get<ProductPrior>(v_).marginals.empty())
        throw std::invalid_argument("product prior needs at least one bidder");
}

JointPrior::JointPrior(MixturePrior m) : v_(std::move(m)) { validate_branches(std::get<MixturePrior>(v_)); }

JointPrior::JointPrior(Table t) : v_(std::move(t)) {}

std::size_t JointPrior::num_bidders() const {
    if (const auto* p = std::get_if<ProductPrior>(&v_)) return p->marginals.size();
    if (const auto* m = std::get_if<MixturePrior>(&v_)) return m->marginals.size();
    return std::get<Table>(v_).num_bidders();
}

Marginal JointPrior::marginal(std::size_t i) const {
    if (const auto* p = std::get_if<ProductPrior>(&v_)) return p->marginals.at(i);
    if (const auto* m = std::get_if<MixturePrior>(&v_)) return m->marginals.at(i);
    return std::get<Table>(v_).marginal(i);
}

std::vector<Marginal> JointPrior::marginals() const {
    std::vector<Marginal> out;
    for (std::size_t i = 0; i < num_bidders(); ++i) out.push_back(marginal(i));
    return out;
}

double JointPrior::marginal_quantile(std::size_t i, double t) const {
    if (const auto* p = std::get_if<ProductPrior>(&v_)) return p->marginals.at(i).quantile_q(t);
    if (const auto* m = std::get_if<MixturePrior>(&v_)) {
        const Marginal& f = m->marginals.at(i);
        double s = 0.0;
        for (const auto& b : m->branches) {
            for_each_choice(b, [&](std::size_t chosen, double w) {
                s += w * component_for(b, i, chosen).prob_ge(f, t);
            });
        }
        return s;
    }
    const Table& tab = std::get<Table>(v_);
    std::vector<double> column(tab.num_cells());
    for (std::size_t c = 0; c < column.size(); ++c) column[c] = tab.value(c, i);
    return kernels::masked_sum_ge(column, tab.pmf(), t);
}

JointPrior product_prior(std::vector<Marginal> marginals) { return JointPrior(ProductPrior{std::move(marginals)}); }

Marginal myerson_small_marginal(std::size_t n) {
    if (n < 2) throw std::domain_error("construction needs n >= 2");
    return Marginal::equal_revenue(1.0 / static_cast<double>(n), 1.0);
}

Marginal myerson_big_marginal(std::size_t n, double eps) {
    if (n < 2) throw std::domain_error("construction needs n >= 2");
    const double dn = static_cast<double>(n);
    return Marginal::shifted_equal_revenue(dn, dn * dn, eps);
}

JointPrior myerson_counterexample(std::size_t n, double eps) {
    if (n < 2) throw std::domain_error("construction needs n >= 2");
    if (!(eps > 0.0)) throw std::domain_error("eps must be positive");
    const double dn = static_cast<double>(n);
    MixturePrior m;
    for (std::size_t i = 0; i < n; ++i) m.marginals.push_back(myerson_small_marginal(n));
    m.marginals.push_back(myerson_big_marginal(n, eps));
    const double top = m.marginals.back().support_hi();

    Branch all_high;
    all_high.weight = 1.0 / (dn * dn);
    all_high.components.assign(n, Generator::fixed(1.0));
    all_high.components.push_back(Generator::fixed(top));

    Branch big_high;
    big_high.weight = 1.0 / dn - 1.0 / (dn * dn);
    big_high.components.assign(n, Generator::below(1.0));
    big_high.components.push_back(Generator::fixed(top));

    Branch one_small;
    one_small.weight = 1.0 - 1.0 / dn;
    one_small.components.assign(n, Generator::below(1.0));
    one_small.components.push_back(Generator::below(top));
    RandomIndexSlot slot;
    for (std::size_t i = 0; i < n; ++i) slot.indices.push_back(i);
    slot.chosen = Generator::fixed(1.0);
    slot.unchosen = Generator::below(1.0);
    one_small.slot = std::move(slot);

    // weights are formed so they sum to 1 up to rounding; absorb the residue
    one_small.weight = 1.0 - all_high.weight - big_high.weight;
    m.branches = {all_high, big_high, one_small};
    return JointPrior(std::move(m));
}

JointPrior uniform_q2_counterexample(std::size_t n) {
    if (n < 2) throw std::domain_error("construction needs n >= 2");
    const double dn = static_cast<double>(n);
    const double t = (dn - 1.0) / dn;
    MixturePrior m;
    for (std::size_t i = 0; i <= n; ++i) m.marginals.push_back(Marginal::uniform(0.0, 1.0));

    Branch all_high;
    all_high.weight = 1.0 / (dn * dn);
    all_high.components.assign(n + 1, Generator::at_least(t));

    Branch one_high;
    one_high.weight = 1.0 - all_high.weight;
    one_high.components.assign(n + 1, Generator::below(t));
    RandomIndexSlot slot;
    for (std::size_t i = 0; i <= n; ++i) slot.indices.push_back(i);
    slot.chosen = Generator::at_least(t);
    slot.unchosen = Generator::below(t);
    one_high.slot = std::move(slot);

    m.branches = {all_high, one_high};
    return JointPrior(std::move(m));
}

double uniform_open0(std::mt19937_64& rng) {
    return static_cast<double>((rng() >> 11) + 1) * kTwoPow53Inv;
}

Sampler::Sampler(const JointPrior& prior) : prior_(prior) {
    if (const auto* m = std::get_if<MixturePrior>(&prior.variant())) {
        double s = 0.0;
        for (const auto& b : m->branches) cum_.push_back(s += b.weight);
    } else if (const auto* t = std::get_if<Table>(&prior.variant())) {
        double s = 0.0;
        for (double w : t->pmf()) cum_.push_back(s += w);
    }
}

void Sampler::draw(std::mt19937_64& rng, std::vector<double>& out) const {
    const std::size_t n = prior_.num_bidders();
    out.resize(n);
    const auto& v = prior_.variant();
    if (const auto* p = std::get_if<ProductPrior>(&v)) {
        for (std::size_t i = 0; i < n; ++i) out[i] = p->marginals[i].q_inverse(uniform_open0(rng));
        return;
    }
    double u = uniform_closed0(rng) * cum_.back();
    auto k = static_cast<std::size_t>(std::upper_bound(cum_.begin(), cum_.end(), u) - cum_.begin());
    k = std::min(k, cum_.size() - 1);
    if (const auto* t = std::get_if<Table>(&v)) {
        for (std::size_t i = 0; i < n; ++i) out[i] = t->value(k, i);
        return;
    }
    const auto& m = std::get<MixturePrior>(v);
    const Branch& b = m.branches[k];
    std::size_t chosen = std::numeric_limits<std::size_t>::max();
    if (b.slot) chosen = b.slot->indices[pick_index(rng, b.slot->indices.size())];
    for (std::size_t i = 0; i < n; ++i)
        out[i] = component_for(b, i, chosen).draw(m.marginals[i], uniform_open0(rng));
}

std::vector<double> sample(const JointPrior& prior, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<double> out;
    Sampler(prior).draw(rng, out);
    return out;
}

Grids natural_grids(const JointPrior& prior) {
    const std::size_t n = prior.num_bidders();
    Grids g(n);
    const auto& v = prior.variant();
    if (const auto* t = std::get_if<Table>(&v)) return t->supports();
    for (std::size_t i = 0; i < n; ++i) {
        Marginal m = prior.marginal(i);
        g[i].push_back(m.support_lo());
        g[i].push_back(m.support_hi());
        for (double a : m.atoms()) g[i].push_back(a);
        if (const auto* mix = std::get_if<MixturePrior>(&v)) {
            for (const auto& b : mix->branches) {
                auto add = [&](const Generator& gen) {
                    if (gen.kind != Generator::Kind::Full) g[i].push_back(gen.param);
                };
                add(b.components[i]);
                if (in_slot(b, i)) {
                    add(b.slot->chosen);
                    add(b.slot->unchosen);
                }
            }
        }
        std::sort(g[i].begin(), g[i].end());
        g[i].erase(std::unique(g[i].begin(), g[i].end()), g[i].end());
    }
    return g;
}

Table discretize(const JointPrior& prior, const Grids& grids) {
    const std::size_t n = prior.num_bidders();
    validate_grids(grids, n);
    const auto& v = prior.variant();
    if (const auto* t = std::get_if<Table>(&v)) {
        if (grids != t->supports()) throw std::invalid_argument("table priors discretize only onto their own supports");
        return *t;
    }
    for (std::size_t i = 0; i < n; ++i) check_grid_points(prior.marginal(i), grids[i], i);

    std::map<std::vector<std::uint32_t>, double> acc;
    // expands one independent branch: per-bidder sparse cell lists, product over bidders
    auto expand = [&](const std::vector<std::vector<double>>& masses, double weight) {
        std::vector<std::vector<std::pair<std::uint32_t, double>>> nz(n);
        double count = 1.0;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < masses[i].size(); ++j)
                if (masses[i][j] > 0.0) nz[i].push_back({static_cast<std::uint32_t>(j), masses[i][j]});
            if (nz[i].empty()) return;
            count *= static_cast<double>(nz[i].size());
        }
        if (count + static_cast<double>(acc.size()) > static_cast<double>(kMaxDiscretizedCells))
            throw std::length_error("discretized table too large");
        std::vector<std::size_t> pos(n, 0);
        std::vector<std::uint32_t> key(n);
        for (;;) {
            double w = weight;
            for (std::size_t i = 0; i < n; ++i) {
                key[i] = nz[i][pos[i]].first;
                w *= nz[i][pos[i]].second;
            }
            acc[key] += w;
            std::size_t i = n;
            while (i-- > 0) {
                if (++pos[i] < nz[i].size()) break;
                pos[i] = 0;
            }
            if (i == static_cast<std::size_t>(-1)) break;
        }
    };

    if (const auto* p = std::get_if<ProductPrior>(&v)) {
        std::vector<std::vector<double>> masses(n);
        for (std::size_t i = 0; i < n; ++i)
            masses[i] = cell_masses(Generator::full(), p->marginals[i], grids[i], i);
        expand(masses, 1.0);
        return finalize_table(grids, acc);
    }

    const auto& mix = std::get<MixturePrior>(v);
    for (const auto& b : mix.branches) {
        for (std::size_t i = 0; i < n; ++i) {
            check_generator_points(b.components[i], grids[i], i);
            if (in_slot(b, i)) {
                check_generator_points(b.slot->chosen, grids[i], i);
                check_generator_points(b.slot->unchosen, grids[i], i);
            }
        }
        // the non-slot bidders' cell masses are shared across slot choices
        std::vector<std::vector<double>> base(n), chosen_m(n), unchosen_m(n);
        for (std::size_t i = 0; i < n; ++i) {
            if (in_slot(b, i)) {
                chosen_m[i] = cell_masses(b.slot->chosen, mix.marginals[i], grids[i], i);
                unchosen_m[i] = cell_masses(b.slot->unchosen, mix.marginals[i], grids[i], i);
            } else {
                base[i] = cell_masses(b.components[i], mix.marginals[i], grids[i], i);
            }
        }
        for_each_choice(b, [&](std::size_t chosen, double w) {
            std::vector<std::vector<double>> masses(n);
            for (std::size_t i = 0; i < n; ++i) {
                if (!in_slot(b, i)) masses[i] = base[i];
                else masses[i] = i == chosen ? chosen_m[i] : unchosen_m[i];
            }
            expand(masses, w);
        });
    }
    return finalize_table(grids, acc);
}

KwiseReport verify_kwise(const Table& table, std::size_t k, double tolerance, std::size_t max_reported) {
    const std::size_t n = table.num_bidders();
    if (k < 1 || k > n) throw std::domain_error("k must lie in [1, n]");
    KwiseReport rep;
    rep.k = k;
    rep.tolerance = tolerance;

    std::vector<std::vector<double>> marg(n);
    for (std::size_t i = 0; i < n; ++i) marg[i] = table.marginal_masses(i);

    auto worse = [](const KwiseViolation& a, const KwiseViolation& b) { return a.deviation > b.deviation; };
    std::priority_queue<KwiseViolation, std::vector<KwiseViolation>, decltype(worse)> top(worse);

    std::vector<double> joint;
    std::vector<std::size_t> subset;
    const auto& pmf = table.pmf();

    auto check_subset = [&]() {
        const std::size_t s = subset.size();
        std::vector<std::size_t> dims(s), stride(s);
        std::size_t total = 1;
        for (std::size_t a = s; a-- > 0;) {
            dims[a] = table.supports()[subset[a]].size();
            stride[a] = total;
            total *= dims[a];
        }
        if (total > 50'000'000) throw std::length_error("subset cell space too large");
        joint.assign(total, 0.0);
        for (std::size_t c = 0; c < pmf.size(); ++c) {
            std::size_t flat = 0;
            for (std::size_t a = 0; a < s; ++a) flat += table.index(c, subset[a]) * stride[a];
            joint[flat] += pmf[c];
        }
        for (std::size_t flat = 0; flat < total; ++flat) {
            double prod = 1.0;
            std::size_t rem = flat;
            for (std::size_t a = 0; a < s; ++a) {
                prod *= marg[subset[a]][rem / stride[a]];
                rem %= stride[a];
            }
            double dev = std::fabs(joint[flat] - prod);
            rep.max_deviation = std::max(rep.max_deviation, dev);
            if (dev > tolerance) {
                ++rep.violation_count;
                if (top.size() < max_reported || (max_reported > 0 && dev > top.top().deviation)) {
                    KwiseViolation v;
                    v.subset = subset;
                    rem = flat;
                    for (std::size_t a = 0; a < s; ++a) {
                        v.cell.push_back(table.supports()[subset[a]][rem / stride[a]]);
                        rem %= stride[a];
                    }
                    v.joint = joint[flat];
                    v.product = prod;
                    v.deviation = dev;
                    top.push(std::move(v));
                    if (top.size() > max_reported) top.pop();
                }
            }
        }
    };

    std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t start, std::size_t size) {
        if (subset.size() == size) {
            check_subset();
            return;
        }
        for (std::size_t i = start; i < n; ++i) {
            if (n - i < size - subset.size()) break;
            subset.push_back(i);
            rec(i + 1, size);
            subset.pop_back();
        }
    };
    // singletons are implied by the table's own marginals
    for (std::size_t size = 2; size <= k; ++size) rec(0, size);

    while (!top.empty()) {
        rep.violations.push_back(top.top());
        top.pop();
    }
    std::reverse(rep.violations.begin(), rep.violations.end());
    rep.pass = rep.max_deviation <= tolerance;
    return rep;
}

KwiseReport verify_kwise(const JointPrior& prior, std::size_t k, const Grids& grids, double tolerance,
                         std::size_t max_reported) {
    if (k < 1 || k > prior.num_bidders()) throw std::domain_error("k must lie in [1, n]");
    return verify_kwise(discretize(prior, grids), k, tolerance, max_reported);
}

ThresholdProbs count_probs_independent(const std::vector<double>& q) {
    double p0 = 1.0, p1 = 0.0, p2 = 0.0;
    for (double x : q) {
        p2 = p2 + p1 * x;
        p1 = p1 * (1.0 - x) + p0 * x;
        p0 = p0 * (1.0 - x);
    }
    return {std::min(1.0, p1 + p2), std::min(1.0, p2)};
}

ThresholdProbs threshold_probs(const Table& table, double t) {
    const std::size_t cells = table.num_cells();
    std::vector<double> counts(cells, 0.0), column(cells);
    for (std::size_t i = 0; i < table.num_bidders(); ++i) {
        for (std::size_t c = 0; c < cells; ++c) column[c] = table.value(c, i);
        kernels::accumulate_ge(column, t, counts);
    }
    // plain ordered sums keep this bit-identical to direct enumeration
    double q1 = 0.0, q2 = 0.0;
    for (std::size_t c = 0; c < cells; ++c) {
        if (counts[c] >= 1.0) q1 += table.pmf()[c];
        if (counts[c] >= 2.0) q2 += table.pmf()[c];
    }
    return {q1, q2};
}

ThresholdProbs threshold_probs(const JointPrior& prior, double t) {
    const auto& v = prior.variant();
    if (const auto* tab = std::get_if<Table>(&v)) return threshold_probs(*tab, t);
    const std::size_t n = prior.num_bidders();
    std::vector<double> q(n);
    if (const auto* p = std::get_if<ProductPrior>(&v)) {
        for (std::size_t i = 0; i < n; ++i) q[i] = p->marginals[i].quantile_q(t);
        return count_probs_independent(q);
    }
    const auto& mix = std::get<MixturePrior>(v);
    ThresholdProbs out{0.0, 0.0};
    for (const auto& b : mix.branches) {
        for_each_choice(b, [&](std::size_t chosen, double w) {
            for (std::size_t i = 0; i < n; ++i) q[i] = component_for(b, i, chosen).prob_ge(mix.marginals[i], t);
            auto r = count_probs_independent(q);
            out.q1 += w * r.q1;
            out.q2 += w * r.q2;
        });
    }
    out.q1 = std::min(1.0, out.q1);
    out.q2 = std::min(1.0, out.q2);
    return out;
}

}  // namespace kwr
