#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "kwr/bounds.hpp"
#include "kwr/io.hpp"
#include "kwr/revenue.hpp"
#include "kwr/worst_case_lp.hpp"

using namespace kwr;
namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitCheckFailed = 2;

struct Options {
    std::string config;
    std::size_t n = 0;
    double eps = 1e-6;
    std::size_t k = 2;
    std::optional<std::uint64_t> seed;
    std::size_t samples = 100000;
    std::string out = ".";
    std::string kind;
    std::string target;
    std::string mechanism;
    std::string bound = "lb1";
    double s_min = 0.0, s_max = 4.0, t = 2.0;
    std::size_t points = 81;
};

fs::path out_path(const Options& o, const std::string& name) {
    fs::create_directories(o.out);
    return fs::path(o.out) / name;
}

void emit_json(const Options& o, const std::string& name, const json& j) {
    std::string text = j.dump(2) + "\n";
    write_text_file(out_path(o, name).string(), text);
    std::cout << text;
}

void emit_csv(const Options& o, const std::string& name, const std::vector<std::string>& header,
              const std::vector<std::vector<double>>& rows) {
    std::ostringstream s;
    write_csv(s, header, rows);
    write_text_file(out_path(o, name).string(), s.str());
}

json constant_summary(const std::string& id, double reference, double computed, bool pass) {
    return {{"target", id}, {"reference_constant", reference}, {"computed", computed}, {"margin", reference - computed}, {"pass", pass}};
}

json details_json(const BoundReport& r) {
    json d = json::object();
    for (const auto& [k, v] : r.details) d[k] = v;
    return d;
}

int cmd_counterexample(const Options& o) {
    if (o.n < 2) throw ConfigError("--n must be at least 2");
    const double n = static_cast<double>(o.n);
    if (o.kind == "myerson") {
        auto prior = myerson_counterexample(o.n, o.eps);
        auto ms = prior.marginals();
        auto pair = verify_kwise(prior, 2, natural_grids(prior));
        double adversarial = revenue_exact(prior, Mechanism(Myerson{ms})).mean;
        // selling to the big bidder at the bottom of its support always clears
        double always_sell = ms.back().support_lo();
        double ratio = always_sell / adversarial;
        bool pass = pair.pass && always_sell >= n && ratio >= n / 3.0;
        json j = {{"kind", "myerson"},
                  {"n", o.n},
                  {"eps", o.eps},
                  {"pairwise_independent", pair.pass},
                  {"pairwise_max_deviation", pair.max_deviation},
                  {"adversarial_revenue", adversarial},
                  {"independent_revenue_lower_bound", always_sell},
                  {"ratio", ratio},
                  {"reference_constant", n / 3.0},
                  {"computed", ratio},
                  {"margin", ratio - n / 3.0},
                  {"pass", pass}};
        emit_json(o, "counterexample_myerson.json", j);
        return pass ? kExitOk : kExitCheckFailed;
    }
    if (o.kind == "q2") {
        auto prior = uniform_q2_counterexample(o.n);
        auto pair = verify_kwise(prior, 2, natural_grids(prior));
        double t = (n - 1) / n;
        double ind = q2_ind(prior.marginals(), t);
        double adv = threshold_probs(prior, t).q2;
        bool pass = pair.pass && std::fabs(adv - 1 / (n * n)) <= 1e-12 && ind > adv;
        json j = {{"kind", "q2"},
                  {"n", o.n},
                  {"threshold", t},
                  {"pairwise_independent", pair.pass},
                  {"q2_independent", ind},
                  {"q2_adversarial", adv},
                  {"reference_constant", 1 / (n * n)},
                  {"computed", adv},
                  {"margin", adv - 1 / (n * n)},
                  {"limit_1_minus_2_over_e", 1 - 2 / std::exp(1.0)},
                  {"pass", pass}};
        emit_json(o, "counterexample_q2.json", j);
        return pass ? kExitOk : kExitCheckFailed;
    }
    throw ConfigError("unknown counterexample kind '" + o.kind + "'");
}

int reproduce_iid(const Options& o) {
    auto c = certify_iid_constant();
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < c.beta.size(); ++i) rows.push_back({c.beta[i], c.value[i]});
    emit_csv(o, "iid_objective.csv", {"beta", "F"}, rows);
    json j = constant_summary("2.63", 2.63, c.constant, c.pass);
    j["beta_star"] = c.beta_star;
    j["min_value"] = c.min_value;
    emit_json(o, "reproduce_2.63.json", j);
    return c.pass ? kExitOk : kExitCheckFailed;
}

int reproduce_ar(const Options& o) {
    auto r = certify_ar_constant();
    bool pass = r.passed();
    json j = constant_summary("18.07", 18.07, r.value, pass);
    j["p"] = 0.674;
    j["details"] = details_json(r);
    if (!r.note.empty()) j["note"] = r.note;
    emit_json(o, "reproduce_18.07.json", j);
    return pass ? kExitOk : kExitCheckFailed;
}

int reproduce_figure1(const Options& o) {
    std::vector<std::vector<double>> rows;
    for (const auto& r : figure1_curves(1000)) rows.push_back({r.beta, r.lb1_inv, r.lb2_inv, r.objective});
    emit_csv(o, "figure1.csv", {"beta", "lb1_inv_beta", "lb2_inv_beta", "F"}, rows);
    json j = {{"target", "figure1"}, {"rows", rows.size()}, {"file", "figure1.csv"}};
    std::cout << j.dump(2) << "\n";
    return kExitOk;
}

int reproduce_figure2(const Options& o) {
    // irregular discrete curve with its hull, then the regular envelope at p = 0.674
    auto pmf = DiscretePmf{{1, 4, 10}, {0.8, 0.1, 0.1}};
    auto ironed = iron_discrete(pmf);
    std::vector<std::vector<double>> curve;
    for (const auto& s : ironed.curve.samples) curve.push_back({s.q, s.revenue, ironed.hull_at(s.q)});
    emit_csv(o, "figure2_revenue_curve.csv", {"q", "revenue", "hull"}, curve);

    auto er = Marginal::equal_revenue(0.674, 1e6);
    auto reg = revenue_curve(Marginal::uniform(0, 1), 201);
    std::vector<std::vector<double>> uni;
    for (const auto& s : reg.samples) uni.push_back({s.q, s.revenue});
    emit_csv(o, "figure2_regular_curve.csv", {"q", "revenue"}, uni);

    std::vector<std::vector<double>> env;
    const double p = 0.674;
    for (std::size_t i = 0; i <= 400; ++i) {
        double t = 0.01 + 4.99 * static_cast<double>(i) / 400.0;
        env.push_back({t, regular_quantile_bound(p, t), er.quantile_q(t)});
    }
    emit_csv(o, "figure2_envelope.csv", {"t", "bound", "equal_revenue_q"}, env);
    json j = {{"target", "figure2"},
              {"files", {"figure2_revenue_curve.csv", "figure2_regular_curve.csv", "figure2_envelope.csv"}},
              {"hull_vertices", ironed.hull.size()}};
    std::cout << j.dump(2) << "\n";
    return kExitOk;
}

int reproduce_case1(const Options& o) {
    auto r = certify_ar_constant();
    double core = tail_core_case1();
    double c1 = r.detail("case1");
    bool pass = std::fabs(c1 - 2.91) <= 1e-3;
    json j = constant_summary("case1-2.91", 2.91, c1, pass);
    j["tail_core_ratio"] = core;
    j["case1_exact"] = r.detail("case1_exact");
    emit_json(o, "reproduce_case1.json", j);
    return pass ? kExitOk : kExitCheckFailed;
}

int cmd_reproduce(const Options& o) {
    if (o.target == "2.63") return reproduce_iid(o);
    if (o.target == "18.07") return reproduce_ar(o);
    if (o.target == "figure1") return reproduce_figure1(o);
    if (o.target == "figure2") return reproduce_figure2(o);
    if (o.target == "case1-2.91") return reproduce_case1(o);
    throw ConfigError("unknown reproduce target '" + o.target + "'");
}

json load_config(const Options& o) {
    if (o.config.empty()) throw ConfigError("--config is required");
    return read_json_file(o.config);
}

int cmd_revenue(const Options& o) {
    json cfg = load_config(o);
    if (!cfg.contains("prior")) throw ConfigError(o.config + ": missing field 'prior'");
    if (!cfg.contains("mechanism")) throw ConfigError(o.config + ": missing field 'mechanism'");
    auto prior = prior_from_json(cfg["prior"]);
    auto ms = prior.marginals();
    auto mech = mechanism_from_json(cfg["mechanism"], ms);
    std::string method = cfg.value("method", "exact");
    RevenueEstimate e;
    if (method == "exact") {
        e = revenue_exact(prior, mech);
    } else if (method == "mc") {
        std::optional<std::uint64_t> seed = o.seed;
        if (!seed && cfg.contains("seed")) seed = cfg["seed"].get<std::uint64_t>();
        if (!seed) throw ConfigError("Monte Carlo revenue needs a seed (--seed or 'seed')");
        std::size_t samples = cfg.value("samples", o.samples);
        e = revenue_mc(prior, mech, samples, *seed);
    } else {
        throw ConfigError(o.config + ": method must be 'exact' or 'mc'");
    }
    json j = {{"mechanism", mech.describe()}, {"bidders", prior.num_bidders()}, {"revenue", estimate_to_json(e)}};
    emit_json(o, "revenue.json", j);
    return kExitOk;
}

int cmd_lp(const Options& o) {
    json cfg = load_config(o);
    if (!cfg.contains("marginals") || !cfg["marginals"].is_array())
        throw ConfigError(o.config + ": 'marginals' must be an array");
    std::vector<Marginal> ms;
    for (const auto& m : cfg["marginals"]) ms.push_back(marginal_from_json(m));
    std::size_t k = cfg.value("k", o.k);
    auto poly = build_polytope(ms, k);
    json objective = cfg.value("objective", json{{"type", "revenue"}});
    std::string type = objective.value("type", "revenue");
    WorstCaseSolution s;
    json extra = json::object();
    if (type == "revenue") {
        json mj = cfg.contains("mechanism") ? cfg["mechanism"] : json{{"type", o.mechanism.empty() ? "myerson" : o.mechanism}};
        auto mech = mechanism_from_json(mj, ms);
        s = minimize_revenue(poly, mech);
        auto prod = Table::product(poly.supports, poly.masses);
        double ind = revenue_exact_table(prod, mech).mean;
        extra = {{"mechanism", mech.describe()}, {"independent_value", ind}, {"ratio", ind / s.objective}};
    } else if (type == "q1" || type == "q2") {
        if (!objective.contains("t")) throw ConfigError(o.config + ": objective needs 't'");
        double t = objective["t"].get<double>();
        s = minimize_event_prob(poly, t, type == "q1" ? 1 : 2);
        std::vector<double> q;
        for (const auto& m : ms) q.push_back(m.quantile_q(t));
        extra = {{"t", t}, {"independent_value", type == "q1" ? q1_ind_from_q(q) : q2_ind_from_q(q)}};
    } else {
        throw ConfigError(o.config + ": objective type must be revenue, q1 or q2");
    }
    auto check = verify_kwise(s.table, k, 1e-9);
    std::ostringstream csv;
    write_table_csv(csv, s.table);
    write_text_file(out_path(o, "worst_case_table.csv").string(), csv.str());
    json j = {{"k", k},
              {"cells", poly.num_cells()},
              {"variables", poly.num_variables()},
              {"rows", poly.rows.size()},
              {"solution", solution_to_json(s)},
              {"kwise_verified", check.pass},
              {"kwise_max_deviation", check.max_deviation}};
    j.update(extra);
    emit_json(o, "lp.json", j);
    return check.pass ? kExitOk : kExitCheckFailed;
}

int cmd_bounds(const Options& o) {
    if (o.points < 2) throw ConfigError("--points must be at least 2");
    std::vector<std::string> lines = {"bound_id,inputs,value"};
    for (std::size_t i = 0; i < o.points; ++i) {
        double s = o.s_min + (o.s_max - o.s_min) * static_cast<double>(i) / static_cast<double>(o.points - 1);
        double v;
        std::string inputs = "s=" + format_number(s);
        if (o.bound == "lb1") v = lb1(s);
        else if (o.bound == "lb2") v = lb2_clamped(s);
        else if (o.bound == "wine2") v = wine2_bound(s);
        else if (o.bound == "range1") v = range1_bound(s);
        else if (o.bound == "tail_upper") v = tail_upper(s);
        else if (o.bound == "range2") {
            v = range2_bound(s, o.t);
            inputs += ";t=" + format_number(o.t);
        } else if (o.bound == "qr_lb") {
            inputs = "p=" + format_number(s);
            v = qr_lb(s);
        } else throw ConfigError("unknown bound '" + o.bound + "'");
        lines.push_back(o.bound + "," + inputs + "," + format_number(v));
    }
    std::string text;
    for (const auto& l : lines) text += l + "\n";
    write_text_file(out_path(o, "bounds_" + o.bound + ".csv").string(), text);
    std::cout << text;
    return kExitOk;
}

int cmd_figure(const Options& o) {
    if (o.kind != "ratio-curve") throw ConfigError("unknown figure '" + o.kind + "'");
    std::vector<std::vector<double>> rows;
    for (const auto& r : figure1_curves(1000)) rows.push_back({r.beta, r.lb1_inv, r.lb2_inv, r.objective});
    emit_csv(o, "ratio_curve.csv", {"beta", "lb1_inv_beta", "lb2_inv_beta", "F"}, rows);
    std::cout << json{{"figure", "ratio-curve"}, {"rows", rows.size()}, {"file", "ratio_curve.csv"}}.dump(2) << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"k-wise independence robustness toolkit"};
    app.require_subcommand(1);
    Options o;

    auto* ce = app.add_subcommand("counterexample", "pairwise-independent constructions");
    ce->add_option("kind", o.kind, "myerson or q2")->required()->check(CLI::IsMember({"myerson", "q2"}));
    ce->add_option("--n", o.n, "number of small bidders")->required();
    ce->add_option("--eps", o.eps, "shift of the big bidder");
    ce->add_option("--seed", o.seed, "unused; the construction is deterministic");

    auto* rp = app.add_subcommand("reproduce", "certified constants and figure data");
    rp->add_option("target", o.target, "2.63, 18.07, figure1, figure2 or case1-2.91")
        ->required()
        ->check(CLI::IsMember({"2.63", "18.07", "figure1", "figure2", "case1-2.91"}));

    auto* rv = app.add_subcommand("revenue", "expected revenue of a mechanism on a prior");
    rv->add_option("--config", o.config, "instance JSON")->required();
    rv->add_option("--seed", o.seed, "seed for Monte Carlo");
    rv->add_option("--samples", o.samples, "Monte Carlo sample count");

    auto* lp = app.add_subcommand("lp", "worst-case k-wise independent prior");
    lp->add_option("--config,--instance", o.config, "instance JSON")->required();
    lp->add_option("--k", o.k, "degree of independence");
    lp->add_option("--mechanism", o.mechanism, "ar or myerson when the config has none");

    auto* bd = app.add_subcommand("bounds", "tabulate a closed-form bound");
    bd->add_option("--bound", o.bound, "lb1, lb2, wine2, range1, range2, tail_upper or qr_lb");
    bd->add_option("--s-min", o.s_min);
    bd->add_option("--s-max", o.s_max);
    bd->add_option("--points", o.points);
    bd->add_option("--t", o.t, "threshold for range2");

    auto* fg = app.add_subcommand("figure", "figure data as CSV");
    fg->add_option("name", o.kind, "ratio-curve")->required();

    for (auto* sub : {ce, rp, rv, lp, bd, fg}) sub->add_option("--out", o.out, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitError;
    }

    try {
        if (ce->parsed()) return cmd_counterexample(o);
        if (rp->parsed()) return cmd_reproduce(o);
        if (rv->parsed()) return cmd_revenue(o);
        if (lp->parsed()) return cmd_lp(o);
        if (bd->parsed()) return cmd_bounds(o);
        if (fg->parsed()) return cmd_figure(o);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    }
    return kExitError;
}
