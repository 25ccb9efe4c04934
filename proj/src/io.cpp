#include "kwr/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace kwr {
namespace {

template <class T>
T field(const json& j, const char* key, const std::string& where) {
    if (!j.is_object() || !j.contains(key)) throw ConfigError(where + ": missing field '" + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(where + ": field '" + key + "' has the wrong type");
    }
}

std::vector<double> split_numbers(const std::string& line, std::size_t line_no) {
    std::vector<double> out;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(tok, &used));
            if (tok.find_first_not_of(" \t\r", used) != std::string::npos) throw std::invalid_argument(tok);
        } catch (const std::exception&) {
            throw ConfigError("table CSV line " + std::to_string(line_no) + ": cannot parse '" + tok + "'");
        }
    }
    return out;
}

}  // namespace

std::string format_number(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

Marginal marginal_from_json(const json& j) {
    const std::string where = "marginal";
    auto type = field<std::string>(j, "type", where);
    try {
        if (type == "equal_revenue")
            return Marginal::equal_revenue(field<double>(j, "lo", where), field<double>(j, "hi", where));
        if (type == "shifted_er")
            return Marginal::shifted_equal_revenue(field<double>(j, "lo", where), field<double>(j, "hi", where),
                                                   field<double>(j, "eps", where));
        if (type == "uniform") return Marginal::uniform(field<double>(j, "lo", where), field<double>(j, "hi", where));
        if (type == "discrete")
            return Marginal::discrete(field<std::vector<double>>(j, "points", where),
                                      field<std::vector<double>>(j, "masses", where));
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(where + " (" + type + "): " + e.what());
    }
    throw ConfigError(where + ": unknown type '" + type + "'");
}

json marginal_to_json(const Marginal& m) {
    return std::visit(
        [](const auto& d) -> json {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, EqualRevenue>) return {{"type", "equal_revenue"}, {"lo", d.lo}, {"hi", d.hi}};
            if constexpr (std::is_same_v<T, ShiftedEqualRevenue>)
                return {{"type", "shifted_er"}, {"lo", d.lo}, {"hi", d.hi}, {"eps", d.eps}};
            if constexpr (std::is_same_v<T, Uniform>) return {{"type", "uniform"}, {"lo", d.lo}, {"hi", d.hi}};
            if constexpr (std::is_same_v<T, DiscretePmf>)
                return {{"type", "discrete"}, {"points", d.points}, {"masses", d.masses}};
        },
        m.variant());
}

JointPrior prior_from_json(const json& j) {
    const std::string where = "prior";
    auto type = field<std::string>(j, "type", where);
    try {
        if (type == "product") {
            if (!j.contains("marginals") || !j["marginals"].is_array())
                throw ConfigError(where + ": 'marginals' must be an array");
            std::vector<Marginal> ms;
            for (const auto& m : j["marginals"]) ms.push_back(marginal_from_json(m));
            if (ms.empty()) throw ConfigError(where + ": 'marginals' is empty");
            return product_prior(std::move(ms));
        }
        if (type == "myerson_counterexample") {
            double eps = j.contains("eps") ? field<double>(j, "eps", where) : 1e-6;
            return myerson_counterexample(field<std::size_t>(j, "n", where), eps);
        }
        if (type == "uniform_q2") return uniform_q2_counterexample(field<std::size_t>(j, "n", where));
        if (type == "table") {
            auto supports = field<std::vector<std::vector<double>>>(j, "supports", where);
            auto cells = field<std::vector<std::vector<std::uint32_t>>>(j, "cells", where);
            auto pmf = field<std::vector<double>>(j, "pmf", where);
            if (cells.size() != pmf.size()) throw ConfigError(where + ": 'cells' and 'pmf' differ in length");
            std::vector<std::uint32_t> flat;
            for (std::size_t c = 0; c < cells.size(); ++c) {
                if (cells[c].size() != supports.size())
                    throw ConfigError(where + ": cell " + std::to_string(c) + " has the wrong number of indices");
                flat.insert(flat.end(), cells[c].begin(), cells[c].end());
            }
            return JointPrior(Table(std::move(supports), std::move(flat), std::move(pmf)));
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(where + " (" + type + "): " + e.what());
    }
    throw ConfigError(where + ": unknown type '" + type + "'");
}

Mechanism mechanism_from_json(const json& j, const std::vector<Marginal>& marginals) {
    const std::string where = "mechanism";
    auto type = field<std::string>(j, "type", where);
    if (type == "ar") return Mechanism(AnonymousReserve{field<double>(j, "r", where)});
    if (type == "myerson") {
        TieBreak tb = TieBreak::HighestValue;
        if (j.contains("tie_break")) {
            auto t = field<std::string>(j, "tie_break", where);
            if (t == "lex") {
                tb = TieBreak::Lexicographic;
            } else if (t != "highest_value") {
                throw ConfigError(where + ": tie_break must be 'highest_value' or 'lex'");
            }
        }
        return Mechanism(Myerson{marginals, tb});
    }
    throw ConfigError(where + ": unknown type '" + type + "'");
}

void write_table_csv(std::ostream& out, const Table& table) {
    const std::size_t n = table.num_bidders();
    for (std::size_t i = 0; i < n; ++i) out << 'v' << i + 1 << ',';
    out << "mass\n";
    for (std::size_t c = 0; c < table.num_cells(); ++c) {
        for (std::size_t i = 0; i < n; ++i) out << format_number(table.value(c, i)) << ',';
        out << format_number(table.pmf()[c]) << '\n';
    }
}

Table read_table_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("table CSV is empty");
    std::size_t cols = 1;
    for (char ch : line)
        if (ch == ',') ++cols;
    if (cols < 2) throw ConfigError("table CSV needs at least one value column and a mass column");
    const std::size_t n = cols - 1;
    std::vector<std::vector<double>> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        auto r = split_numbers(line, line_no);
        if (r.size() != cols) throw ConfigError("table CSV line " + std::to_string(line_no) + ": expected " + std::to_string(cols) + " fields");
        rows.push_back(std::move(r));
    }
    std::vector<std::map<double, std::uint32_t>> index(n);
    for (const auto& r : rows)
        for (std::size_t i = 0; i < n; ++i) index[i].emplace(r[i], 0);
    std::vector<std::vector<double>> supports(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::uint32_t k = 0;
        for (auto& [v, id] : index[i]) {
            id = k++;
            supports[i].push_back(v);
        }
    }
    std::vector<std::uint32_t> flat;
    std::vector<double> pmf;
    for (const auto& r : rows) {
        for (std::size_t i = 0; i < n; ++i) flat.push_back(index[i].at(r[i]));
        pmf.push_back(r[n]);
    }
    return Table(std::move(supports), std::move(flat), std::move(pmf));
}

json estimate_to_json(const RevenueEstimate& e) {
    return {{"mean", e.mean}, {"half_width_95", e.half_width_95}, {"n_samples", e.n_samples}, {"exact", e.exact}};
}

json report_to_json(const BoundReport& r) {
    json j;
    j["bound_id"] = r.bound_id;
    j["value"] = r.value;
    j["inputs"] = json::object();
    for (const auto& [k, v] : r.inputs) j["inputs"][k] = v;
    j["details"] = json::object();
    for (const auto& [k, v] : r.details) j["details"][k] = v;
    if (r.check) j["check"] = {{"lhs", r.check->lhs}, {"rhs", r.check->rhs}, {"pass", r.check->pass}};
    if (!r.note.empty()) j["note"] = r.note;
    j["pass"] = r.passed();
    return j;
}

json solution_to_json(const WorstCaseSolution& s) {
    return {{"objective", s.objective},        {"duality_gap", s.duality_gap},
            {"dual_bound", s.dual_bound},      {"primal_residual", s.primal_residual},
            {"iterations", s.iterations},      {"cells", s.table.num_cells()}};
}

void write_csv(std::ostream& out, const std::vector<std::string>& header, const std::vector<std::vector<double>>& rows) {
    for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
    out << '\n';
    for (const auto& r : rows) {
        for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << format_number(r[i]);
        out << '\n';
    }
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
    if (!out) throw std::runtime_error("write failed for " + path);
}

}  // namespace kwr
