#pragma once

// JSON instances, table CSV round-trips and number formatting for emitted files.

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "kwr/joint_prior.hpp"
#include "kwr/marginal.hpp"
#include "kwr/mechanism.hpp"
#include "kwr/report.hpp"
#include "kwr/revenue.hpp"
#include "kwr/worst_case_lp.hpp"

namespace kwr {

using json = nlohmann::json;

/// Malformed input; the message names the offending field.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// 17 significant digits, '.' decimal.
std::string format_number(double x);

Marginal marginal_from_json(const json& j);
json marginal_to_json(const Marginal& m);

/// {"type":"product","marginals":[...]}, {"type":"myerson_counterexample","n":..,"eps":..},
/// {"type":"uniform_q2","n":..}, {"type":"table","supports":[[...]],"cells":[[...]],"pmf":[...]}.
JointPrior prior_from_json(const json& j);

/// {"type":"ar","r":..} or {"type":"myerson","tie_break":"highest_value"|"lex"}.
Mechanism mechanism_from_json(const json& j, const std::vector<Marginal>& marginals);

/// One row per cell: v_1,...,v_n,mass with a header line.
void write_table_csv(std::ostream& out, const Table& table);
Table read_table_csv(std::istream& in);

json estimate_to_json(const RevenueEstimate& e);
json report_to_json(const BoundReport& r);
json solution_to_json(const WorstCaseSolution& s);

/// Writes rows with LF endings and 17-digit numbers.
void write_csv(std::ostream& out, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

json read_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace kwr
