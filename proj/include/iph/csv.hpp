#pragma once

#include <charconv>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "iph/errors.hpp"
#include "iph/regression.hpp"

namespace iph::csv {

/// Survival data file: header `time,status[,weight],covariate...`.
struct SurvivalTable {
  std::vector<std::string> covariates;
  bool has_weight = false;
  std::vector<RegObservation> rows;
};

inline std::vector<std::string> split(const std::string& line, char sep = ',') {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, sep)) {
    const auto a = cell.find_first_not_of(" \t\r");
    const auto b = cell.find_last_not_of(" \t\r");
    out.push_back(a == std::string::npos ? std::string() : cell.substr(a, b - a + 1));
  }
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

inline double parse_double(const std::string& s, std::size_t line, const std::string& column) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (!s.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || s.empty())
    throw ParseError("column '" + column + "': cannot parse '" + s + "' as a number", line);
  return v;
}

inline SurvivalTable read_survival(std::istream& in) {
  SurvivalTable table;
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    header = split(line);
    break;
  }
  if (header.empty()) throw InputError("survival CSV: empty input");
  if (header.size() < 2 || header[0] != "time" || header[1] != "status")
    throw ParseError("header must start with 'time,status'", lineno);
  std::size_t first_cov = 2;
  if (header.size() > 2 && header[2] == "weight") {
    table.has_weight = true;
    first_cov = 3;
  }
  table.covariates.assign(header.begin() + static_cast<std::ptrdiff_t>(first_cov), header.end());
  const auto d = static_cast<Eigen::Index>(table.covariates.size());

  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = split(line);
    if (cells.size() != header.size())
      throw ParseError("expected " + std::to_string(header.size()) + " fields, found " +
                           std::to_string(cells.size()),
                       lineno);
    RegObservation o;
    o.y = parse_double(cells[0], lineno, "time");
    const double status = parse_double(cells[1], lineno, "status");
    if (status != 0.0 && status != 1.0) throw ParseError("status must be 0 or 1", lineno);
    o.delta = static_cast<int>(status);
    if (!(o.y >= 0.0) || !std::isfinite(o.y)) throw ParseError("time must be finite and >= 0", lineno);
    if (table.has_weight) {
      o.weight = parse_double(cells[2], lineno, "weight");
      if (!(o.weight >= 0.0) || !std::isfinite(o.weight)) throw ParseError("weight must be >= 0", lineno);
    }
    o.x.resize(d);
    for (Eigen::Index j = 0; j < d; ++j)
      o.x(j) = parse_double(cells[first_cov + j], lineno, table.covariates[j]);
    table.rows.push_back(std::move(o));
  }
  if (table.rows.empty()) throw InputError("survival CSV: no data rows");
  return table;
}

inline SurvivalTable read_survival(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  return read_survival(in);
}

inline void write_survival(std::ostream& os, const SurvivalTable& table) {
  os << "time,status";
  if (table.has_weight) os << ",weight";
  for (const auto& c : table.covariates) os << ',' << c;
  os << '\n' << std::setprecision(17);
  for (const auto& o : table.rows) {
    os << o.y << ',' << o.delta;
    if (table.has_weight) os << ',' << o.weight;
    for (Eigen::Index j = 0; j < o.x.size(); ++j) os << ',' << o.x(j);
    os << '\n';
  }
}

/// Plain numeric table with a header line; values at 17 significant digits.
inline void write_table(std::ostream& os, const std::vector<std::string>& header,
                        const std::vector<std::vector<double>>& rows) {
  for (std::size_t j = 0; j < header.size(); ++j) os << (j ? "," : "") << header[j];
  os << '\n' << std::setprecision(17);
  for (const auto& r : rows) {
    for (std::size_t j = 0; j < r.size(); ++j) os << (j ? "," : "") << r[j];
    os << '\n';
  }
}

struct NumericTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  std::size_t column(const std::string& name) const {
    for (std::size_t j = 0; j < header.size(); ++j)
      if (header[j] == name) return j;
    throw InputError("missing column '" + name + "'");
  }
};

inline NumericTable read_table(std::istream& in) {
  NumericTable t;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (t.header.empty()) {
      t.header = split(line);
      continue;
    }
    const auto cells = split(line);
    if (cells.size() != t.header.size()) throw ParseError("wrong number of fields", lineno);
    std::vector<double> r;
    for (std::size_t j = 0; j < cells.size(); ++j) r.push_back(parse_double(cells[j], lineno, t.header[j]));
    t.rows.push_back(std::move(r));
  }
  if (t.header.empty()) throw InputError("CSV: empty input");
  return t;
}

inline NumericTable read_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  return read_table(in);
}

}  // namespace iph::csv
