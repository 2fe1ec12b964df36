#include "aknet/harness/results.hpp"

#include "aknet/errors.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

namespace aknet {

namespace {

bool same(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(b)); }

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

void ResultTable::validate() const {
  for (const auto& r : rows) {
    if (!std::isfinite(r.mse_db)) {
      throw ContractViolation("result row " + r.filter + " has non-finite MSE");
    }
    if (!(r.std_db >= 0.0)) throw ContractViolation("result row " + r.filter + " has negative std");
  }
}

const ResultRow* ResultTable::find(const std::string& panel, const std::string& filter,
                                   const std::string& sow_source, double q2, double r2) const {
  for (const auto& r : rows) {
    if (r.panel == panel && r.filter == filter && r.sow_source == sow_source && same(r.q2, q2) &&
        same(r.r2, r2)) {
      return &r;
    }
  }
  return nullptr;
}

void write_results_csv(const std::filesystem::path& path, const ResultTable& table) {
  std::ofstream os(path);
  if (!os) throw FormatError("cannot write " + path.string());
  os << "experiment,panel,filter,q2,r2,sow,sow_source,mse_db,std_db,n\n";
  os << std::setprecision(17);
  for (const auto& r : table.rows) {
    os << r.experiment << ',' << r.panel << ',' << r.filter << ',' << r.q2 << ',' << r.r2 << ','
       << r.sow << ',' << r.sow_source << ',' << r.mse_db << ',' << r.std_db << ',' << r.count
       << '\n';
  }
}

ResultTable read_results_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw FormatError("cannot read " + path.string());
  std::string line;
  if (!std::getline(is, line) || line.rfind("experiment,panel,filter", 0) != 0) {
    throw FormatError(path.string() + " is not a results table");
  }
  ResultTable table;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto c = split_csv(line);
    if (c.size() != 10) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": expected 10 columns");
    }
    try {
      ResultRow r;
      r.experiment = c[0];
      r.panel = c[1];
      r.filter = c[2];
      r.q2 = std::stod(c[3]);
      r.r2 = std::stod(c[4]);
      r.sow = std::stod(c[5]);
      r.sow_source = c[6];
      r.mse_db = std::stod(c[7]);
      r.std_db = std::stod(c[8]);
      r.count = std::stoul(c[9]);
      table.rows.push_back(std::move(r));
    } catch (const std::logic_error&) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": malformed number");
    }
  }
  return table;
}

void write_errors_csv(const std::filesystem::path& path, const ResultTable& table) {
  std::ofstream os(path);
  if (!os) throw FormatError("cannot write " + path.string());
  os << "experiment,panel,filter,q2,r2,sow_source,trajectory,mse\n";
  os << std::setprecision(17);
  for (const auto& r : table.rows) {
    for (std::size_t i = 0; i < r.per_trajectory.size(); ++i) {
      os << r.experiment << ',' << r.panel << ',' << r.filter << ',' << r.q2 << ',' << r.r2
         << ',' << r.sow_source << ',' << i << ',' << r.per_trajectory[i] << '\n';
    }
  }
}

double reaggregate_db(const ResultRow& row) {
  if (row.per_trajectory.empty()) throw ContractViolation("row has no per-trajectory errors");
  const double mean = std::accumulate(row.per_trajectory.begin(), row.per_trajectory.end(), 0.0) /
                      static_cast<double>(row.per_trajectory.size());
  return 10.0 * std::log10(mean);
}

std::string format_table(const ResultTable& table) {
  std::ostringstream os;
  os << std::left << std::setw(8) << "panel" << std::setw(12) << "filter" << std::setw(8)
     << "source" << std::right << std::setw(10) << "q2" << std::setw(10) << "r2" << std::setw(10)
     << "sow" << std::setw(10) << "MSE[dB]" << std::setw(8) << "std" << std::setw(6) << "n"
     << '\n';
  for (const auto& r : table.rows) {
    os << std::left << std::setw(8) << r.panel << std::setw(12) << r.filter << std::setw(8)
       << r.sow_source << std::right << std::setprecision(4) << std::setw(10) << r.q2
       << std::setw(10) << r.r2 << std::setw(10) << r.sow << std::fixed << std::setprecision(3)
       << std::setw(10) << r.mse_db << std::setw(8) << std::setprecision(2) << r.std_db
       << std::setw(6) << r.count << std::defaultfloat << '\n';
  }
  return os.str();
}

}  // namespace aknet
