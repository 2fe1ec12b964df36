#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

namespace aknet {

struct ResultRow {
  std::string experiment;
  std::string panel;   // scaling | ratio | jump
  std::string filter;  // KF | adaptive-KF | AKNet
  double q2 = 0.0;
  double r2 = 0.0;
  double sow = 0.0;
  std::string sow_source;  // oracle | corr | grid
  double mse_db = 0.0;
  double std_db = 0.0;
  std::size_t count = 0;
  std::vector<double> per_trajectory;  // raw errors, not written to results.csv
};

struct ResultTable {
  std::vector<ResultRow> rows;

  // Throws ContractViolation unless every MSE is finite and every std >= 0.
  void validate() const;
  const ResultRow* find(const std::string& panel, const std::string& filter,
                        const std::string& sow_source, double q2, double r2) const;
};

// results.csv: experiment,panel,filter,q2,r2,sow,sow_source,mse_db,std_db,n
void write_results_csv(const std::filesystem::path& path, const ResultTable& table);
ResultTable read_results_csv(const std::filesystem::path& path);

// errors.csv: experiment,panel,filter,q2,r2,sow_source,trajectory,mse
void write_errors_csv(const std::filesystem::path& path, const ResultTable& table);

// Recomputes 10 log10(mean) from the raw per-trajectory errors of a row.
double reaggregate_db(const ResultRow& row);

std::string format_table(const ResultTable& table);

}  // namespace aknet
