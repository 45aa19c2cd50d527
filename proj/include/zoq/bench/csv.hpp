#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace zoq::bench {

/// %.17g formatting; "nan", "inf", "-inf" for non-finite values.
std::string format_double(double v);

inline const std::vector<std::string> kTrajectoryColumns{
    "replication", "t", "q_t", "cum_queries", "eta_t", "f_value", "gap", "grad_norm2"};

inline const std::vector<std::string> kSummaryColumns{
    "combo", "budget", "cum_queries", "mean_f", "mean_gap", "stderr_gap", "replications"};

inline const std::vector<std::string> kFinalColumns{
    "combo",   "budget", "replication", "status",        "iterations",    "cum_queries",
    "raw_evals", "final_f", "final_gap", "final_grad_norm2", "avg_iterate_f", "avg_iterate_gap"};

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);
  void row(const std::vector<std::string>& cells);
  void close();

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  std::size_t columns_;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of a header column; throws ConfigError when absent.
  std::size_t column(const std::string& name) const;
};

/// Plain comma-separated reader (no quoting), as written by CsvWriter.
CsvTable read_csv(const std::filesystem::path& path);

}  // namespace zoq::bench
