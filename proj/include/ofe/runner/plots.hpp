#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace ofe {

/// A metrics CSV: the "# label=" line (if any) and numeric columns; empty
/// cells become NaN.
struct MetricsTable {
  std::filesystem::path path;
  std::string label;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  std::vector<double> column(const std::string& name) const;
};

MetricsTable read_metrics_csv(const std::filesystem::path& path);

/// One SVG per metric column (everything except env_step). Files are grouped
/// by label; each group draws its mean over files as a line with a +-1 std
/// band. Throws ConfigError listing the files whose env_step grid differs from
/// the first file. Returns the written paths.
std::vector<std::filesystem::path> emit_plots(const std::vector<std::filesystem::path>& csv_paths,
                                              const std::filesystem::path& out_dir);

}  // namespace ofe
