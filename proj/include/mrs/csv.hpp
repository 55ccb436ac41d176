#ifndef MRS_CSV_HPP
#define MRS_CSV_HPP

#include <string>
#include <string_view>
#include <vector>

namespace mrs {

// Comma-separated table with a header row. Lines starting with '#' and
// blank lines are skipped; fields are not quoted.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Index of a column, or -1.
  int column(std::string_view name) const;
  std::vector<double> numeric_column(std::string_view name) const;
};

CsvTable parse_csv(std::string_view text);
CsvTable read_csv(const std::string& path);

// Observation series: the `x` column, or the only column of a one-column file.
std::vector<double> read_series(const std::string& path);

std::vector<std::string> split_fields(std::string_view line);

}  // namespace mrs

#endif  // MRS_CSV_HPP
