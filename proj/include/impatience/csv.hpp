#pragma once

// Plain CSV tables. Output files start with "# key: value" comment lines
// carrying provenance; readers skip any line starting with '#'. Fields are
// never quoted, so values must not contain the delimiter.

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "impatience/domain.hpp"

namespace impatience {

/// Shortest round-trip decimal form; "nan", "inf", "-inf" for non-finite values.
std::string format_double(double x);
/// Empty field for an undefined value.
std::string format_optional(const std::optional<double>& x);

class CsvWriter {
 public:
  CsvWriter(std::ostream& out, const Provenance& provenance, char delimiter = ',');

  /// Extra "# key: value" line; only valid before header().
  void comment(std::string_view key, std::string_view value);
  void header(const std::vector<std::string>& columns);
  void row(const std::vector<std::string>& fields);

 private:
  std::ostream& out_;
  char delimiter_;
  std::size_t n_columns_ = 0;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  /// 1-based source line of each row.
  std::vector<std::size_t> lines;
  /// "# key: value" lines, in file order.
  std::vector<std::pair<std::string, std::string>> comments;

  std::optional<std::string> comment(std::string_view key) const;

  /// Throws ParseError when the column is missing.
  std::size_t column(std::string_view name) const;
  std::optional<std::size_t> find_column(std::string_view name) const;
};

/// Without a header the columns are named "0", "1", ...
CsvTable read_csv(std::istream& in, char delimiter = ',', bool has_header = true);
CsvTable read_csv_file(const std::string& path, char delimiter = ',', bool has_header = true);

/// Throws ParseError(line) unless the whole field is a number.
double parse_double(std::string_view field, std::size_t line);
long long parse_int(std::string_view field, std::size_t line);

}  // namespace impatience
