#pragma once

// CSV output with full-precision numbers: every double is written in its
// shortest round-trip decimal form, so reading a file back reproduces the
// in-memory values exactly.

#include <iosfwd>
#include <string>
#include <vector>

namespace einode {

/// Shortest decimal that parses back to the same double; "nan", "inf", "-inf" otherwise.
std::string format_number(double v);
/// Inverse of format_number (also accepts any decimal or exponent form).
double parse_number(const std::string& text);

/// Joins the fields with commas; fields containing ',' or '"' are quoted.
void write_csv_row(std::ostream& out, const std::vector<std::string>& fields);

struct NumericTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  /// Column index by name; throws Error when absent.
  std::size_t column(const std::string& name) const;
};

void write_csv(const std::string& path, const NumericTable& table);
/// Reads a header line plus numeric rows.
NumericTable read_csv(const std::string& path);

}  // namespace einode
