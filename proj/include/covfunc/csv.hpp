#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "covfunc/types.hpp"

namespace covfunc::csv {

using Row = std::vector<std::string>;

/// RFC-4180 reader: quoted fields, doubled quotes, CRLF or LF line ends.
std::vector<Row> read(std::istream& in);
std::vector<Row> read_file(const std::string& path);

void write_row(std::ostream& out, const Row& row);
std::string escape(const std::string& field);

/// Shortest round-trip decimal representation with '.' separator.
std::string fmt(double v);

/// Strict decimal parse; empty, "NA" and "NaN" give NaN when allow_missing.
double parse_double(const std::string& s, bool allow_missing = false);

/// Numeric matrix; a first row containing any non-numeric field is a header.
Matrix read_matrix(const std::string& path, std::vector<std::string>* header = nullptr);
void write_matrix(std::ostream& out, const Matrix& m);

/// First column is a label (date), remaining columns numeric with a header row.
/// Missing cells become NaN.
struct LabeledColumns {
  std::vector<std::string> labels;
  std::vector<std::string> names;
  Matrix values;
};
LabeledColumns read_labeled(const std::string& path);

}  // namespace covfunc::csv
