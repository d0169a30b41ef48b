#include "covfunc/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace covfunc::csv {

std::vector<Row> read(std::istream& in) {
  std::vector<Row> rows;
  Row row;
  std::string field;
  bool quoted = false, any = false;
  char c;
  auto end_field = [&] {
    row.push_back(std::move(field));
    field.clear();
  };
  auto end_row = [&] {
    end_field();
    if (!(row.size() == 1 && row[0].empty())) rows.push_back(std::move(row));
    row.clear();
  };
  while (in.get(c)) {
    any = true;
    if (quoted) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          field += '"';
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      end_field();
    } else if (c == '\n') {
      end_row();
    } else if (c != '\r') {
      field += c;
    }
  }
  if (quoted) throw ConfigError("csv: unterminated quoted field");
  if (any && (!field.empty() || !row.empty())) end_row();
  return rows;
}

std::vector<Row> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  return read(in);
}

std::string escape(const std::string& f) {
  if (f.find_first_of(",\"\r\n") == std::string::npos) return f;
  std::string out = "\"";
  for (char c : f) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

void write_row(std::ostream& out, const Row& row) {
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i) out << ',';
    out << escape(row[i]);
  }
  out << '\n';
}

std::string fmt(double v) {
  if (std::isnan(v)) return "NaN";
  if (std::isinf(v)) return v > 0 ? "Inf" : "-Inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& raw, bool allow_missing) {
  std::size_t b = raw.find_first_not_of(" \t");
  std::size_t e = raw.find_last_not_of(" \t");
  const std::string s = b == std::string::npos ? "" : raw.substr(b, e - b + 1);
  if (s.empty() || s == "NA" || s == "NaN" || s == "nan") {
    if (allow_missing) return std::numeric_limits<double>::quiet_NaN();
    throw ConfigError("csv: missing numeric value");
  }
  double v = 0.0;
  const char* first = s.data() + (s[0] == '+' ? 1 : 0);
  const auto res = std::from_chars(first, s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ConfigError("csv: not a number: '" + s + "'");
  return v;
}

namespace {

bool numeric_row(const Row& r) {
  for (const auto& f : r) {
    try {
      parse_double(f);
    } catch (const ConfigError&) {
      return false;
    }
  }
  return true;
}

}  // namespace

Matrix read_matrix(const std::string& path, std::vector<std::string>* header) {
  auto rows = read_file(path);
  std::size_t start = 0;
  if (!rows.empty() && !numeric_row(rows[0])) {
    if (header) *header = rows[0];
    start = 1;
  }
  require(rows.size() > start, "csv: '" + path + "' has no data rows");
  const std::size_t cols = rows[start].size();
  Matrix m(static_cast<Eigen::Index>(rows.size() - start), static_cast<Eigen::Index>(cols));
  for (std::size_t i = start; i < rows.size(); ++i) {
    require(rows[i].size() == cols, "csv: '" + path + "' row " + std::to_string(i + 1) + " has " +
                                        std::to_string(rows[i].size()) + " fields, expected " +
                                        std::to_string(cols));
    for (std::size_t j = 0; j < cols; ++j)
      m(static_cast<Eigen::Index>(i - start), static_cast<Eigen::Index>(j)) = parse_double(rows[i][j]);
  }
  return m;
}

void write_matrix(std::ostream& out, const Matrix& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Row r;
    for (Eigen::Index j = 0; j < m.cols(); ++j) r.push_back(fmt(m(i, j)));
    write_row(out, r);
  }
}

LabeledColumns read_labeled(const std::string& path) {
  auto rows = read_file(path);
  require(rows.size() >= 2, "csv: '" + path + "' needs a header and at least one data row");
  LabeledColumns out;
  out.names.assign(rows[0].begin() + 1, rows[0].end());
  const std::size_t cols = out.names.size();
  out.values.resize(static_cast<Eigen::Index>(rows.size() - 1), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 1; i < rows.size(); ++i) {
    require(rows[i].size() == cols + 1, "csv: '" + path + "' row " + std::to_string(i + 1) + " has the wrong width");
    out.labels.push_back(rows[i][0]);
    for (std::size_t j = 0; j < cols; ++j)
      out.values(static_cast<Eigen::Index>(i - 1), static_cast<Eigen::Index>(j)) = parse_double(rows[i][j + 1], true);
  }
  return out;
}

}  // namespace covfunc::csv
