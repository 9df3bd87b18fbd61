#include "impatience/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include "impatience/error.hpp"

namespace impatience {

namespace {

std::vector<std::string> split(std::string_view line, char delimiter) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(delimiter, start);
    if (pos == std::string_view::npos) {
      out.emplace_back(line.substr(start));
      return out;
    }
    out.emplace_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

}  // namespace

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

std::string format_optional(const std::optional<double>& x) { return x ? format_double(*x) : std::string(); }

CsvWriter::CsvWriter(std::ostream& out, const Provenance& provenance, char delimiter)
    : out_(out), delimiter_(delimiter) {
  out_ << "# tool: " << provenance.tool << '\n';
  out_ << "# config_hash: " << provenance.config_hash << '\n';
}

void CsvWriter::comment(std::string_view key, std::string_view value) {
  if (n_columns_ != 0) throw Error("csv comments must precede the header");
  out_ << "# " << key << ": " << value << '\n';
}

void CsvWriter::header(const std::vector<std::string>& columns) {
  n_columns_ = columns.size();
  row(columns);
}

void CsvWriter::row(const std::vector<std::string>& fields) {
  if (n_columns_ != 0 && fields.size() != n_columns_) throw Error("csv row width does not match the header");
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out_ << delimiter_;
    out_ << fields[i];
  }
  out_ << '\n';
}

std::optional<std::size_t> CsvTable::find_column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  return std::nullopt;
}

std::optional<std::string> CsvTable::comment(std::string_view key) const {
  for (const auto& [k, v] : comments) {
    if (k == key) return v;
  }
  return std::nullopt;
}

std::size_t CsvTable::column(std::string_view name) const {
  if (auto i = find_column(name)) return *i;
  throw ParseError(0, "missing column '" + std::string(name) + "'");
}

CsvTable read_csv(std::istream& in, char delimiter, bool has_header) {
  CsvTable t;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.front() == '#') {
      const auto colon = line.find(':');
      if (colon != std::string::npos) {
        auto key = line.substr(1, colon - 1);
        auto value = line.substr(colon + 1);
        key.erase(0, key.find_first_not_of(' '));
        value.erase(0, value.find_first_not_of(' '));
        t.comments.emplace_back(std::move(key), std::move(value));
      }
      continue;
    }
    auto fields = split(line, delimiter);
    if (!have_header) {
      have_header = true;
      if (has_header) {
        t.header = std::move(fields);
        continue;
      }
      for (std::size_t i = 0; i < fields.size(); ++i) t.header.push_back(std::to_string(i));
    }
    if (fields.size() != t.header.size()) {
      throw ParseError(line_no, "expected " + std::to_string(t.header.size()) + " fields, found " +
                                    std::to_string(fields.size()));
    }
    t.rows.push_back(std::move(fields));
    t.lines.push_back(line_no);
  }
  if (!have_header && has_header) throw ParseError(0, "missing header row");
  return t;
}

CsvTable read_csv_file(const std::string& path, char delimiter, bool has_header) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  return read_csv(in, delimiter, has_header);
}

double parse_double(std::string_view field, std::size_t line) {
  double v = 0.0;
  const auto* end = field.data() + field.size();
  const auto res = std::from_chars(field.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end) throw ParseError(line, "not a number: '" + std::string(field) + "'");
  return v;
}

long long parse_int(std::string_view field, std::size_t line) {
  long long v = 0;
  const auto* end = field.data() + field.size();
  const auto res = std::from_chars(field.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end) {
    throw ParseError(line, "not an integer: '" + std::string(field) + "'");
  }
  return v;
}

}  // namespace impatience
