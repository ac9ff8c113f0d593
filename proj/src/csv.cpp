#include "gsphar/csv.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace gsphar::csv {

std::vector<std::string> split_line(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.emplace_back(line.substr(start));
      break;
    }
    fields.emplace_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  for (auto& f : fields) {
    const auto first = f.find_first_not_of(" \t");
    const auto last = f.find_last_not_of(" \t");
    f = first == std::string::npos ? std::string{} : f.substr(first, last - first + 1);
  }
  return fields;
}

Table read(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), "cannot open '" + path + "'");
  Table table;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto fields = split_line(line);
    if (!have_header) {
      table.header = std::move(fields);
      have_header = true;
      continue;
    }
    if (fields.size() != table.header.size()) {
      throw Error(path + ":" + std::to_string(line_no) + ": expected " +
                  std::to_string(table.header.size()) + " fields, found " +
                  std::to_string(fields.size()));
    }
    table.rows.push_back(std::move(fields));
    table.line_numbers.push_back(line_no);
  }
  require(have_header, path + ": missing header row");
  return table;
}

double parse_double(const std::string& field, const std::string& context) {
  if (field.empty()) throw Error(context + ": empty numeric field");
  char* end = nullptr;
  errno = 0;
  const double value = std::strtod(field.c_str(), &end);
  if (end != field.c_str() + field.size() || errno == ERANGE) {
    throw Error(context + ": cannot parse '" + field + "' as a number");
  }
  return value;
}

std::string format_machine(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

std::string format_human(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.3f", value);
  return buf;
}

void write_text(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), "cannot write '" + path + "'");
  out << contents;
  require(static_cast<bool>(out), "write failed for '" + path + "'");
}

std::string matrix_with_labels(const Matrix& values, const std::vector<std::string>& labels) {
  std::ostringstream os;
  for (const auto& l : labels) os << ',' << l;
  os << '\n';
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    os << labels[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < values.cols(); ++j) os << ',' << format_machine(values(i, j));
    os << '\n';
  }
  return os.str();
}

}  // namespace gsphar::csv
