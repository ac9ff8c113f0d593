#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "gsphar/types.hpp"

namespace gsphar::csv {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;  // 1-based source line of each row
};

std::vector<std::string> split_line(std::string_view line);

/// Reads a comma-separated file with a header row. Blank lines are skipped.
Table read(const std::string& path);

double parse_double(const std::string& field, const std::string& context);

/// 17 significant digits: round-trips every double exactly.
std::string format_machine(double value);

/// Three decimals, the presentation used in the human-readable tables.
std::string format_human(double value);

void write_text(const std::string& path, const std::string& contents);

std::string matrix_with_labels(const Matrix& values, const std::vector<std::string>& labels);

}  // namespace gsphar::csv
