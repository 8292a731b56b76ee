#pragma once

// RFC 4180 style CSV with LF line ends; fields are quoted only when needed.

#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace v2x {

std::string csv_escape(std::string_view field);
std::string csv_row(const std::vector<std::string>& fields);
// Splits records; handles quoted fields with embedded commas, quotes and
// newlines. Throws std::invalid_argument on an unterminated quote.
std::vector<std::vector<std::string>> csv_parse(std::string_view text);

// Shortest decimal form that reads back to the same double.
std::string format_double(double v);

class CsvWriter {
 public:
  CsvWriter(std::ostream& out, std::vector<std::string> header);
  void row(const std::vector<std::string>& fields);
  std::size_t columns() const { return columns_; }

 private:
  std::ostream& out_;
  std::size_t columns_;
};

}  // namespace v2x
