#pragma once

#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace tripmine {

/// RFC 4180 reader: quoted fields, doubled quotes, CRLF, quoted newlines, and
/// a leading UTF-8 BOM on the first line.
class CsvReader {
 public:
  explicit CsvReader(std::istream& in) : in_(in) {}

  /// Next record, or nullopt at end of input. Throws ErrorCode::ParseError on
  /// an unterminated quoted field.
  std::optional<std::vector<std::string>> next();

  /// Physical line on which the most recently returned record started.
  std::size_t line() const noexcept { return record_line_; }

 private:
  std::istream& in_;
  std::size_t physical_line_ = 0;
  std::size_t record_line_ = 0;
};

/// Header-driven column lookup for a CSV file.
class CsvHeader {
 public:
  explicit CsvHeader(const std::vector<std::string>& names);

  std::optional<std::size_t> find(std::string_view name) const;
  bool has(std::string_view name) const { return find(name).has_value(); }

 private:
  std::unordered_map<std::string, std::size_t> index_;
};

/// Quotes a field when it contains a comma, quote or line break.
std::string csv_escape(std::string_view field);

}  // namespace tripmine
