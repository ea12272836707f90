#include "tripmine/csv.hpp"

#include "tripmine/error.hpp"

namespace tripmine {

std::optional<std::vector<std::string>> CsvReader::next() {
  std::string line;
  // Skip blank lines between records.
  do {
    if (!std::getline(in_, line)) return std::nullopt;
    ++physical_line_;
    if (physical_line_ == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (!line.empty() && line.back() == '\r') line.pop_back();
  } while (line.empty());
  record_line_ = physical_line_;

  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  bool field_was_quoted = false;
  std::size_t i = 0;
  while (true) {
    if (i >= line.size()) {
      if (!quoted) break;
      std::string more;
      if (!std::getline(in_, more)) {
        throw Error(ErrorCode::ParseError, "unterminated quoted field",
                    "line " + std::to_string(record_line_));
      }
      ++physical_line_;
      if (!more.empty() && more.back() == '\r') more.pop_back();
      field.push_back('\n');
      line = std::move(more);
      i = 0;
      continue;
    }
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"' && !field_was_quoted && field.empty()) {
      quoted = true;
      field_was_quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
      field_was_quoted = false;
    } else {
      field.push_back(c);
    }
    ++i;
  }
  fields.push_back(std::move(field));
  return fields;
}

CsvHeader::CsvHeader(const std::vector<std::string>& names) {
  for (std::size_t i = 0; i < names.size(); ++i) {
    std::string name = names[i];
    while (!name.empty() && (name.back() == ' ' || name.back() == '\t')) name.pop_back();
    while (!name.empty() && (name.front() == ' ' || name.front() == '\t')) name.erase(0, 1);
    index_.emplace(std::move(name), i);
  }
}

std::optional<std::size_t> CsvHeader::find(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace tripmine
