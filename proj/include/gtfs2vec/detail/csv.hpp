#pragma once

// Delimited text with a header row (RFC 4180 quoting), as used by GTFS
// tables and by every stage file this library writes.

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gtfs2vec/error.hpp"

namespace gtfs2vec::detail {

inline std::string_view trim(std::string_view s) {
  constexpr std::string_view ws = " \t\r\n";
  auto const b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) {
    return {};
  }
  auto const e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

struct csv_row {
  std::vector<std::string> fields;
  std::size_t line{};  // 1-based physical line where the record starts
};

class csv_reader {
public:
  csv_reader(std::string_view text, std::string table)
      : text_{text}, table_{std::move(table)} {
    if (text_.starts_with("\xEF\xBB\xBF")) {
      text_.remove_prefix(3);
    }
    csv_row h;
    if (!next_record(h)) {
      throw malformed_row(table_, 1, "missing header row");
    }
    for (auto& f : h.fields) {
      header_.emplace_back(trim(f));
    }
  }

  std::vector<std::string> const& header() const noexcept { return header_; }
  std::string const& table() const noexcept { return table_; }

  std::optional<std::size_t> column(std::string_view name) const {
    for (std::size_t i = 0; i < header_.size(); ++i) {
      if (header_[i] == name) {
        return i;
      }
    }
    return std::nullopt;
  }

  std::size_t required_column(std::string_view name) const {
    auto const c = column(name);
    if (!c) {
      throw malformed_row(table_, 1,
                          "missing column '" + std::string{name} + "'");
    }
    return *c;
  }

  // Reads the next non-blank record. Records with fewer fields than the
  // header are padded with empty strings; more fields is an error.
  bool next(csv_row& row) {
    while (next_record(row)) {
      if (row.fields.size() == 1 && trim(row.fields[0]).empty()) {
        continue;
      }
      if (row.fields.size() > header_.size()) {
        throw malformed_row(table_, row.line,
                            "expected " + std::to_string(header_.size()) +
                                " fields, found " +
                                std::to_string(row.fields.size()));
      }
      row.fields.resize(header_.size());
      return true;
    }
    return false;
  }

private:
  bool next_record(csv_row& row) {
    row.fields.clear();
    if (pos_ >= text_.size()) {
      return false;
    }
    row.line = line_;
    std::string field;
    bool quoted = false;
    bool field_was_quoted = false;
    while (pos_ < text_.size()) {
      char const c = text_[pos_++];
      if (quoted) {
        if (c == '"') {
          if (pos_ < text_.size() && text_[pos_] == '"') {
            field.push_back('"');
            ++pos_;
          } else {
            quoted = false;
          }
        } else {
          if (c == '\n') {
            ++line_;
          }
          field.push_back(c);
        }
        continue;
      }
      switch (c) {
        case '"':
          if (!field_was_quoted && trim(field).empty()) {
            field.clear();
            quoted = true;
            field_was_quoted = true;
          } else {
            field.push_back(c);
          }
          break;
        case ',':
          row.fields.push_back(std::move(field));
          field.clear();
          field_was_quoted = false;
          break;
        case '\r':
          break;
        case '\n':
          ++line_;
          row.fields.push_back(std::move(field));
          return true;
        default:
          field.push_back(c);
      }
    }
    if (quoted) {
      throw malformed_row(table_, row.line, "unterminated quoted field");
    }
    row.fields.push_back(std::move(field));
    return true;
  }

  std::string_view text_;
  std::string table_;
  std::vector<std::string> header_;
  std::size_t pos_{0};
  std::size_t line_{1};
};

inline void append_csv_field(std::string& out, std::string_view value) {
  if (value.find_first_of(",\"\r\n") == std::string_view::npos) {
    out += value;
    return;
  }
  out.push_back('"');
  for (char c : value) {
    if (c == '"') {
      out.push_back('"');
    }
    out.push_back(c);
  }
  out.push_back('"');
}

inline void append_csv_row(std::string& out,
                           std::vector<std::string> const& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i != 0) {
      out.push_back(',');
    }
    append_csv_field(out, fields[i]);
  }
  out.push_back('\n');
}

}  // namespace gtfs2vec::detail
