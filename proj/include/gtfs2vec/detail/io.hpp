#pragma once

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "gtfs2vec/detail/csv.hpp"
#include "gtfs2vec/error.hpp"

namespace gtfs2vec::detail {

inline std::string read_file(std::filesystem::path const& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw error("cannot open " + path.string());
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return std::move(ss).str();
}

inline void write_file(std::filesystem::path const& path,
                       std::string_view content) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw error("cannot write " + path.string());
  }
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) {
    throw error("write failed: " + path.string());
  }
}

// Shortest representation that parses back to the same double.
inline std::string format_double(double v) {
  char buf[32];
  auto const [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

inline void append_double(std::string& out, double v) {
  char buf[32];
  auto const [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, end);
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') {
    s.remove_prefix(1);
  }
  auto const [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size() && !s.empty();
}

template <typename T>
T parse_number_or_throw(std::string_view s, std::string_view what) {
  T v{};
  if (!parse_number(s, v)) {
    throw format_error("invalid " + std::string{what} + ": '" +
                       std::string{s} + "'");
  }
  return v;
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto const p = s.find(sep, start);
    out.emplace_back(trim(s.substr(start, p - start)));
    if (p == std::string_view::npos) {
      break;
    }
    start = p + 1;
  }
  return out;
}

}  // namespace gtfs2vec::detail
