#pragma once

#include <array>
#include <cstdio>
#include <filesystem>
#include <string>
#include <string_view>

#include <openssl/evp.h>

#include "gtfs2vec/detail/io.hpp"
#include "gtfs2vec/error.hpp"

namespace gtfs2vec::detail {

// Lowercase hex SHA-256.
inline std::string sha256_hex(std::string_view data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md.data(), &len, EVP_sha256(),
                 nullptr) != 1) {
    throw error("SHA-256 computation failed");
  }
  std::string hex;
  hex.reserve(2 * len);
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof(buf), "%02x", md[i]);
    hex += buf;
  }
  return hex;
}

inline std::string file_sha256(std::filesystem::path const& path) {
  return sha256_hex(read_file(path));
}

}  // namespace gtfs2vec::detail
