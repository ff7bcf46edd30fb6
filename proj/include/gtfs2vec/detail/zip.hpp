#pragma once

// Minimal ZIP archive reader/writer on top of zlib. Supports the two
// compression methods GTFS publishers use (stored, deflate) and ZIP64
// size/offset records on the read side.

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <zlib.h>

#include "gtfs2vec/error.hpp"

namespace gtfs2vec::detail {

struct zip_entry {
  std::string name;
  std::uint16_t method{};
  std::uint32_t crc32{};
  std::uint64_t compressed_size{};
  std::uint64_t uncompressed_size{};
  std::uint64_t local_header_offset{};
};

namespace zip_format {

constexpr std::uint32_t local_header_sig = 0x04034b50;
constexpr std::uint32_t central_header_sig = 0x02014b50;
constexpr std::uint32_t eocd_sig = 0x06054b50;
constexpr std::uint32_t zip64_eocd_sig = 0x06064b50;
constexpr std::uint32_t zip64_locator_sig = 0x07064b50;
constexpr std::uint16_t method_stored = 0;
constexpr std::uint16_t method_deflate = 8;

inline std::uint64_t read_le(char const* p, int bytes) {
  std::uint64_t v = 0;
  for (int i = bytes - 1; i >= 0; --i) {
    v = (v << 8) | static_cast<unsigned char>(p[i]);
  }
  return v;
}

inline void write_le(std::string& out, std::uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) {
    out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
}

}  // namespace zip_format

class zip_reader {
public:
  explicit zip_reader(std::filesystem::path path) : path_{std::move(path)} {
    in_.open(path_, std::ios::binary);
    if (!in_) {
      throw error("cannot open archive: " + path_.string());
    }
    read_central_directory();
  }

  std::vector<zip_entry> const& entries() const noexcept { return entries_; }

  // Exact match first, then a unique match on the last path component
  // (some publishers wrap the tables in a top-level folder).
  zip_entry const* find(std::string_view name) const {
    for (auto const& e : entries_) {
      if (e.name == name) {
        return &e;
      }
    }
    zip_entry const* hit = nullptr;
    for (auto const& e : entries_) {
      auto const slash = e.name.find_last_of('/');
      auto const base = slash == std::string::npos
                            ? std::string_view{e.name}
                            : std::string_view{e.name}.substr(slash + 1);
      if (base == name) {
        if (hit != nullptr) {
          return nullptr;
        }
        hit = &e;
      }
    }
    return hit;
  }

  bool contains(std::string_view name) const { return find(name) != nullptr; }

  std::optional<std::string> read(std::string_view name) {
    auto const* e = find(name);
    if (e == nullptr) {
      return std::nullopt;
    }
    return extract(*e);
  }

  std::string extract(zip_entry const& e) {
    using namespace zip_format;
    char local[30];
    seek_read(e.local_header_offset, local, sizeof(local));
    if (read_le(local, 4) != local_header_sig) {
      throw error("corrupt local header for " + e.name);
    }
    auto const name_len = read_le(local + 26, 2);
    auto const extra_len = read_le(local + 28, 2);
    auto const data_offset = e.local_header_offset + 30 + name_len + extra_len;

    std::string compressed(e.compressed_size, '\0');
    seek_read(data_offset, compressed.data(), compressed.size());

    std::string out;
    if (e.method == method_stored) {
      out = std::move(compressed);
    } else if (e.method == method_deflate) {
      out = inflate_raw(compressed, e.uncompressed_size, e.name);
    } else {
      throw error("unsupported compression method " +
                  std::to_string(e.method) + " for " + e.name);
    }
    auto const crc = ::crc32_z(0L, reinterpret_cast<Bytef const*>(out.data()),
                               out.size());
    if (crc != e.crc32) {
      throw error("CRC mismatch in " + e.name);
    }
    return out;
  }

private:
  void seek_read(std::uint64_t offset, char* dst, std::size_t n) {
    in_.clear();
    in_.seekg(static_cast<std::streamoff>(offset));
    in_.read(dst, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) {
      throw error("truncated archive: " + path_.string());
    }
  }

  static std::string inflate_raw(std::string const& src, std::uint64_t size,
                                 std::string const& name) {
    std::string out(size, '\0');
    z_stream zs{};
    if (inflateInit2(&zs, -MAX_WBITS) != Z_OK) {
      throw error("zlib init failed");
    }
    zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(src.data()));
    zs.avail_in = static_cast<uInt>(src.size());
    std::uint64_t produced = 0;
    int rc = Z_OK;
    // avail_out is 32-bit; feed the output buffer in chunks.
    while (rc != Z_STREAM_END) {
      auto const chunk = std::min<std::uint64_t>(size - produced, 1u << 30);
      zs.next_out = reinterpret_cast<Bytef*>(out.data() + produced);
      zs.avail_out = static_cast<uInt>(chunk);
      rc = ::inflate(&zs, Z_NO_FLUSH);
      produced += chunk - zs.avail_out;
      if (rc != Z_OK && rc != Z_STREAM_END) {
        inflateEnd(&zs);
        throw error("corrupt deflate stream in " + name);
      }
      if (rc == Z_OK && chunk == 0) {
        inflateEnd(&zs);
        throw error("entry larger than declared size: " + name);
      }
    }
    inflateEnd(&zs);
    if (produced != size) {
      throw error("size mismatch in " + name);
    }
    return out;
  }

  void read_central_directory() {
    using namespace zip_format;
    in_.seekg(0, std::ios::end);
    auto const file_size = static_cast<std::uint64_t>(in_.tellg());
    if (file_size < 22) {
      throw error("not a zip archive: " + path_.string());
    }
    auto const tail_len = std::min<std::uint64_t>(file_size, 22 + 0xFFFF + 20);
    std::string tail(tail_len, '\0');
    seek_read(file_size - tail_len, tail.data(), tail.size());

    std::size_t eocd = std::string::npos;
    for (std::size_t i = tail.size() - 22 + 1; i-- > 0;) {
      if (read_le(tail.data() + i, 4) == eocd_sig) {
        eocd = i;
        break;
      }
    }
    if (eocd == std::string::npos) {
      throw error("not a zip archive: " + path_.string());
    }
    std::uint64_t count = read_le(tail.data() + eocd + 10, 2);
    std::uint64_t cd_size = read_le(tail.data() + eocd + 12, 4);
    std::uint64_t cd_offset = read_le(tail.data() + eocd + 16, 4);

    if (eocd >= 20 &&
        read_le(tail.data() + eocd - 20, 4) == zip64_locator_sig) {
      auto const z64_offset = read_le(tail.data() + eocd - 20 + 8, 8);
      char z64[56];
      seek_read(z64_offset, z64, sizeof(z64));
      if (read_le(z64, 4) != zip64_eocd_sig) {
        throw error("corrupt ZIP64 directory: " + path_.string());
      }
      count = read_le(z64 + 32, 8);
      cd_size = read_le(z64 + 40, 8);
      cd_offset = read_le(z64 + 48, 8);
    }

    std::string cd(cd_size, '\0');
    seek_read(cd_offset, cd.data(), cd.size());
    std::size_t p = 0;
    entries_.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
      if (p + 46 > cd.size() || read_le(cd.data() + p, 4) != central_header_sig) {
        throw error("corrupt central directory: " + path_.string());
      }
      char const* h = cd.data() + p;
      zip_entry e;
      e.method = static_cast<std::uint16_t>(read_le(h + 10, 2));
      e.crc32 = static_cast<std::uint32_t>(read_le(h + 16, 4));
      e.compressed_size = read_le(h + 20, 4);
      e.uncompressed_size = read_le(h + 24, 4);
      auto const name_len = read_le(h + 28, 2);
      auto const extra_len = read_le(h + 30, 2);
      auto const comment_len = read_le(h + 32, 2);
      e.local_header_offset = read_le(h + 42, 4);
      if (p + 46 + name_len + extra_len + comment_len > cd.size()) {
        throw error("corrupt central directory: " + path_.string());
      }
      e.name.assign(h + 46, name_len);
      parse_zip64_extra(std::string_view{h + 46 + name_len, extra_len}, e);
      p += 46 + name_len + extra_len + comment_len;
      if (!e.name.empty() && e.name.back() != '/') {
        entries_.push_back(std::move(e));
      }
    }
  }

  static void parse_zip64_extra(std::string_view extra, zip_entry& e) {
    using zip_format::read_le;
    constexpr std::uint64_t sentinel = 0xFFFFFFFFu;
    std::size_t p = 0;
    while (p + 4 <= extra.size()) {
      auto const id = read_le(extra.data() + p, 2);
      auto const len = read_le(extra.data() + p + 2, 2);
      if (id == 0x0001) {
        std::size_t q = p + 4;
        auto take = [&](std::uint64_t& field) {
          if (field == sentinel && q + 8 <= p + 4 + len) {
            field = read_le(extra.data() + q, 8);
            q += 8;
          }
        };
        take(e.uncompressed_size);
        take(e.compressed_size);
        take(e.local_header_offset);
      }
      p += 4 + len;
    }
  }

  std::filesystem::path path_;
  std::ifstream in_;
  std::vector<zip_entry> entries_;
};

// Builds an archive in memory. Timestamps are fixed so that identical
// content always yields identical bytes.
class zip_writer {
public:
  void add(std::string name, std::string_view data, bool deflate = true) {
    using namespace zip_format;
    if (data.size() >= 0xFFFFFFFFu) {
      throw error("zip_writer does not emit ZIP64 entries: " + name);
    }
    zip_entry e;
    e.name = std::move(name);
    e.crc32 = static_cast<std::uint32_t>(::crc32_z(
        0L, reinterpret_cast<Bytef const*>(data.data()), data.size()));
    e.uncompressed_size = data.size();
    e.local_header_offset = buffer_.size();

    std::string payload;
    if (deflate) {
      e.method = method_deflate;
      payload = deflate_raw(data);
    } else {
      e.method = method_stored;
      payload.assign(data);
    }
    e.compressed_size = payload.size();

    write_le(buffer_, local_header_sig, 4);
    write_le(buffer_, 20, 2);  // version needed
    write_le(buffer_, 0, 2);   // flags
    write_le(buffer_, e.method, 2);
    write_le(buffer_, dos_time, 2);
    write_le(buffer_, dos_date, 2);
    write_le(buffer_, e.crc32, 4);
    write_le(buffer_, e.compressed_size, 4);
    write_le(buffer_, e.uncompressed_size, 4);
    write_le(buffer_, e.name.size(), 2);
    write_le(buffer_, 0, 2);
    buffer_ += e.name;
    buffer_ += payload;
    entries_.push_back(std::move(e));
  }

  std::string finish() {
    using namespace zip_format;
    auto const cd_offset = buffer_.size();
    for (auto const& e : entries_) {
      write_le(buffer_, central_header_sig, 4);
      write_le(buffer_, 20, 2);  // version made by
      write_le(buffer_, 20, 2);  // version needed
      write_le(buffer_, 0, 2);
      write_le(buffer_, e.method, 2);
      write_le(buffer_, dos_time, 2);
      write_le(buffer_, dos_date, 2);
      write_le(buffer_, e.crc32, 4);
      write_le(buffer_, e.compressed_size, 4);
      write_le(buffer_, e.uncompressed_size, 4);
      write_le(buffer_, e.name.size(), 2);
      write_le(buffer_, 0, 2);  // extra
      write_le(buffer_, 0, 2);  // comment
      write_le(buffer_, 0, 2);  // disk
      write_le(buffer_, 0, 2);  // internal attrs
      write_le(buffer_, 0, 4);  // external attrs
      write_le(buffer_, e.local_header_offset, 4);
      buffer_ += e.name;
    }
    auto const cd_size = buffer_.size() - cd_offset;
    write_le(buffer_, eocd_sig, 4);
    write_le(buffer_, 0, 2);
    write_le(buffer_, 0, 2);
    write_le(buffer_, entries_.size(), 2);
    write_le(buffer_, entries_.size(), 2);
    write_le(buffer_, cd_size, 4);
    write_le(buffer_, cd_offset, 4);
    write_le(buffer_, 0, 2);
    entries_.clear();
    return std::exchange(buffer_, {});
  }

  void write_to(std::filesystem::path const& path) {
    auto const bytes = finish();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw error("cannot write archive: " + path.string());
    }
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  }

private:
  static constexpr std::uint16_t dos_time = 0;
  static constexpr std::uint16_t dos_date = (0 << 9) | (1 << 5) | 1;  // 1980-01-01

  static std::string deflate_raw(std::string_view data) {
    z_stream zs{};
    if (deflateInit2(&zs, Z_BEST_COMPRESSION, Z_DEFLATED, -MAX_WBITS, 8,
                     Z_DEFAULT_STRATEGY) != Z_OK) {
      throw error("zlib init failed");
    }
    std::string out(deflateBound(&zs, static_cast<uLong>(data.size())), '\0');
    zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(data.data()));
    zs.avail_in = static_cast<uInt>(data.size());
    zs.next_out = reinterpret_cast<Bytef*>(out.data());
    zs.avail_out = static_cast<uInt>(out.size());
    auto const rc = ::deflate(&zs, Z_FINISH);
    out.resize(zs.total_out);
    deflateEnd(&zs);
    if (rc != Z_STREAM_END) {
      throw error("deflate failed");
    }
    return out;
  }

  std::string buffer_;
  std::vector<zip_entry> entries_;
};

}  // namespace gtfs2vec::detail
