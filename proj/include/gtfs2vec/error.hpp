#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace gtfs2vec {

// Base of every error raised by the library. Catch this to handle any
// pipeline failure; catch a derived type to react to a specific one.
struct error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// --- gtfs_ingest ---

struct missing_file : error {
  explicit missing_file(std::string const& table)
      : error("required GTFS table missing: " + table), table_{table} {}
  std::string const& table() const noexcept { return table_; }

private:
  std::string table_;
};

struct malformed_row : error {
  malformed_row(std::string const& table, std::size_t line,
                std::string const& what)
      : error(table + ":" + std::to_string(line) + ": " + what),
        table_{table},
        line_{line} {}
  std::string const& table() const noexcept { return table_; }
  std::size_t line() const noexcept { return line_; }

private:
  std::string table_;
  std::size_t line_;
};

struct dangling_reference : error {
  using error::error;
};

struct empty_service_day : error {
  using error::error;
};

// --- regionizer ---

struct invalid_coordinate : error {
  using error::error;
};

struct invalid_cell : error {
  using error::error;
};

// --- normalizer / autoencoder / clustering ---

struct empty_matrix : error {
  using error::error;
};

struct shape_mismatch : error {
  using error::error;
};

struct non_finite_loss : error {
  using error::error;
};

struct degenerate_input : error {
  using error::error;
};

struct invalid_k : error {
  using error::error;
};

// --- similarity ---

struct unknown_region : error {
  using error::error;
};

struct empty_candidate_set : error {
  using error::error;
};

struct unknown_cluster : error {
  using error::error;
};

// --- file formats / configuration ---

struct format_error : error {
  using error::error;
};

struct config_error : error {
  using error::error;
};

// Wraps a failure inside a pipeline stage. `city` is empty for stages that
// work on all cities at once.
struct stage_error : error {
  stage_error(std::string stage, std::string city, std::string const& what)
      : error("stage '" + stage + "'" +
              (city.empty() ? std::string{} : " (city '" + city + "')") +
              ": " + what),
        stage_{std::move(stage)},
        city_{std::move(city)} {}

  std::string const& stage() const noexcept { return stage_; }
  std::string const& city() const noexcept { return city_; }

private:
  std::string stage_;
  std::string city_;
};

}  // namespace gtfs2vec
