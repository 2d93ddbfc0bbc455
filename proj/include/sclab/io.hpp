#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace sclab::io {

// Missing or unopenable file.
struct FileError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed CSV or config content.
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Write-then-rename so partially written artifacts are never observed.
void atomic_write_file(const std::filesystem::path& path, const std::string& content);

// Deterministic float formatting used by every CSV/JSON artifact.
std::string format_double(double v);

struct Table {
  std::vector<std::string> columns;
  std::vector<Eigen::VectorXd> data;  // one vector per column

  bool has_column(const std::string& name) const;
  const Eigen::VectorXd& column(const std::string& name) const;
  Eigen::Index rows() const { return data.empty() ? 0 : data.front().size(); }
};

// Comma-separated, one header row, '#' lines ignored. Throws
// std::runtime_error naming the offending line on malformed input.
Table read_csv(const std::filesystem::path& path);

std::string to_csv(const Table& t);

}  // namespace sclab::io
