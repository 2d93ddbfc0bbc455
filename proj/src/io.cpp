#include "sclab/io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace sclab::io {

void atomic_write_file(const std::filesystem::path& path, const std::string& content) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) {
    fs::create_directories(path.parent_path());
  }
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw FileError("cannot open for writing: " + tmp.string());
    }
    out << content;
    if (!out.good()) {
      throw FileError("write failed: " + tmp.string());
    }
  }
  fs::rename(tmp, path);
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

bool Table::has_column(const std::string& name) const {
  for (const auto& c : columns) {
    if (c == name) return true;
  }
  return false;
}

const Eigen::VectorXd& Table::column(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == name) return data[i];
  }
  throw ParseError("csv: missing column '" + name + "'");
}

Table read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw FileError("cannot open: " + path.string());
  }
  auto split = [](const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
  };

  std::string line;
  std::size_t lineno = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    header = split(line);
    break;
  }
  if (header.empty()) {
    throw ParseError("csv: no header in " + path.string());
  }

  Table t;
  t.columns = header;
  std::vector<std::vector<double>> cols(header.size());
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto cells = split(line);
    if (cells.size() != header.size()) {
      throw ParseError("csv: line " + std::to_string(lineno) + " of " +
                       path.string() + " has " + std::to_string(cells.size()) +
                       " fields, expected " + std::to_string(header.size()));
    }
    for (std::size_t i = 0; i < cells.size(); ++i) {
      char* end = nullptr;
      const std::string& cell = cells[i];
      const double v = cell.empty() ? std::nan("") : std::strtod(cell.c_str(), &end);
      if (!cell.empty() && (end == cell.c_str() || *end != '\0')) {
        throw ParseError("csv: line " + std::to_string(lineno) + " of " +
                         path.string() + ": cannot parse '" + cell + "'");
      }
      cols[i].push_back(v);
    }
  }
  for (auto& c : cols) {
    t.data.emplace_back(Eigen::Map<Eigen::VectorXd>(c.data(),
                                                    static_cast<Eigen::Index>(c.size())));
  }
  return t;
}

std::string to_csv(const Table& t) {
  std::string out;
  for (std::size_t i = 0; i < t.columns.size(); ++i) {
    if (i) out += ',';
    out += t.columns[i];
  }
  out += '\n';
  const Eigen::Index rows = t.rows();
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < t.columns.size(); ++c) {
      if (c) out += ',';
      out += format_double(t.data[c][r]);
    }
    out += '\n';
  }
  return out;
}

}  // namespace sclab::io
