#ifndef CONVEYANCE_IO_HPP
#define CONVEYANCE_IO_HPP

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "conveyance/error.hpp"

namespace conveyance::io {

using json = nlohmann::json;
namespace fs = std::filesystem;

inline std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Hash of the canonical dump. nlohmann::json keeps object keys sorted, so
/// documents that differ only in key order hash equally.
inline std::string config_hash(const json& config) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(config.dump())));
  return buf;
}

inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.15g", v);
  return buf;
}

/// Writes via a sibling temporary file and a rename.
inline void write_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    require(static_cast<bool>(out), ErrorKind::invalid_argument, "cannot open " + tmp.string());
    out << content;
    out.flush();
    require(static_cast<bool>(out), ErrorKind::invalid_argument, "write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

/// CSV with a leading "# config_hash=..." comment and a header row.
class CsvTable {
 public:
  CsvTable(std::vector<std::string> columns, std::string hash)
      : columns_(std::move(columns)), hash_(std::move(hash)) {
    require(!columns_.empty(), ErrorKind::invalid_argument, "CSV needs at least one column");
  }

  void add_row(std::vector<std::string> cells) {
    require(cells.size() == columns_.size(), ErrorKind::dimension,
            "CSV row has " + std::to_string(cells.size()) + " cells, expected " +
                std::to_string(columns_.size()));
    rows_.push_back(std::move(cells));
  }

  void add_row(std::initializer_list<double> values) {
    std::vector<std::string> cells;
    for (double v : values) cells.push_back(format_number(v));
    add_row(std::move(cells));
  }

  void add_numbers(const std::vector<double>& values) {
    std::vector<std::string> cells;
    for (double v : values) cells.push_back(format_number(v));
    add_row(std::move(cells));
  }

  std::size_t size() const noexcept { return rows_.size(); }
  const std::vector<std::string>& columns() const noexcept { return columns_; }

  std::string str() const {
    std::ostringstream os;
    os << "# config_hash=" << hash_ << '\n';
    write_line(os, columns_);
    for (const auto& r : rows_) write_line(os, r);
    return os.str();
  }

  void save(const fs::path& path) const { write_atomic(path, str()); }

 private:
  static void write_line(std::ostringstream& os, const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) os << ',';
      os << cells[i];
    }
    os << '\n';
  }

  std::vector<std::string> columns_;
  std::string hash_;
  std::vector<std::vector<std::string>> rows_;
};

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct RunManifest {
  std::string command;
  std::string config_hash;
  std::string tool_version;
  std::string started;
  std::string finished;
  unsigned workers = 1;
  std::vector<std::string> outputs;

  json to_json() const {
    return json{{"command", command},   {"config_hash", config_hash}, {"tool_version", tool_version},
                {"started", started},   {"finished", finished},       {"workers", workers},
                {"outputs", outputs}};
  }

  void save(const fs::path& dir) const { write_atomic(dir / "manifest.json", to_json().dump(2) + "\n"); }
};

}  // namespace conveyance::io

#endif  // CONVEYANCE_IO_HPP
