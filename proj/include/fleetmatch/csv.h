#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

namespace fleetmatch {

// Minimal comma-separated reader: no quoting, '#' comment lines and blank
// lines skipped, surrounding whitespace trimmed per field.
class CsvReader {
public:
  explicit CsvReader(const std::filesystem::path& path);

  // Reads the header row and checks its leading columns. Returns the full
  // header so callers can detect optional trailing columns.
  const std::vector<std::string>& expect_header(const std::vector<std::string>& required);

  std::optional<std::vector<std::string>> next();

  std::size_t line() const {
    return line_;
  }
  const std::string& source() const {
    return source_;
  }

  double parse_double(const std::vector<std::string>& row, std::size_t col) const;
  long long parse_int(const std::vector<std::string>& row, std::size_t col) const;
  const std::string& field(const std::vector<std::string>& row, std::size_t col) const;

private:
  std::ifstream in_;
  std::string source_;
  std::size_t line_ = 0;
  std::vector<std::string> header_;
};

} // namespace fleetmatch
