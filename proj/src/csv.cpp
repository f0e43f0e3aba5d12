#include "fleetmatch/csv.h"

#include <charconv>
#include <cmath>

#include "fleetmatch/common.h"

namespace fleetmatch {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) {
    return {};
  }
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

} // namespace

CsvReader::CsvReader(const std::filesystem::path& path) : in_(path), source_(path.string()) {
  if (!in_) {
    throw Error("cannot open " + source_);
  }
}

std::optional<std::vector<std::string>> CsvReader::next() {
  std::string raw;
  while (std::getline(in_, raw)) {
    ++line_;
    const std::string t = trim(raw);
    if (t.empty() || t.front() == '#') {
      continue;
    }
    std::vector<std::string> row;
    std::size_t start = 0;
    while (true) {
      const auto comma = t.find(',', start);
      row.push_back(trim(t.substr(start, comma == std::string::npos ? std::string::npos
                                                                    : comma - start)));
      if (comma == std::string::npos) {
        break;
      }
      start = comma + 1;
    }
    return row;
  }
  return std::nullopt;
}

const std::vector<std::string>& CsvReader::expect_header(const std::vector<std::string>& required) {
  auto row = next();
  if (!row) {
    throw ParseError(source_, line_, "missing header");
  }
  for (std::size_t i = 0; i < required.size(); ++i) {
    if (i >= row->size() || (*row)[i] != required[i]) {
      throw ParseError(source_, line_, "expected column '" + required[i] + "'");
    }
  }
  header_ = std::move(*row);
  return header_;
}

const std::string& CsvReader::field(const std::vector<std::string>& row, std::size_t col) const {
  if (col >= row.size()) {
    throw ParseError(source_, line_, "missing column " + std::to_string(col + 1));
  }
  return row[col];
}

double CsvReader::parse_double(const std::vector<std::string>& row, std::size_t col) const {
  const std::string& f = field(row, col);
  try {
    std::size_t pos = 0;
    const double v = std::stod(f, &pos);
    if (pos == f.size() && std::isfinite(v)) {
      return v;
    }
  } catch (const std::exception&) {
  }
  throw ParseError(source_, line_, "not a number: '" + f + "'");
}

long long CsvReader::parse_int(const std::vector<std::string>& row, std::size_t col) const {
  const std::string& f = field(row, col);
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
  if (ec != std::errc{} || ptr != f.data() + f.size()) {
    throw ParseError(source_, line_, "not an integer: '" + f + "'");
  }
  return v;
}

} // namespace fleetmatch
