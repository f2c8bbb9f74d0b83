#include "integamp/csv.hpp"

#include <cstdio>

#include "integamp/error.hpp"

namespace integamp {

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

void write_metadata(std::ostream& os, const Metadata& meta) {
  for (const auto& [k, v] : meta) os << "# " << k << '=' << v << '\n';
}

void write_columns(std::ostream& os, const Metadata& meta, const std::vector<Series>& cols) {
  write_metadata(os, meta);
  if (cols.empty()) return;
  const std::size_t n = cols.front().values.size();
  for (const auto& c : cols)
    if (c.values.size() != n) throw InvalidInput("column " + c.name + " has mismatched length");
  for (std::size_t j = 0; j < cols.size(); ++j) os << (j ? "," : "") << cols[j].header();
  os << '\n';
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < cols.size(); ++j)
      os << (j ? "," : "") << format_number(cols[j].values[i]);
    os << '\n';
  }
}

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace integamp
