#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace integamp {

/// Shortest round-trippable-enough text for CSV output ("%.12g").
std::string format_number(double v);

using Metadata = std::vector<std::pair<std::string, std::string>>;

struct Series {
  std::string name;
  std::string unit;
  std::vector<double> values;

  std::string header() const { return unit.empty() ? name : name + "_" + unit; }
};

/// '#'-prefixed key=value lines.
void write_metadata(std::ostream& os, const Metadata& meta);

/// Metadata, one header row, then rows of equal-length columns.
void write_columns(std::ostream& os, const Metadata& meta, const std::vector<Series>& cols);

std::uint64_t fnv1a(std::string_view text);

std::string hex64(std::uint64_t v);

}  // namespace integamp
