#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "integamp/core_analysis.hpp"
#include "integamp/metrology.hpp"
#include "integamp/transient.hpp"

namespace integamp {

enum class Dimension {
  Voltage,
  Current,
  Capacitance,
  Time,
  Resistance,
  Frequency,
  Energy,
  Angle,
  Temperature,
  Dimensionless,
  Count,
};

/// Parses "<number> <unit>" for a dimension, e.g. "3 uA" -> 3e-6. Throws ConfigError(0, ...).
double parse_quantity(std::string_view text, Dimension dim);

struct RunConfig {
  AmplifierDesign design;
  ClockSchedule schedule;
  ExecutionOptions exec{0.1e-9, 0};
  std::string protocol;  // optional; must match the subcommand when set
  std::string out_dir = "out";
  std::uint64_t seed = 0;  // reserved; all protocols are deterministic

  double vin_b = 1.1;
  double vcm = 1.1;
  double dvin = 50e-6;
  double gain_span = 100e-6;
  double gain_step = 5e-6;
  double sample_rate = 20e3;
  double bw_p = 0.2;
  BandwidthOptions bandwidth;
  NoiseParams noise;
  std::optional<double> noise_excess;  // calibrated to noise_target_rms when absent
  double noise_target_rms = 350e-6;
  double rcomp = 330e3;
  InputRangeOptions input_range;
  CmgdOptions cmgd;
};

/// key = value lines, '#' comments. Absent keys keep their defaults.
RunConfig parse_config(std::string_view text);

RunConfig load_config(const std::filesystem::path& path);

/// Canonical text of everything that determines simulation results.
std::string design_fingerprint(const RunConfig& cfg);

}  // namespace integamp
