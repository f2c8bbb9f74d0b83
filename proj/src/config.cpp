#include "integamp/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "integamp/csv.hpp"
#include "integamp/error.hpp"

namespace integamp {
namespace {

struct UnitInfo {
  Dimension dim;
  double scale;
};

const std::map<std::string, UnitInfo, std::less<>>& unit_table() {
  static const std::map<std::string, UnitInfo, std::less<>> t = {
      {"V", {Dimension::Voltage, 1}},        {"mV", {Dimension::Voltage, 1e-3}},
      {"uV", {Dimension::Voltage, 1e-6}},    {"nV", {Dimension::Voltage, 1e-9}},
      {"A", {Dimension::Current, 1}},        {"mA", {Dimension::Current, 1e-3}},
      {"uA", {Dimension::Current, 1e-6}},    {"nA", {Dimension::Current, 1e-9}},
      {"pA", {Dimension::Current, 1e-12}},   {"F", {Dimension::Capacitance, 1}},
      {"nF", {Dimension::Capacitance, 1e-9}}, {"pF", {Dimension::Capacitance, 1e-12}},
      {"fF", {Dimension::Capacitance, 1e-15}}, {"s", {Dimension::Time, 1}},
      {"ms", {Dimension::Time, 1e-3}},       {"us", {Dimension::Time, 1e-6}},
      {"ns", {Dimension::Time, 1e-9}},       {"ps", {Dimension::Time, 1e-12}},
      {"ohm", {Dimension::Resistance, 1}},   {"kohm", {Dimension::Resistance, 1e3}},
      {"Mohm", {Dimension::Resistance, 1e6}}, {"Hz", {Dimension::Frequency, 1}},
      {"kHz", {Dimension::Frequency, 1e3}},  {"MHz", {Dimension::Frequency, 1e6}},
      {"J", {Dimension::Energy, 1}},         {"nJ", {Dimension::Energy, 1e-9}},
      {"pJ", {Dimension::Energy, 1e-12}},    {"fJ", {Dimension::Energy, 1e-15}},
      {"deg", {Dimension::Angle, 1}},        {"K", {Dimension::Temperature, 1}},
  };
  return t;
}

const char* dimension_name(Dimension d) {
  switch (d) {
    case Dimension::Voltage: return "voltage";
    case Dimension::Current: return "current";
    case Dimension::Capacitance: return "capacitance";
    case Dimension::Time: return "time";
    case Dimension::Resistance: return "resistance";
    case Dimension::Frequency: return "frequency";
    case Dimension::Energy: return "energy";
    case Dimension::Angle: return "angle";
    case Dimension::Temperature: return "temperature";
    case Dimension::Dimensionless: return "dimensionless";
    case Dimension::Count: return "count";
  }
  return "unknown";
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

enum class Bound { Any, NonNegative, Positive };

struct NumericKey {
  Dimension dim;
  Bound bound;
  std::function<void(RunConfig&, double)> set;
};

struct GateDrives {
  std::optional<double> input, cascode;
};

using Table = std::map<std::string, NumericKey, std::less<>>;

const Table& numeric_keys() {
  using D = Dimension;
  using B = Bound;
  static const Table t = {
      {"vdd", {D::Voltage, B::Positive, [](RunConfig& c, double v) { c.design.vdd = v; }}},
      {"itail", {D::Current, B::Positive, [](RunConfig& c, double v) { c.design.itail = v; }}},
      {"c_load", {D::Capacitance, B::Positive, [](RunConfig& c, double v) { c.design.c_load = v; }}},
      {"vanabar_low", {D::Voltage, B::NonNegative, [](RunConfig& c, double v) { c.design.vanabar_low = v; }}},
      {"v_onset", {D::Voltage, B::Positive, [](RunConfig& c, double v) { c.design.v_onset = v; }}},
      {"v_equil", {D::Voltage, B::Positive, [](RunConfig& c, double v) { c.design.v_equil = v; }}},
      {"r1", {D::Resistance, B::Positive, [](RunConfig& c, double v) { c.design.memristors.r1 = v; }}},
      {"r2", {D::Resistance, B::Positive, [](RunConfig& c, double v) { c.design.memristors.r2 = v; }}},
      {"vtrig", {D::Voltage, B::Positive, [](RunConfig& c, double v) { c.design.dlc.v_trigger = v; }}},
      {"dlc_energy", {D::Energy, B::NonNegative, [](RunConfig& c, double v) { c.design.dlc.conversion_energy = v; }}},
      {"input_n", {D::Dimensionless, B::Positive, [](RunConfig& c, double v) { c.design.input_pair.n = v; }}},
      {"input_va", {D::Voltage, B::Positive, [](RunConfig& c, double v) { c.design.input_pair.va = v; }}},
      {"input_vth", {D::Voltage, B::Any, [](RunConfig& c, double v) { c.design.input_pair.vth = v; }}},
      {"cascode_n", {D::Dimensionless, B::Positive, [](RunConfig& c, double v) { c.design.cascode.n = v; }}},
      {"cascode_va", {D::Voltage, B::Positive, [](RunConfig& c, double v) { c.design.cascode.va = v; }}},
      {"m", {D::Dimensionless, B::Positive, [](RunConfig& c, double v) {
               c.design.input_pair.m = c.design.cascode.m = c.design.tail.m = v;
             }}},
      {"vt", {D::Voltage, B::Positive, [](RunConfig& c, double v) {
                c.design.input_pair.vt = c.design.cascode.vt = c.design.tail.vt = v;
              }}},
      {"t_reset", {D::Time, B::NonNegative, [](RunConfig& c, double v) { c.schedule.t_reset = v; }}},
      {"t_integrate", {D::Time, B::Positive, [](RunConfig& c, double v) { c.schedule.t_integrate = v; }}},
      {"t_digitise", {D::Time, B::NonNegative, [](RunConfig& c, double v) { c.schedule.t_digitise = v; }}},
      {"t_off", {D::Time, B::NonNegative, [](RunConfig& c, double v) { c.schedule.t_off = v; }}},
      {"dt", {D::Time, B::Positive, [](RunConfig& c, double v) { c.exec.dt = v; }}},
      {"jobs", {D::Count, B::NonNegative, [](RunConfig& c, double v) { c.exec.jobs = static_cast<unsigned>(v); }}},
      {"seed", {D::Count, B::NonNegative, [](RunConfig& c, double v) { c.seed = static_cast<std::uint64_t>(v); }}},
      {"vin_b", {D::Voltage, B::Any, [](RunConfig& c, double v) { c.vin_b = v; }}},
      {"vcm", {D::Voltage, B::Any, [](RunConfig& c, double v) { c.vcm = c.bandwidth.vcm = v; }}},
      {"dvin", {D::Voltage, B::Any, [](RunConfig& c, double v) { c.dvin = c.input_range.dv = c.cmgd.dv = v; }}},
      {"gain_span", {D::Voltage, B::Positive, [](RunConfig& c, double v) { c.gain_span = v; }}},
      {"gain_step", {D::Voltage, B::Positive, [](RunConfig& c, double v) { c.gain_step = v; }}},
      {"sample_rate", {D::Frequency, B::Positive, [](RunConfig& c, double v) { c.sample_rate = v; }}},
      {"tone_amplitude", {D::Voltage, B::Positive, [](RunConfig& c, double v) { c.bandwidth.amplitude = v; }}},
      {"phase_step", {D::Angle, B::Positive, [](RunConfig& c, double v) { c.bandwidth.phase_step_deg = v; }}},
      {"bw_p", {D::Dimensionless, B::Positive, [](RunConfig& c, double v) { c.bw_p = v; }}},
      {"noise_gamma", {D::Dimensionless, B::Positive, [](RunConfig& c, double v) { c.noise.gamma = v; }}},
      {"noise_excess", {D::Dimensionless, B::Positive, [](RunConfig& c, double v) { c.noise_excess = v; }}},
      {"noise_fc", {D::Frequency, B::NonNegative, [](RunConfig& c, double v) { c.noise.fc = v; }}},
      {"noise_f_lo", {D::Frequency, B::Positive, [](RunConfig& c, double v) { c.noise.f_lo = v; }}},
      {"noise_f_hi", {D::Frequency, B::Positive, [](RunConfig& c, double v) { c.noise.f_hi = v; }}},
      {"noise_target_rms", {D::Voltage, B::Positive, [](RunConfig& c, double v) { c.noise_target_rms = v; }}},
      {"noise_points_per_decade", {D::Count, B::Positive, [](RunConfig& c, double v) { c.noise.points_per_decade = static_cast<int>(v); }}},
      {"temperature", {D::Temperature, B::Positive, [](RunConfig& c, double v) { c.noise.temperature = v; }}},
      {"rcomp", {D::Resistance, B::Positive, [](RunConfig& c, double v) { c.rcomp = v; }}},
      {"range_step", {D::Voltage, B::Positive, [](RunConfig& c, double v) { c.input_range.step = v; }}},
      {"precondition_cycles", {D::Count, B::NonNegative, [](RunConfig& c, double v) { c.input_range.precondition_cycles = static_cast<std::size_t>(v); }}},
      {"precondition_vcm", {D::Voltage, B::Any, [](RunConfig& c, double v) { c.input_range.precondition_vcm = v; }}},
      {"gain_window", {D::Dimensionless, B::Positive, [](RunConfig& c, double v) { c.input_range.window_db = c.cmgd.window_db = v; }}},
      {"cmgd_coarse_step", {D::Voltage, B::Positive, [](RunConfig& c, double v) { c.cmgd.coarse_step = v; }}},
      {"cmgd_fine_step", {D::Voltage, B::Positive, [](RunConfig& c, double v) { c.cmgd.fine_step = v; }}},
      {"cmgd_threshold", {D::Dimensionless, B::Any, [](RunConfig& c, double v) { c.cmgd.threshold_db = v; }}},
  };
  return t;
}

double parse_number(std::string_view text, int line, std::string_view& rest) {
  double v = 0;
  const char* b = text.data();
  const char* e = b + text.size();
  if (b != e && *b == '+') ++b;
  const auto [ptr, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || ptr == b) throw ConfigError(line, "expected a number in '" + std::string(text) + "'");
  if (!std::isfinite(v)) throw ConfigError(line, "value must be finite");
  rest = trim(std::string_view(ptr, static_cast<std::size_t>(e - ptr)));
  return v;
}

double parse_quantity_at(std::string_view text, Dimension dim, int line) {
  std::string_view unit;
  const double v = parse_number(trim(text), line, unit);
  if (dim == Dimension::Dimensionless || dim == Dimension::Count) {
    if (!unit.empty())
      throw ConfigError(line, "unit mismatch: " + std::string(dimension_name(dim)) +
                                  " value must not carry a unit ('" + std::string(unit) + "')");
    if (dim == Dimension::Count && (v < 0 || v != std::floor(v)))
      throw ConfigError(line, "expected a non-negative integer");
    return v;
  }
  if (unit.empty())
    throw ConfigError(line, std::string("missing unit for ") + dimension_name(dim) + " value");
  const auto it = unit_table().find(unit);
  if (it == unit_table().end()) throw ConfigError(line, "unknown unit '" + std::string(unit) + "'");
  if (it->second.dim != dim)
    throw ConfigError(line, "unit mismatch: expected " + std::string(dimension_name(dim)) + ", got '" +
                                std::string(unit) + "' (" + dimension_name(it->second.dim) + ")");
  return v * it->second.scale;
}

void check_bound(double v, Bound b, int line) {
  if (b == Bound::Positive && !(v > 0)) throw ConfigError(line, "value must be > 0");
  if (b == Bound::NonNegative && !(v >= 0)) throw ConfigError(line, "value must be >= 0");
}

}  // namespace

double parse_quantity(std::string_view text, Dimension dim) { return parse_quantity_at(text, dim, 0); }

RunConfig parse_config(std::string_view text) {
  RunConfig cfg;
  const double vds_in = cfg.design.input_pair.vds_min();
  GateDrives drives;
  drives.input = solve_gate_drive(cfg.design.input_pair, cfg.design.half_tail(), vds_in);
  drives.cascode =
      solve_gate_drive(cfg.design.cascode, cfg.design.half_tail(), cfg.design.cascode.vds_min());
  std::set<std::string, std::less<>> seen;

  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(line_no, "expected 'key = value'");
    const std::string_view key = trim(line.substr(0, eq));
    const std::string_view value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(line_no, "missing key");
    if (value.empty()) throw ConfigError(line_no, "missing value for '" + std::string(key) + "'");
    if (!seen.insert(std::string(key)).second)
      throw ConfigError(line_no, "duplicate key '" + std::string(key) + "'");

    if (key == "protocol") {
      cfg.protocol = std::string(value);
    } else if (key == "out") {
      cfg.out_dir = std::string(value);
    } else if (key == "cmgd_db") {
      if (value == "gain_over_slope")
        cfg.cmgd.convention = CmgdConvention::GainOverSlope;
      else if (value == "inverse_slope")
        cfg.cmgd.convention = CmgdConvention::InverseSlope;
      else
        throw ConfigError(line_no, "cmgd_db must be gain_over_slope or inverse_slope");
    } else if (key == "input_vgs" || key == "cascode_vgs") {
      const double v = parse_quantity_at(value, Dimension::Voltage, line_no);
      check_bound(v, Bound::Positive, line_no);
      (key == "input_vgs" ? drives.input : drives.cascode) = v;
    } else if (const auto it = numeric_keys().find(key); it != numeric_keys().end()) {
      const double v = parse_quantity_at(value, it->second.dim, line_no);
      check_bound(v, it->second.bound, line_no);
      it->second.set(cfg, v);
    } else {
      throw ConfigError(line_no, "unknown key '" + std::string(key) + "'");
    }
  }

  try {
    auto& d = cfg.design;
    d.input_pair = with_gate_drive(d.input_pair, d.half_tail(), *drives.input, d.input_pair.vds_min());
    d.cascode = with_gate_drive(d.cascode, d.half_tail(), *drives.cascode, d.cascode.vds_min());
    d.validate();
    cfg.schedule.validate();
    cfg.noise.validate();
    if (cfg.exec.dt > max_time_step(cfg.schedule))
      throw InvalidInput("dt must be <= t_integrate / 300");
    if (!(cfg.bw_p > 0 && cfg.bw_p <= 1)) throw InvalidInput("bw_p must lie in (0, 1]");
  } catch (const InvalidInput& e) {
    throw ConfigError(0, e.what());
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(0, "cannot read config file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string design_fingerprint(const RunConfig& cfg) {
  const auto& d = cfg.design;
  std::ostringstream os;
  auto dev = [&](const char* name, const TransistorParams& p) {
    os << name << ':' << (p.polarity == Polarity::PType ? 'p' : 'n') << ',' << format_number(p.is) << ','
       << format_number(p.n) << ',' << format_number(p.vth) << ',' << format_number(p.va) << ','
       << format_number(p.m) << ',' << format_number(p.vt) << ';';
  };
  os << "vdd=" << format_number(d.vdd) << ";itail=" << format_number(d.itail)
     << ";c=" << format_number(d.c_load) << ';';
  dev("in", d.input_pair);
  dev("cas", d.cascode);
  dev("tail", d.tail);
  os << "r1=" << format_number(d.memristors.r1) << ";r2=" << format_number(d.memristors.r2)
     << ";anabar=" << format_number(d.vanabar_low) << ";onset=" << format_number(d.v_onset)
     << ";equil=" << format_number(d.v_equil) << ";vtrig=" << format_number(d.dlc.v_trigger)
     << ";edlc=" << format_number(d.dlc.conversion_energy) << ";sched="
     << format_number(cfg.schedule.t_reset) << ',' << format_number(cfg.schedule.t_integrate) << ','
     << format_number(cfg.schedule.t_digitise) << ',' << format_number(cfg.schedule.t_off)
     << ";dt=" << format_number(cfg.exec.dt);
  return os.str();
}

}  // namespace integamp
