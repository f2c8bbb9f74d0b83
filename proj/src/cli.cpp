#include "integamp/cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "integamp/csv.hpp"
#include "integamp/error.hpp"

namespace integamp {
namespace {

namespace fs = std::filesystem;

std::string strf(const char* fmt, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, fmt);
  std::vsnprintf(buf, sizeof buf, fmt, ap);
  va_end(ap);
  return buf;
}

class OutputSet {
 public:
  explicit OutputSet(fs::path dir) : dir_(std::move(dir)) {}

  void write(const std::string& name, const std::string& content) {
    fs::create_directories(dir_);
    const fs::path p = dir_ / name;
    files_.push_back(p);
    std::ofstream f(p, std::ios::binary | std::ios::trunc);
    f << content;
    if (!f) throw ProtocolError("cannot write " + p.string());
  }

  void remove_all() noexcept {
    std::error_code ec;
    for (const auto& p : files_) fs::remove(p, ec);
    files_.clear();
  }

 private:
  fs::path dir_;
  std::vector<fs::path> files_;
};

Metadata base_metadata(const RunConfig& cfg, const std::string& protocol) {
  const auto& d = cfg.design;
  const auto& s = cfg.schedule;
  return {
      {"protocol", protocol},
      {"design_hash", hex64(fnv1a(design_fingerprint(cfg)))},
      {"schedule_s", "reset=" + format_number(s.t_reset) + ";integrate=" + format_number(s.t_integrate) +
                         ";digitise=" + format_number(s.t_digitise) + ";off=" + format_number(s.t_off)},
      {"dt_s", format_number(cfg.exec.dt)},
      {"vdd_V", format_number(d.vdd)},
      {"itail_A", format_number(d.itail)},
      {"c_load_F", format_number(d.c_load)},
      {"r1_ohm", format_number(d.memristors.r1)},
      {"r2_ohm", format_number(d.memristors.r2)},
      {"cal_input_n", format_number(d.input_pair.n)},
      {"cal_cascode_va_V", format_number(d.cascode.va)},
      {"cal_ro_cascode_ohm", format_number(cascode_operating_point(d).ro)},
      {"cal_v_onset_V", format_number(d.v_onset)},
      {"cal_v_equil_V", format_number(d.v_equil)},
      {"cal_dlc_energy_J", format_number(d.dlc.conversion_energy)},
      {"threshold_vtrig_V", format_number(d.dlc.v_trigger)},
  };
}

Metadata merged(Metadata base, const Metadata& extra) {
  for (const auto& kv : extra)
    if (kv.first != "protocol") base.push_back(kv);
  return base;
}

std::string sweep_csv(const RunConfig& cfg, const SweepResult& r) {
  std::ostringstream os;
  write_columns(os, merged(base_metadata(cfg, r.protocol), r.metadata), r.columns());
  return os.str();
}

std::string interval_text(const std::optional<Interval>& iv) {
  return iv ? strf("[%.3f, %.3f] V", iv->first, iv->second) : std::string("none");
}

using Runner = std::function<void(const RunConfig&, OutputSet&, std::ostream&)>;

void run_simulate(const RunConfig& cfg, OutputSet& files, std::ostream& out) {
  const Waveform w = dc_pair(cfg.vcm, cfg.dvin);
  const auto r = run_cycle(cfg.design, cfg.schedule, w, cfg.exec.dt);
  std::ostringstream os;
  auto meta = base_metadata(cfg, "simulate");
  meta.push_back({"stimulus", w.descriptor()});
  write_metadata(os, meta);
  write_trace_csv(os, r.trace);
  files.write("trace.csv", os.str());
  out << strf("simulate: %s\n", w.descriptor().c_str());
  out << strf("  decision at t=%.1f ns: Vmida=%.6f V Vmidb=%.6f V dVmid=%.4f mV\n",
              r.record.decision_time * 1e9, r.record.vmida, r.record.vmidb,
              (r.record.vmida - r.record.vmidb) * 1e3);
  out << strf("  triggered=%d outa=%d outb=%d\n", r.record.triggered, r.record.outa, r.record.outb);
}

void run_gain(const RunConfig& cfg, OutputSet& files, std::ostream& out) {
  std::vector<double> grid;
  const auto n = static_cast<std::size_t>(std::llround(2.0 * cfg.gain_span / cfg.gain_step));
  for (std::size_t i = 0; i <= n; ++i) grid.push_back(-cfg.gain_span + static_cast<double>(i) * cfg.gain_step);
  const auto g = measure_gain(cfg.design, cfg.schedule, grid, cfg.vin_b, cfg.exec);
  files.write("gain.csv", sweep_csv(cfg, g.sweep));
  const double closed = closed_form_gain(cfg.design, cfg.schedule.t_integrate).transconductance;
  out << strf("gain: G=%.3f V/V (%.2f dB) R2=%.6f MSE=%.3g mV^2 intercept=%.3g uV\n", g.gain,
              20.0 * std::log10(g.gain), g.fit.r_squared, g.fit.mse * 1e6, g.fit.intercept * 1e6);
  out << strf("  closed-form G=%.3f V/V (sim/closed %.4f), excluded points=%zu\n", closed,
              g.gain / closed, g.excluded);
}

void run_peak(const RunConfig& cfg, OutputSet& files, std::ostream& out) {
  const std::vector<double> dvs = {-100e-6, -50e-6, -5e-6, 5e-6, 50e-6, 100e-6};
  const double t_max = 2.2 * cfg.design.v_onset * cfg.design.c_load / cfg.design.half_tail();
  Series x{"dvin", "V", dvs}, tp{"t_peak", "s", {}}, vp{"dvmid_peak", "V", {}};
  for (double dv : dvs) {
    const auto tr = run_unrestricted(cfg.design, dv, cfg.vcm, t_max, cfg.exec.dt);
    const auto t = peak_gain_time(tr);
    if (!t) throw ProtocolError("peak timing: no peak for dvin=" + format_number(dv));
    tp.values.push_back(*t);
    vp.values.push_back(tr.dv_mid(static_cast<std::size_t>(std::llround(*t / tr.dt))));
  }
  std::ostringstream os;
  write_columns(os, base_metadata(cfg, "peak"), {x, tp, vp});
  files.write("peak_timing.csv", os.str());
  const auto [lo, hi] = std::minmax_element(tp.values.begin(), tp.values.end());
  out << strf("peak: t_peak in [%.2f, %.2f] ns (spread %.3f ns), dVmid_peak(+100uV)=%.4f mV\n",
              *lo * 1e9, *hi * 1e9, (*hi - *lo) * 1e9, vp.values.back() * 1e3);
}

void run_bandwidth(const RunConfig& cfg, OutputSet& files, std::ostream& out) {
  const auto r = bandwidth_profile(cfg.design, cfg.schedule, default_bandwidth_grid(), cfg.bandwidth, cfg.exec);
  files.write("bandwidth.csv", sweep_csv(cfg, r));
  const double a = 0.5 * cfg.schedule.t_integrate;
  auto at = [&](double f) {
    std::size_t best = 0;
    for (std::size_t i = 0; i < r.x.values.size(); ++i)
      if (std::fabs(r.x.values[i] - f) < std::fabs(r.x.values[best] - f)) best = i;
    return r.y.values[best];
  };
  double worst = 0;
  for (std::size_t i = 0; i < r.x.values.size(); ++i)
    worst = std::max(worst, std::fabs(r.y.values[i] - r.extra[0].values[i]));
  out << strf("bandwidth: response(1 Hz)=%.5f attenuation(10 kHz)=%.4f%% response(1/tau)=%.4f\n", at(1.0),
              (1.0 - at(1e4)) * 100.0, at(1.0 / cfg.schedule.t_integrate));
  out << strf("  max |response - sinc| = %.4f; BW(p=%.2f): first-crossing %.3f MHz, envelope %.3f MHz\n", worst,
              cfg.bw_p, bandwidth(a, cfg.bw_p, BandwidthCriterion::FirstCrossing) / 1e6,
              bandwidth(a, cfg.bw_p, BandwidthCriterion::Envelope) / 1e6);
}

void run_offset_table(const RunConfig& cfg, OutputSet& files, std::ostream& out) {
  const auto rs = default_offset_resistances();
  const auto t = offset_table(cfg.design, cfg.schedule, rs, cfg.exec);
  const std::size_t n = rs.size();

  std::ostringstream mat;
  auto meta = base_metadata(cfg, "offset-table");
  meta.push_back({"layout", "rows R1 (ohm), columns R2 (ohm), values Vos (uV)"});
  meta.push_back({"resolution_uV", format_number(t.resolution * 1e6)});
  write_metadata(mat, meta);
  mat << "r1_ohm";
  for (double r : rs) mat << ',' << format_number(r);
  mat << '\n';
  for (std::size_t i = 0; i < n; ++i) {
    mat << format_number(rs[i]);
    for (std::size_t j = 0; j < n; ++j) {
      mat << ',';
      if (auto v = t.vos(i, j)) mat << format_number(*v * 1e6);
    }
    mat << '\n';
  }
  files.write("offset_table.csv", mat.str());

  std::ostringstream lng;
  write_metadata(lng, meta);
  lng << "r1_ohm,r2_ohm,ascending_V,descending_V,vos_V,vos_5uV_uV,predicted_V\n";
  auto opt = [](const std::optional<double>& v) { return v ? format_number(*v) : std::string(); };
  double max_split = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const auto& c = t.cells[i][j];
      AmplifierDesign cell = cfg.design;
      cell.memristors = {rs[i], rs[j]};
      const auto v = c.vos();
      lng << format_number(rs[i]) << ',' << format_number(rs[j]) << ',' << opt(c.ascending) << ','
          << opt(c.descending) << ',' << opt(v) << ','
          << (v ? format_number(5.0 * std::round(*v * 1e6 / 5.0)) : std::string()) << ','
          << format_number(predict_offset(cell)) << '\n';
      if (c.ascending && c.descending) max_split = std::max(max_split, std::fabs(*c.ascending - *c.descending));
    }
  files.write("offset_flips.csv", lng.str());

  out << "offset-table: Vos (uV, 5 uV quantised), rows R1, columns R2\n";
  out << "  R1\\R2  ";
  for (double r : rs) out << strf("%7.0fk", r / 1e3);
  out << '\n';
  for (std::size_t i = 0; i < n; ++i) {
    out << strf("  %5.0fk ", rs[i] / 1e3);
    for (std::size_t j = 0; j < n; ++j) {
      const auto v = t.vos(i, j);
      out << (v ? strf("%8.0f", 5.0 * std::round(*v * 1e6 / 5.0) + 0.0) : std::string("     n/a"));
    }
    out << '\n';
  }
  out << strf("  tuning range=%.1f uV mean sensitivity=%.3f uV/kohm max asc/desc split=%.2f uV complete=%d\n",
              t.tuning_range() * 1e6, t.mean_sensitivity() * 1e9, max_split * 1e6, t.complete());
}

void run_noise(const RunConfig& cfg, OutputSet& files, std::ostream& out) {
  const double gm = input_operating_point(cfg.design).gm;
  const double gain = closed_form_gain(cfg.design, cfg.schedule.t_integrate).transconductance;
  const double a = 0.5 * cfg.schedule.t_integrate;
  NoiseParams np = cfg.noise;
  np.excess = cfg.noise_excess ? *cfg.noise_excess : calibrate_noise_excess(np, gm, gain, a, cfg.noise_target_rms);
  const auto sp = noise_pipeline(np, gm, gain, a);

  std::ostringstream os;
  auto meta = base_metadata(cfg, "noise");
  meta.push_back({"noise_excess", format_number(np.excess)});
  meta.push_back({"noise_gamma", format_number(np.gamma)});
  meta.push_back({"noise_fc_Hz", format_number(np.fc)});
  meta.push_back({"gm_S", format_number(gm)});
  meta.push_back({"gain", format_number(gain)});
  meta.push_back({"rms_input_unmoderated_V", format_number(sp.rms_input_unmoderated)});
  meta.push_back({"rms_input_moderated_V", format_number(sp.rms_input_moderated)});
  write_columns(os, meta,
                {{"f", "Hz", sp.freq},
                 {"device_psd", "V2perHz", sp.device_psd},
                 {"input_unmoderated", "V2perHz", sp.input_unmoderated},
                 {"input_moderated", "V2perHz", sp.input_moderated},
                 {"output_unmoderated", "V2perHz", sp.output_unmoderated},
                 {"output_moderated", "V2perHz", sp.output_moderated}});
  files.write("noise.csv", os.str());
  const auto fc = flicker_corner(sp);
  out << strf("noise: excess multiplier=%.4f thermal floor=%.4g V^2/Hz (per device)\n", np.excess,
              sp.device_psd.back());
  out << strf("  input-referred RMS: unmoderated=%.1f uV moderated=%.1f uV (saving %.1f%%)\n",
              sp.rms_input_unmoderated * 1e6, sp.rms_input_moderated * 1e6, sp.moderation_saving() * 100.0);
  out << strf("  output RMS: unmoderated=%.3f mV moderated=%.3f mV; flicker corner=%s\n",
              sp.rms_output_unmoderated * 1e3, sp.rms_output_moderated * 1e3,
              fc ? strf("%.1f Hz", *fc).c_str() : "none");
  out << strf("  compensation equilibrium (Rcomp=%.0f kohm): %.3f V\n", cfg.rcomp / 1e3,
              compensation_equilibrium(cfg.rcomp, cfg.design.itail));
}

void run_input_range(const RunConfig& cfg, OutputSet& files, std::ostream& out) {
  InputRangeOptions opt = cfg.input_range;
  opt.v_stop = cfg.design.vdd;
  const auto r = input_range_sweep(cfg.design, cfg.schedule, opt, cfg.exec);
  files.write("input_range.csv", sweep_csv(cfg, r.sweep));
  const auto cf = input_range(cfg.design);
  out << strf("input-range: DLC-triggered range %s, max-gain range (%.1f dB) %s, peak G=%.3f\n",
              interval_text(r.dlc_range).c_str(), opt.window_db, interval_text(r.max_gain_range).c_str(),
              r.peak_gain);
  out << strf("  closed form: [%.3f, %.3f] V (feasible=%d), |Vgs4|=%.4f V |Vgs6|=%.4f V, max Vanabar_low=%.3f V\n",
              cf.vcm_min, cf.vcm_max, cf.feasible, cf.vgs4, cf.vgs6, cf.max_anabar_low);
}

void run_cmgd(const RunConfig& cfg, OutputSet& files, std::ostream& out) {
  CmgdOptions opt = cfg.cmgd;
  opt.v_stop = cfg.design.vdd;
  const auto r = cmgd_sweep(cfg.design, cfg.schedule, opt, cfg.exec);
  files.write("cmgd_coarse.csv", sweep_csv(cfg, r.coarse));
  files.write("cmgd_fine.csv", sweep_csv(cfg, r.fine));
  files.write("cmgd_derivative.csv", sweep_csv(cfg, r.derivative));
  const auto change = r.max_relative_change(0.15);
  const double dv_mid = closed_form_gain(cfg.design, cfg.schedule.t_integrate).dv_mid;
  const double vgs4 = input_range(cfg.design).vgs4;
  out << strf("cmgd: plateau %s, CMGD >= %.0f dB over %s\n", interval_text(r.plateau).c_str(), opt.threshold_db,
              interval_text(r.region).c_str());
  out << strf("  max relative gain change over 0.15 V inside region: %s\n",
              change ? strf("%.3f%%", *change * 100.0).c_str() : "n/a");
  out << strf("  closed form dG/dVcm at dVmid=%.3f V, Vgs=%.3f V: %.3f 1/V\n", dv_mid, vgs4,
              cmgd_closed_form(dv_mid, vgs4));
}

void run_energy(const RunConfig& cfg, OutputSet& files, std::ostream& out) {
  const auto r = run_cycle(cfg.design, cfg.schedule, dc_pair(cfg.vcm, cfg.dvin), cfg.exec.dt);
  const auto e = energy_accounting(r.trace, cfg.design, cfg.schedule);
  std::ostringstream os;
  auto meta = base_metadata(cfg, "energy");
  meta.push_back({"sample_rate_Hz", format_number(cfg.sample_rate)});
  write_metadata(os, meta);
  os << "phase,energy_J\n";
  os << "reset," << format_number(e.reset) << "\nintegrating," << format_number(e.integrating)
     << "\ndigitising," << format_number(e.digitising) << "\noff," << format_number(e.off)
     << "\ntotal," << format_number(e.total()) << '\n';
  files.write("energy.csv", os.str());
  out << "energy per cycle:\n";
  out << strf("  reset        %8.1f fJ\n", e.reset * 1e15);
  out << strf("  integrating  %8.1f fJ\n", e.integrating * 1e15);
  out << strf("  digitising   %8.1f fJ (DLC %.1f fJ)\n", e.digitising * 1e15, e.dlc * 1e15);
  out << strf("  off          %8.1f fJ\n", e.off * 1e15);
  out << strf("  total        %8.3f pJ, continuous %.3f uW\n", e.total() * 1e12, e.continuous_power() * 1e6);
  out << strf("  %.1f nW @ %g kHz\n", e.sampled_power(cfg.sample_rate) * 1e9, cfg.sample_rate / 1e3);
}

const std::vector<std::pair<std::string, Runner>>& runners() {
  static const std::vector<std::pair<std::string, Runner>> r = {
      {"simulate", run_simulate},       {"gain", run_gain},
      {"peak", run_peak},               {"bandwidth", run_bandwidth},
      {"offset-table", run_offset_table}, {"noise", run_noise},
      {"input-range", run_input_range}, {"cmgd", run_cmgd},
      {"energy", run_energy},
  };
  return r;
}

std::string quoted(std::string s) {
  for (auto& c : s)
    if (c == '"' || c == '\n') c = '\'';
  return '"' + s + '"';
}

}  // namespace

const std::vector<std::string>& protocol_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const auto& [name, fn] : runners()) v.push_back(name);
    v.push_back("reproduce-all");
    return v;
  }();
  return names;
}

void dispatch(const std::string& protocol, const RunConfig& cfg, std::ostream& out) {
  OutputSet files(cfg.out_dir);
  try {
    bool found = false;
    for (const auto& [name, fn] : runners()) {
      if (protocol == "reproduce-all") {
        out << "== " << name << " ==\n";
        fn(cfg, files, out);
        found = true;
      } else if (protocol == name) {
        fn(cfg, files, out);
        found = true;
      }
    }
    if (!found) throw InvalidInput("unknown protocol '" + protocol + "'");
  } catch (...) {
    files.remove_all();
    throw;
  }
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Behavioural simulator and analysis toolkit for clocked integrating amplifiers", "integamp"};
  std::string config_path, out_dir, dt_text;
  unsigned jobs = 0;
  app.add_option("--config", config_path, "Config file (key = value lines)");
  auto* out_opt = app.add_option("--out", out_dir, "Output directory");
  auto* dt_opt = app.add_option("--dt", dt_text, "Integrator time step, e.g. 0.1ns");
  auto* jobs_opt = app.add_option("--jobs", jobs, "Worker threads (0 = hardware threads)");
  app.require_subcommand(1, 1);
  const std::map<std::string, std::string> help = {
      {"simulate", "Single cycle trace"},
      {"gain", "Gain sweep and linear fit"},
      {"peak", "Free-running gain peak timing"},
      {"bandwidth", "Tone sweep attenuation profile"},
      {"offset-table", "Offset vs memristor resistances"},
      {"noise", "Analytic noise spectra and RMS"},
      {"input-range", "Common-mode input range sweep"},
      {"cmgd", "Common-mode gain distortion sweep"},
      {"energy", "Per-phase energy and power"},
      {"reproduce-all", "Run every protocol"},
  };
  for (const auto& name : protocol_names()) app.add_subcommand(name, help.at(name))->fallthrough();

  std::vector<std::string> storage;
  storage.push_back("integamp");
  storage.insert(storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : storage) argv.push_back(s.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: kind=usage message=" << quoted(e.what()) << '\n';
    return kExitUsage;
  }

  const std::string protocol = app.get_subcommands().front()->get_name();
  RunConfig cfg;
  try {
    cfg = config_path.empty() ? parse_config("") : load_config(config_path);
    if (*out_opt) cfg.out_dir = out_dir;
    if (*dt_opt) {
      cfg.exec.dt = parse_quantity(dt_text, Dimension::Time);
      if (!(cfg.exec.dt > 0 && cfg.exec.dt <= max_time_step(cfg.schedule)))
        throw ConfigError(0, "--dt must lie in (0, t_integrate/300]");
    }
    if (*jobs_opt) cfg.exec.jobs = jobs;
    if (!cfg.protocol.empty() && cfg.protocol != protocol)
      throw ConfigError(0, "config protocol '" + cfg.protocol + "' does not match subcommand '" + protocol + "'");
  } catch (const ConfigError& e) {
    err << "error: kind=validation line=" << e.line() << " message=" << quoted(e.detail()) << '\n';
    return kExitValidation;
  }

  try {
    dispatch(protocol, cfg, out);
  } catch (const std::exception& e) {
    err << "error: kind=protocol protocol=" << protocol << " message=" << quoted(e.what()) << '\n';
    return kExitProtocol;
  }
  return kExitOk;
}

}  // namespace integamp
