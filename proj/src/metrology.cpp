#include "integamp/metrology.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "integamp/error.hpp"
#include "integamp/parallel.hpp"

namespace integamp {
namespace {

constexpr double kNominalVcm = 1.1;

std::vector<double> linear_grid(double start, double stop, double step) {
  if (!(step > 0) || !(stop >= start)) throw InvalidInput("sweep grid needs step > 0, stop >= start");
  const auto n = static_cast<std::size_t>(std::llround((stop - start) / step)) + 1;
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i) g[i] = start + static_cast<double>(i) * step;
  return g;
}

/// Contiguous run of indices around `center` for which keep(i) holds.
std::pair<std::size_t, std::size_t> grow_run(std::size_t n, std::size_t center, auto keep) {
  std::size_t lo = center, hi = center;
  while (lo > 0 && keep(lo - 1)) --lo;
  while (hi + 1 < n && keep(hi + 1)) ++hi;
  return {lo, hi};
}

double decision_output(const CycleResult& r) { return r.record.vmidb - r.record.vmida; }

Series bool_series(std::string name, const std::vector<bool>& v) {
  Series s{std::move(name), "", {}};
  for (bool b : v) s.values.push_back(b ? 1.0 : 0.0);
  return s;
}

}  // namespace

LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw InvalidInput("fit needs >= 2 paired points");
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0) throw InvalidInput("fit needs distinct x values");
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ss_res = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (f.intercept + f.slope * x[i]);
    ss_res += r * r;
  }
  f.r_squared = syy > 0 ? 1.0 - ss_res / syy : 1.0;
  f.mse = ss_res / n;
  return f;
}

std::vector<Series> SweepResult::columns() const {
  std::vector<Series> cols{x, y};
  cols.insert(cols.end(), extra.begin(), extra.end());
  return cols;
}

double attenuation_factor(double f, double a) {
  if (!(a > 0)) throw InvalidInput("window half-width must be > 0");
  if (!(f >= 0)) throw InvalidInput("frequency must be >= 0");
  const double x = 2.0 * std::numbers::pi * f * a;
  if (x == 0) return 1.0;
  return std::fabs(std::sin(x) / x);
}

double bandwidth(double a, double p, BandwidthCriterion criterion) {
  if (!(a > 0)) throw InvalidInput("window half-width must be > 0");
  if (!(p > 0 && p <= 1)) throw InvalidInput("attenuation level p must lie in (0, 1]");
  if (p == 1) return 0.0;
  if (criterion == BandwidthCriterion::Envelope) return 1.0 / (2.0 * std::numbers::pi * a * p);
  double lo = 0.0, hi = std::numbers::pi;
  for (int i = 0; i < 200 && hi - lo > 1e-15; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (std::sin(mid) / mid > p)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi) / (2.0 * std::numbers::pi * a);
}

std::vector<double> default_gain_grid() { return linear_grid(-100e-6, 100e-6, 5e-6); }

GainMeasurement measure_gain(const AmplifierDesign& d, const ClockSchedule& s,
                             const std::vector<double>& grid_in, double vin_b,
                             const ExecutionOptions& exec) {
  std::vector<double> grid = grid_in;
  std::sort(grid.begin(), grid.end());
  const auto runs = parallel_map(grid.size(), exec.jobs, [&](std::size_t i) {
    return run_cycle(d, s, dc_pinned(vin_b, grid[i]), exec.dt).record;
  });

  GainMeasurement g;
  g.sweep.protocol = "gain";
  g.sweep.x = {"dvin", "V", grid};
  g.sweep.y = {"dvmid", "V", {}};
  std::vector<bool> trig, outa, outb;
  std::vector<double> fx, fy;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto& r = runs[i];
    const double out = r.vmidb - r.vmida;
    g.sweep.y.values.push_back(out);
    trig.push_back(r.triggered);
    outa.push_back(r.outa);
    outb.push_back(r.outb);
    if (r.triggered) {
      fx.push_back(grid[i]);
      fy.push_back(out);
    } else {
      ++g.excluded;
    }
  }
  if (fx.size() < 2) throw ProtocolError("gain sweep: fewer than two triggered points");
  g.fit = fit_line(fx, fy);
  g.gain = g.fit.slope;
  g.sweep.fit = g.fit;
  g.sweep.extra = {bool_series("triggered", trig), bool_series("outa", outa),
                   bool_series("outb", outb)};
  g.sweep.metadata = {{"protocol", "gain"},
                      {"stimulus", dc_pinned(vin_b, 0.0).descriptor() + " swept dvin"},
                      {"output", "Vmidb-Vmida at end of integration"},
                      {"fit_slope", format_number(g.fit.slope)},
                      {"fit_intercept_V", format_number(g.fit.intercept)},
                      {"fit_r2", format_number(g.fit.r_squared)},
                      {"fit_mse_V2", format_number(g.fit.mse)},
                      {"excluded_points", std::to_string(g.excluded)}};
  return g;
}

std::vector<double> default_bandwidth_grid() {
  std::vector<double> f = {1.0, 10.0, 100.0, 1e3, 1e4, 3e4};
  for (double v : linear_grid(1e5, 27e6, 1e5)) f.push_back(v);
  return f;
}

SweepResult bandwidth_profile(const AmplifierDesign& d, const ClockSchedule& s,
                              const std::vector<double>& freqs_in, const BandwidthOptions& opt,
                              const ExecutionOptions& exec) {
  if (!(opt.phase_step_deg > 0)) throw InvalidInput("phase step must be > 0");
  const double count = 360.0 / opt.phase_step_deg;
  const auto n_phase = static_cast<std::size_t>(std::llround(count));
  if (std::fabs(count - static_cast<double>(n_phase)) > 1e-9)
    throw InvalidInput("phase step must divide 360 degrees");
  std::vector<double> freqs = freqs_in;
  std::sort(freqs.begin(), freqs.end());

  const std::size_t tasks = 1 + freqs.size() * n_phase;
  const auto values = parallel_map(tasks, exec.jobs, [&](std::size_t i) {
    if (i == 0) return std::fabs(decision_output(run_cycle(d, s, dc_pair(opt.vcm, opt.amplitude), exec.dt)));
    const std::size_t fi = (i - 1) / n_phase, pi = (i - 1) % n_phase;
    const double phase = static_cast<double>(pi) * opt.phase_step_deg * std::numbers::pi / 180.0;
    const Waveform w = tone(opt.vcm, opt.amplitude, freqs[fi], phase);
    return std::fabs(decision_output(run_cycle(d, s, w, exec.dt)));
  });
  const double dc = values[0];
  if (!(dc > 0)) throw ProtocolError("bandwidth: DC reference run produced no output");

  const double a = 0.5 * s.t_integrate;
  SweepResult r;
  r.protocol = "bandwidth";
  r.x = {"f", "Hz", freqs};
  r.y = {"response", "", {}};
  Series sinc{"sinc", "", {}}, env{"envelope", "", {}}, cyc{"cycles_per_window", "", {}};
  for (std::size_t fi = 0; fi < freqs.size(); ++fi) {
    double best = 0.0;
    for (std::size_t pi = 0; pi < n_phase; ++pi) best = std::max(best, values[1 + fi * n_phase + pi]);
    r.y.values.push_back(best / dc);
    sinc.values.push_back(attenuation_factor(freqs[fi], a));
    const double x = 2.0 * std::numbers::pi * freqs[fi] * a;
    env.values.push_back(x > 1.0 ? 1.0 / x : 1.0);
    cyc.values.push_back(freqs[fi] * s.t_integrate);
  }
  r.extra = {sinc, env, cyc};
  r.metadata = {{"protocol", "bandwidth"},
                {"stimulus", tone(opt.vcm, opt.amplitude, 0.0, 0.0).descriptor() + " swept f, phase"},
                {"phase_step_deg", format_number(opt.phase_step_deg)},
                {"dc_reference", dc_pair(opt.vcm, opt.amplitude).descriptor()},
                {"window_half_width_s", format_number(a)},
                {"bw_first_crossing_p0.2_Hz", format_number(bandwidth(a, 0.2, BandwidthCriterion::FirstCrossing))},
                {"bw_envelope_p0.2_Hz", format_number(bandwidth(a, 0.2, BandwidthCriterion::Envelope))}};
  return r;
}

std::optional<double> FlipEstimate::vos() const {
  if (!ascending || !descending) return std::nullopt;
  return 0.5 * (*ascending + *descending);
}

bool FlipEstimate::consistent() const {
  return ascending && descending &&
         std::fabs(*ascending - *descending) <= resolution * (1.0 + 1e-9);
}

FlipEstimate offset_flip_tracking(const AmplifierDesign& d, const ClockSchedule& s,
                                  const TriangleSpec& sw, const ExecutionOptions& exec) {
  if (sw.cycles < 100) throw InvalidInput("flip tracking needs >= 100 cycles");
  if (!(sw.half_range > 0)) throw InvalidInput("sweep half range must be > 0");
  if (!(sw.interval >= s.period())) throw InvalidInput("cycle interval must cover the cycle period");

  const Waveform tri = triangle_sweep(sw.vin_b + sw.center, sw.half_range, sw.period());
  const double vin_b = sw.vin_b;
  const Waveform w(tri.descriptor() + ";vin_b=" + format_number(vin_b), [tri, vin_b](double t) {
    InputSample x = tri(t);
    x.vin_b = vin_b;
    return x;
  });

  const double t_mid = s.t_reset + 0.5 * s.t_integrate;
  struct Point {
    double dv;
    bool outa;
  };
  const auto pts = parallel_map(sw.cycles, exec.jobs, [&](std::size_t k) {
    const double t0 = static_cast<double>(k) * sw.interval;
    const auto r = run_cycle(d, s, w, exec.dt, t0);
    return Point{w(t0 + t_mid).differential(), r.record.outa};
  });

  FlipEstimate e;
  e.resolution = sw.resolution();
  for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
    if (pts[k].outa == pts[k + 1].outa) continue;
    const double mid = 0.5 * (pts[k].dv + pts[k + 1].dv);
    if (pts[k + 1].dv > pts[k].dv) {
      if (!e.ascending) e.ascending = mid;
    } else if (!e.descending) {
      e.descending = mid;
    }
  }
  return e;
}

FlipEstimate offset_flip_tracking_two_pass(const AmplifierDesign& d, const ClockSchedule& s,
                                           const TriangleSpec& fine, const ExecutionOptions& exec) {
  TriangleSpec coarse = fine;
  coarse.half_range = 4.0 * fine.half_range;
  const FlipEstimate first = offset_flip_tracking(d, s, coarse, exec);
  const auto v = first.vos();
  if (!v) return first;
  TriangleSpec refined = fine;
  const double step = fine.resolution();
  refined.center = fine.center + step * std::round((*v - fine.center) / step);
  return offset_flip_tracking(d, s, refined, exec);
}

bool OffsetTable::complete() const {
  for (const auto& row : cells)
    for (const auto& c : row)
      if (!c.vos()) return false;
  return true;
}

double OffsetTable::tuning_range() const {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& row : cells)
    for (const auto& c : row)
      if (auto v = c.vos()) {
        lo = std::min(lo, *v);
        hi = std::max(hi, *v);
      }
  return hi >= lo ? hi - lo : 0.0;
}

double OffsetTable::mean_sensitivity() const {
  double sum = 0;
  int n = 0;
  for (std::size_t i = 0; i < cells.size(); ++i)
    for (std::size_t j = 0; j < cells.size(); ++j) {
      if (i == j) continue;
      if (auto v = cells[i][j].vos()) {
        sum += std::fabs(*v / (resistances[j] - resistances[i]));
        ++n;
      }
    }
  return n ? sum / n : 0.0;
}

std::vector<double> default_offset_resistances() { return {10e3, 40e3, 70e3, 100e3, 130e3}; }

OffsetTable offset_table(const AmplifierDesign& d, const ClockSchedule& s,
                         const std::vector<double>& resistances, const ExecutionOptions& exec) {
  const std::size_t n = resistances.size();
  const TriangleSpec fine{};
  const ExecutionOptions inner{exec.dt, 1};
  const auto flat = parallel_map(n * n, exec.jobs, [&](std::size_t idx) {
    AmplifierDesign cell = d;
    cell.memristors = {resistances[idx / n], resistances[idx % n]};
    cell.memristors.validate();
    return offset_flip_tracking_two_pass(cell, s, fine, inner);
  });
  OffsetTable t;
  t.resistances = resistances;
  t.resolution = fine.resolution();
  t.cells.assign(n, std::vector<FlipEstimate>(n));
  for (std::size_t idx = 0; idx < n * n; ++idx) t.cells[idx / n][idx % n] = flat[idx];
  return t;
}

void NoiseParams::validate() const {
  if (!(gamma > 0)) throw InvalidInput("noise gamma must be > 0");
  if (!(excess > 0)) throw InvalidInput("excess noise multiplier must be > 0");
  if (!(fc >= 0)) throw InvalidInput("flicker corner must be >= 0");
  if (!(f_lo > 0 && f_hi > f_lo)) throw InvalidInput("noise band needs 0 < f_lo < f_hi");
  if (!(temperature > 0)) throw InvalidInput("temperature must be > 0");
  if (points_per_decade < 200) throw InvalidInput("noise grid needs >= 200 points per decade");
}

double trapezoid(const std::vector<double>& x, const std::vector<double>& y) {
  double s = 0;
  for (std::size_t i = 0; i + 1 < x.size(); ++i) s += 0.5 * (y[i] + y[i + 1]) * (x[i + 1] - x[i]);
  return s;
}

NoiseSpectrum noise_pipeline(const NoiseParams& np, double gm, double gain, double a) {
  np.validate();
  if (!(gm > 0)) throw InvalidInput("gm must be > 0");
  const double decades = std::log10(np.f_hi / np.f_lo);
  const auto n = static_cast<std::size_t>(std::ceil(decades * np.points_per_decade)) + 1;
  const double floor = np.excess * 4.0 * kBoltzmann * np.temperature * np.gamma / gm;

  NoiseSpectrum sp;
  sp.freq.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    sp.freq[i] = np.f_lo * std::pow(10.0, decades * static_cast<double>(i) / static_cast<double>(n - 1));
  sp.freq.back() = np.f_hi;
  const double g2 = gain * gain;
  for (double f : sp.freq) {
    const double dev = floor * (1.0 + np.fc / f);
    const double lam = attenuation_factor(f, a);
    sp.device_psd.push_back(dev);
    sp.input_unmoderated.push_back(2.0 * dev);
    sp.input_moderated.push_back(2.0 * dev * lam * lam);
    sp.output_unmoderated.push_back(2.0 * dev * g2);
    sp.output_moderated.push_back(2.0 * dev * g2 * lam * lam);
  }
  sp.rms_input_unmoderated = std::sqrt(trapezoid(sp.freq, sp.input_unmoderated));
  sp.rms_input_moderated = std::sqrt(trapezoid(sp.freq, sp.input_moderated));
  sp.rms_output_unmoderated = std::sqrt(trapezoid(sp.freq, sp.output_unmoderated));
  sp.rms_output_moderated = std::sqrt(trapezoid(sp.freq, sp.output_moderated));
  return sp;
}

std::optional<double> flicker_corner(const NoiseSpectrum& sp) {
  if (sp.freq.size() < 2) return std::nullopt;
  const double target = 2.0 * sp.device_psd.back();
  for (std::size_t i = sp.freq.size() - 1; i-- > 0;) {
    if (sp.device_psd[i] >= target) {
      const double x0 = std::log(sp.freq[i]), x1 = std::log(sp.freq[i + 1]);
      const double y0 = std::log(sp.device_psd[i]), y1 = std::log(sp.device_psd[i + 1]);
      const double u = (std::log(target) - y0) / (y1 - y0);
      return std::exp(x0 + u * (x1 - x0));
    }
  }
  return std::nullopt;
}

double calibrate_noise_excess(NoiseParams np, double gm, double gain, double a, double target_rms) {
  if (!(target_rms > 0)) throw InvalidInput("target RMS must be > 0");
  np.excess = 1.0;
  const double base = noise_pipeline(np, gm, gain, a).rms_input_unmoderated;
  return (target_rms / base) * (target_rms / base);
}

double compensation_equilibrium(double rcomp, double itail) { return 0.5 * rcomp * itail; }

double cycle_gain(const AmplifierDesign& d, const ClockSchedule& s, double vcm, double dv,
                  double dt) {
  if (dv == 0) throw InvalidInput("differential input must be non-zero");
  return decision_output(run_cycle(d, s, dc_pair(vcm, dv), dt)) / dv;
}

InputRangeResult input_range_sweep(const AmplifierDesign& d, const ClockSchedule& s,
                                   const InputRangeOptions& opt, const ExecutionOptions& exec) {
  if (opt.dv == 0) throw InvalidInput("differential input must be non-zero");
  const auto grid = linear_grid(opt.v_start, opt.v_stop, opt.step);
  const double period = s.period();
  const auto runs = parallel_map(grid.size(), exec.jobs, [&](std::size_t i) {
    const double t_switch = static_cast<double>(opt.precondition_cycles) * period;
    const Waveform w = switched(dc_pair(opt.precondition_vcm, opt.dv), dc_pair(grid[i], opt.dv), t_switch);
    auto cycles = run_cycles(d, s, w, opt.precondition_cycles + 1, period, exec.dt);
    return cycles.back().record;
  });

  InputRangeResult res;
  SweepResult& r = res.sweep;
  r.protocol = "input-range";
  r.x = {"vcm", "V", grid};
  r.y = {"gain", "", {}};
  Series vmidb{"vmidb", "V", {}}, dvmid{"dvmid", "V", {}};
  std::vector<bool> outa, outb, trig, ok;
  // vin_a > vin_b, so the correct decision is outa = 0, outb = 1.
  const bool expect_a = opt.dv < 0;
  for (const auto& rec : runs) {
    r.y.values.push_back((rec.vmidb - rec.vmida) / opt.dv);
    vmidb.values.push_back(rec.vmidb);
    dvmid.values.push_back(rec.vmida - rec.vmidb);
    outa.push_back(rec.outa);
    outb.push_back(rec.outb);
    trig.push_back(rec.triggered);
    ok.push_back(rec.triggered && rec.outa == expect_a);
  }
  r.extra = {vmidb, dvmid, bool_series("outa", outa), bool_series("outb", outb),
             bool_series("triggered", trig), bool_series("correct", ok)};

  // Longest run of correct decisions.
  std::optional<std::pair<std::size_t, std::size_t>> best;
  for (std::size_t i = 0; i < grid.size();) {
    if (!ok[i]) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j + 1 < grid.size() && ok[j + 1]) ++j;
    if (!best || j - i > best->second - best->first) best = {i, j};
    i = j + 1;
  }
  if (best) {
    res.dlc_range = Interval{grid[best->first], grid[best->second]};
    std::size_t peak = best->first;
    for (std::size_t i = best->first; i <= best->second; ++i)
      if (r.y.values[i] > r.y.values[peak]) peak = i;
    res.peak_gain = r.y.values[peak];
    const double floor_gain = res.peak_gain * std::pow(10.0, -opt.window_db / 20.0);
    const auto [lo, hi] = grow_run(grid.size(), peak, [&](std::size_t i) {
      return ok[i] && r.y.values[i] >= floor_gain;
    });
    res.max_gain_range = Interval{grid[lo], grid[hi]};
  }
  r.metadata = {{"protocol", "input-range"},
                {"stimulus", dc_pair(0.0, opt.dv).descriptor() + " swept vcm"},
                {"precondition", std::to_string(opt.precondition_cycles) + " cycles at vcm=" +
                                     format_number(opt.precondition_vcm)},
                {"gain_window_dB", format_number(opt.window_db)},
                {"dlc_trigger_V", format_number(d.dlc.v_trigger)}};
  return res;
}

double cmgd_db(double gain, double slope, CmgdConvention convention) {
  const double s = std::fabs(slope);
  if (s == 0) return std::numeric_limits<double>::infinity();
  return convention == CmgdConvention::GainOverSlope ? 20.0 * std::log10(std::fabs(gain) / s)
                                                     : 20.0 * std::log10(1.0 / s);
}

std::optional<double> CmgdResult::max_relative_change(double excursion) const {
  if (!region) return std::nullopt;
  const auto& x = fine.x.values;
  const auto& g = fine.y.values;
  if (x.size() < 2) return std::nullopt;
  const double half = 0.5 * (x[1] - x[0]);
  auto inside = [&](double v) { return v >= region->first - half - 1e-12 && v <= region->second + half + 1e-12; };
  std::optional<double> worst;
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = i + 1; j < x.size(); ++j) {
      if (std::fabs(x[j] - x[i] - excursion) > 1e-9 || !inside(x[i]) || !inside(x[j])) continue;
      const double c = std::fabs(g[j] - g[i]) / g[i];
      worst = worst ? std::max(*worst, c) : c;
    }
  return worst;
}

CmgdResult cmgd_sweep(const AmplifierDesign& d, const ClockSchedule& s, const CmgdOptions& opt,
                      const ExecutionOptions& exec) {
  auto sweep = [&](const std::vector<double>& grid) {
    return parallel_map(grid.size(), exec.jobs,
                        [&](std::size_t i) { return cycle_gain(d, s, grid[i], opt.dv, exec.dt); });
  };

  CmgdResult res;
  const auto coarse_grid = linear_grid(opt.v_start, opt.v_stop, opt.coarse_step);
  res.coarse.protocol = "cmgd-coarse";
  res.coarse.x = {"vcm", "V", coarse_grid};
  res.coarse.y = {"gain", "", sweep(coarse_grid)};
  const auto& gc = res.coarse.y.values;
  const std::size_t peak = static_cast<std::size_t>(std::max_element(gc.begin(), gc.end()) - gc.begin());
  const double floor_gain = gc[peak] * std::pow(10.0, -opt.window_db / 20.0);
  const auto [plo, phi] = grow_run(gc.size(), peak, [&](std::size_t i) { return gc[i] >= floor_gain; });
  res.plateau = Interval{coarse_grid[plo], coarse_grid[phi]};

  const auto fine_grid = linear_grid(res.plateau->first, res.plateau->second, opt.fine_step);
  res.fine.protocol = "cmgd-fine";
  res.fine.x = {"vcm", "V", fine_grid};
  res.fine.y = {"gain", "", sweep(fine_grid)};
  const auto& gf = res.fine.y.values;

  Series gmid{"gain_mid", "", {}}, db{"cmgd", "dB", {}};
  res.derivative.protocol = "cmgd-derivative";
  res.derivative.x = {"vcm_mid", "V", {}};
  res.derivative.y = {"dgain_dvcm", "1/V", {}};
  auto& mid = res.derivative.x.values;
  for (std::size_t i = 0; i + 1 < fine_grid.size(); ++i) {
    const double sl = (gf[i + 1] - gf[i]) / (fine_grid[i + 1] - fine_grid[i]);
    const double gm = 0.5 * (gf[i] + gf[i + 1]);
    mid.push_back(0.5 * (fine_grid[i] + fine_grid[i + 1]));
    res.derivative.y.values.push_back(sl);
    gmid.values.push_back(gm);
    db.values.push_back(cmgd_db(gm, sl, opt.convention));
  }
  res.derivative.extra = {gmid, db};
  if (!mid.empty()) {
    const std::size_t pk = static_cast<std::size_t>(
        std::max_element(gmid.values.begin(), gmid.values.end()) - gmid.values.begin());
    if (db.values[pk] >= opt.threshold_db) {
      const auto [lo, hi] =
          grow_run(mid.size(), pk, [&](std::size_t i) { return db.values[i] >= opt.threshold_db; });
      res.region = Interval{mid[lo], mid[hi]};
    }
  }
  const std::string conv =
      opt.convention == CmgdConvention::GainOverSlope ? "20log10(G/|dG/dVcm*1V|)" : "20log10(1/|dG/dVcm*1V|)";
  Metadata meta = {{"stimulus", dc_pair(0.0, opt.dv).descriptor() + " swept vcm"},
                   {"gain_window_dB", format_number(opt.window_db)},
                   {"cmgd_threshold_dB", format_number(opt.threshold_db)},
                   {"cmgd_convention", conv}};
  res.coarse.metadata = meta;
  res.coarse.metadata.insert(res.coarse.metadata.begin(), {"protocol", "cmgd-coarse"});
  res.fine.metadata = meta;
  res.fine.metadata.insert(res.fine.metadata.begin(), {"protocol", "cmgd-fine"});
  res.derivative.metadata = meta;
  res.derivative.metadata.insert(res.derivative.metadata.begin(), {"protocol", "cmgd-derivative"});
  return res;
}

AmplifierDesign calibrate_te(const AmplifierDesign& d, double target_gain, double tau) {
  if (!(target_gain > 0)) throw InvalidInput("target gain must be > 0");
  if (!(tau > 0)) throw InvalidInput("integration time must be > 0");
  const double dv_mid = d.half_tail() * tau / d.c_load;
  const double n = dv_mid / (target_gain * d.input_pair.vt);
  if (n < 1.0) throw RangeError("calibrated slope factor below 1: target gain infeasible");
  const double vds = d.input_pair.vds_min();
  const double vgs = solve_gate_drive(d.input_pair, d.half_tail(), vds);
  AmplifierDesign out = d;
  out.input_pair.n = n;
  out.input_pair = with_gate_drive(out.input_pair, d.half_tail(), vgs, vds);
  return out;
}

AmplifierDesign calibrate_offset_sensitivity(const AmplifierDesign& d, double target) {
  if (!(std::isfinite(target) && target > 0)) throw InvalidInput("offset sensitivity must be > 0");
  const auto in = input_operating_point(d);
  const auto cas = cascode_operating_point(d);
  const double ro_cas = d.itail / (2.0 * target * in.gm * (1.0 + cas.gm * in.ro));
  if (!(std::isfinite(ro_cas) && ro_cas > 0)) throw RangeError("calibrated cascode Ro is non-physical");
  const double vds = d.cascode.vds_min();
  const double vgs = solve_gate_drive(d.cascode, d.half_tail(), vds);
  AmplifierDesign out = d;
  out.cascode.va = ro_cas * d.half_tail();
  out.cascode = with_gate_drive(out.cascode, d.half_tail(), vgs, vds);
  return out;
}

AmplifierDesign calibrate_peak_time(const AmplifierDesign& d, double target_time, double dt) {
  if (!(target_time > 0)) throw InvalidInput("target peak time must be > 0");
  AmplifierDesign out = d;
  out.v_onset = d.half_tail() * target_time / d.c_load;
  if (!(out.v_onset < d.vdd)) throw RangeError("target peak time needs Vonset >= VDD");

  auto peak_at = [&](double ve) {
    AmplifierDesign trial = out;
    trial.v_equil = ve;
    const auto tr = run_unrestricted(trial, 100e-6, kNominalVcm, 2.2 * target_time, dt);
    const auto p = peak_gain_time(tr);
    if (!p) throw ProtocolError("peak calibration: no gain peak");
    return *p;
  };
  double lo = out.v_onset, hi = d.vdd - 1e-6;
  for (int i = 0; i < 60 && hi - lo > 1e-7; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (peak_at(mid) < target_time)
      lo = mid;
    else
      hi = mid;
  }
  out.v_equil = std::fabs(peak_at(lo) - target_time) <= std::fabs(peak_at(hi) - target_time) ? lo : hi;
  return out;
}

}  // namespace integamp
