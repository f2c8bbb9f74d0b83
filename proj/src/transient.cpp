#include "integamp/transient.hpp"

#include <algorithm>
#include <cmath>

#include "integamp/csv.hpp"
#include "integamp/error.hpp"

namespace integamp {
namespace {

/// Branch current law shared by the cycle and free-running integrators.
class BranchModel {
 public:
  BranchModel(const AmplifierDesign& d, double vcm)
      : d_(d), cm_(common_mode_point(d, vcm)), split_(current_split(d, cm_.tail_current)) {}

  void currents(double va, double vb, const InputSample& in, double& ia, double& ib) const {
    const double g = 0.5 * cm_.gm_diff * (in.vin_b - in.vin_a);
    ia = std::max(0.0, split_.il_exact + g) * headroom(va);
    ib = std::max(0.0, split_.ir_exact - g) * headroom(vb);
  }

 private:
  double headroom(double v) const {
    if (v >= d_.v_equil) return 0.0;
    return -std::expm1(-(d_.v_equil - v) / d_.cascode.vt);
  }

  const AmplifierDesign& d_;
  CommonModePoint cm_;
  CurrentSplit split_;
};

void reserve_trace(TransientTrace& tr, std::size_t n) {
  tr.t.reserve(n);
  tr.vmida.reserve(n);
  tr.vmidb.reserve(n);
  tr.il.reserve(n);
  tr.ir.reserve(n);
  tr.phase.reserve(n);
}

void push_sample(TransientTrace& tr, double t, Phase ph, double va, double vb, double ia,
                 double ib) {
  tr.t.push_back(t);
  tr.phase.push_back(ph);
  tr.vmida.push_back(va);
  tr.vmidb.push_back(vb);
  tr.il.push_back(ia);
  tr.ir.push_back(ib);
}

void check_dt(double dt, double limit) {
  if (!(std::isfinite(dt) && dt > 0)) throw InvalidInput("time step must be > 0");
  if (dt > limit * (1.0 + 1e-12))
    throw RangeError("time step too coarse: dt must be <= " + format_number(limit) + " s");
}

}  // namespace

const char* phase_name(Phase p) {
  switch (p) {
    case Phase::Reset: return "reset";
    case Phase::Integrating: return "integrating";
    case Phase::Digitising: return "digitising";
    case Phase::Off: return "off";
  }
  return "unknown";
}

PhaseState clock_levels(Phase p) {
  switch (p) {
    case Phase::Reset: return {p, true, false, true, false};
    case Phase::Integrating: return {p, true, false, false, false};
    case Phase::Digitising: return {p, true, false, false, true};
    case Phase::Off: return {p, false, true, false, true};
  }
  return {};
}

void ClockSchedule::validate() const {
  for (double v : {t_reset, t_integrate, t_digitise, t_off})
    if (!(std::isfinite(v) && v >= 0)) throw InvalidInput("phase durations must be >= 0");
  if (!(t_integrate > 0)) throw InvalidInput("integration time must be > 0");
}

Phase ClockSchedule::phase_at(double t) const {
  if (t < t_reset) return Phase::Reset;
  if (t < t_reset + t_integrate) return Phase::Integrating;
  if (t < t_reset + t_integrate + t_digitise) return Phase::Digitising;
  return Phase::Off;
}

Phase StepPlan::phase_of_step(std::size_t k) const {
  if (k < reset) return Phase::Reset;
  if (k < reset + integrate) return Phase::Integrating;
  if (k < reset + integrate + digitise) return Phase::Digitising;
  return Phase::Off;
}

StepPlan plan_steps(const ClockSchedule& s, double dt) {
  auto steps = [dt](double dur) { return static_cast<std::size_t>(std::llround(dur / dt)); };
  return {steps(s.t_reset), steps(s.t_integrate), steps(s.t_digitise), steps(s.t_off)};
}

double max_time_step(const ClockSchedule& s) { return s.t_integrate / 300.0; }

DetectionRecord dlc_decide(double vmida, double vmidb, double v_trigger) {
  DetectionRecord r;
  r.vmida = vmida;
  r.vmidb = vmidb;
  r.triggered = std::max(vmida, vmidb) >= v_trigger;
  if (r.triggered) {
    r.outa = vmida > vmidb;
    r.outb = !r.outa;
  }
  return r;
}

CycleResult run_cycle(const AmplifierDesign& d, const ClockSchedule& s, const Waveform& w,
                      double dt, double t_start) {
  s.validate();
  check_dt(dt, max_time_step(s));
  const StepPlan plan = plan_steps(s, dt);
  const std::size_t n = plan.total();

  const double t_int0 = t_start + static_cast<double>(plan.reset) * dt;
  const BranchModel model(d, w(t_int0).common_mode());
  const double k_cap = dt / d.c_load;

  CycleResult out;
  TransientTrace& tr = out.trace;
  tr.dt = dt;
  tr.t_start = t_start;
  reserve_trace(tr, n + 1);

  double va = 0.0, vb = 0.0;
  for (std::size_t k = 0; k <= n; ++k) {
    const double t = static_cast<double>(k) * dt;
    const Phase ph = plan.phase_of_step(k);
    double ia = 0.0, ib = 0.0;
    switch (ph) {
      case Phase::Reset:
        va = vb = 0.0;
        model.currents(0.0, 0.0, w(t_start + t), ia, ib);
        push_sample(tr, t, ph, va, vb, ia, ib);
        break;
      case Phase::Integrating:
      case Phase::Digitising:
        model.currents(va, vb, w(t_start + t), ia, ib);
        push_sample(tr, t, ph, va, vb, ia, ib);
        va += ia * k_cap;
        vb += ib * k_cap;
        break;
      case Phase::Off:
        push_sample(tr, t, ph, va, vb, 0.0, 0.0);
        break;
    }
  }

  const std::size_t idx = std::min(plan.decision_index(), n);
  out.record = dlc_decide(tr.vmida[idx], tr.vmidb[idx], d.dlc.v_trigger);
  out.record.decision_time = t_start + tr.t[idx];
  return out;
}

std::vector<CycleResult> run_cycles(const AmplifierDesign& d, const ClockSchedule& s,
                                    const Waveform& w, std::size_t n, double interval, double dt) {
  if (!(interval >= s.period())) throw InvalidInput("cycle interval must be >= the cycle period");
  std::vector<CycleResult> out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k)
    out.push_back(run_cycle(d, s, w, dt, static_cast<double>(k) * interval));
  return out;
}

TransientTrace run_unrestricted(const AmplifierDesign& d, double dv_in, double vcm, double t_max,
                                double dt) {
  const double t_peak_nominal = d.v_onset * d.c_load / d.half_tail();
  if (!(t_max >= 2.0 * t_peak_nominal))
    throw RangeError("t_max must be at least twice the nominal peak time");
  check_dt(dt, t_peak_nominal / 300.0);

  const Waveform w = dc_pair(vcm, dv_in);
  const BranchModel model(d, vcm);
  const double k_cap = dt / d.c_load;
  const auto n = static_cast<std::size_t>(std::llround(t_max / dt));

  TransientTrace tr;
  tr.dt = dt;
  reserve_trace(tr, n + 1);
  double va = 0.0, vb = 0.0;
  for (std::size_t k = 0; k <= n; ++k) {
    const double t = static_cast<double>(k) * dt;
    double ia = 0.0, ib = 0.0;
    model.currents(va, vb, w(t), ia, ib);
    push_sample(tr, t, Phase::Integrating, va, vb, ia, ib);
    va += ia * k_cap;
    vb += ib * k_cap;
  }
  return tr;
}

std::optional<double> peak_gain_time(const TransientTrace& trace) {
  double best = 0.0;
  std::optional<double> at;
  for (std::size_t k = 0; k < trace.size(); ++k) {
    const double v = std::fabs(trace.dv_mid(k));
    if (v > best) {
      best = v;
      at = trace.t[k];
    }
  }
  return at;
}

EnergyRecord energy_accounting(const TransientTrace& trace, const AmplifierDesign& d,
                               const ClockSchedule& s) {
  EnergyRecord e;
  e.period = s.period();
  for (std::size_t k = 0; k + 1 < trace.size(); ++k) {
    const double q = d.vdd * (trace.il[k] + trace.ir[k]) * trace.dt;
    switch (trace.phase[k]) {
      case Phase::Reset: e.reset += q; break;
      case Phase::Integrating: e.integrating += q; break;
      case Phase::Digitising: e.digitising += q; break;
      case Phase::Off: e.off += q; break;
    }
  }
  if (s.t_digitise > 0) {
    e.dlc = d.dlc.conversion_energy;
    e.digitising += e.dlc;
  }
  return e;
}

void write_trace_csv(std::ostream& os, const TransientTrace& trace) {
  os << "t_s,phase,vmida_V,vmidb_V,il_A,ir_A\n";
  for (std::size_t k = 0; k < trace.size(); ++k) {
    os << format_number(trace.t_start + trace.t[k]) << ',' << phase_name(trace.phase[k]) << ','
       << format_number(trace.vmida[k]) << ',' << format_number(trace.vmidb[k]) << ','
       << format_number(trace.il[k]) << ',' << format_number(trace.ir[k]) << '\n';
  }
}

}  // namespace integamp
