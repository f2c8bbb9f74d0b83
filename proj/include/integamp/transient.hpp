#pragma once

#include <cstddef>
#include <optional>
#include <ostream>
#include <vector>

#include "integamp/core_analysis.hpp"
#include "integamp/stimuli.hpp"

namespace integamp {

enum class Phase { Reset, Integrating, Digitising, Off };

const char* phase_name(Phase p);

struct PhaseState {
  Phase phase = Phase::Reset;
  bool clk_ana = false;
  bool clk_anabar = false;
  bool clk_rst = false;
  bool clk = false;
};

PhaseState clock_levels(Phase p);

struct ClockSchedule {
  double t_reset = 120e-9;
  double t_integrate = 150e-9;
  double t_digitise = 50e-9;
  double t_off = 30e-9;

  double period() const { return t_reset + t_integrate + t_digitise + t_off; }
  void validate() const;
  Phase phase_at(double t_local) const;
};

/// Step counts per phase for a given dt (durations rounded to whole steps).
struct StepPlan {
  std::size_t reset = 0;
  std::size_t integrate = 0;
  std::size_t digitise = 0;
  std::size_t off = 0;

  std::size_t total() const { return reset + integrate + digitise + off; }
  std::size_t decision_index() const { return reset + integrate; }
  Phase phase_of_step(std::size_t k) const;
};

StepPlan plan_steps(const ClockSchedule& s, double dt);

/// Uniformly sampled cycle. t is local to the cycle; t_start is its absolute start.
struct TransientTrace {
  double dt = 0.0;
  double t_start = 0.0;
  std::vector<double> t;
  std::vector<double> vmida;
  std::vector<double> vmidb;
  std::vector<double> il;
  std::vector<double> ir;
  std::vector<Phase> phase;

  std::size_t size() const { return t.size(); }
  double dv_mid(std::size_t k) const { return vmida[k] - vmidb[k]; }
};

struct DetectionRecord {
  bool outa = false;
  bool outb = false;
  bool triggered = false;
  double decision_time = 0.0;
  double vmida = 0.0;
  double vmidb = 0.0;
};

struct CycleResult {
  TransientTrace trace;
  DetectionRecord record;
};

struct EnergyRecord {
  double reset = 0.0;
  double integrating = 0.0;
  double digitising = 0.0;
  double off = 0.0;
  double dlc = 0.0;  // included in digitising
  double period = 0.0;

  double total() const { return reset + integrating + digitising + off; }
  double continuous_power() const { return total() / period; }
  double sampled_power(double rate) const { return total() * rate; }
};

DetectionRecord dlc_decide(double vmida, double vmidb, double v_trigger = 0.45);

/// Smallest dt accepted: t_integrate / 300.
double max_time_step(const ClockSchedule& s);

CycleResult run_cycle(const AmplifierDesign& d, const ClockSchedule& s, const Waveform& w,
                      double dt, double t_start = 0.0);

/// n cycles starting every `interval` seconds (interval >= period); the gap is powered off.
std::vector<CycleResult> run_cycles(const AmplifierDesign& d, const ClockSchedule& s,
                                    const Waveform& w, std::size_t n, double interval, double dt);

/// Integration without reset or phase limits, from empty load capacitors.
TransientTrace run_unrestricted(const AmplifierDesign& d, double dv_in, double vcm, double t_max,
                                double dt);

/// Earliest time of max |dVmid|; nullopt when the trace is identically zero.
std::optional<double> peak_gain_time(const TransientTrace& trace);

EnergyRecord energy_accounting(const TransientTrace& trace, const AmplifierDesign& d,
                               const ClockSchedule& s);

void write_trace_csv(std::ostream& os, const TransientTrace& trace);

}  // namespace integamp
