#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "integamp/core_analysis.hpp"
#include "integamp/csv.hpp"
#include "integamp/transient.hpp"

namespace integamp {

struct ExecutionOptions {
  double dt = 0.1e-9;
  unsigned jobs = 1;
};

using Interval = std::pair<double, double>;

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  double mse = 0.0;  // mean squared residual, in y units squared
};

/// Ordinary least squares with intercept. Requires at least two distinct x values.
LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

struct SweepResult {
  std::string protocol;
  Series x;
  Series y;
  std::vector<Series> extra;
  std::optional<LinearFit> fit;
  Metadata metadata;

  std::vector<Series> columns() const;
};

// ---- frequency-domain formulas -------------------------------------------

enum class BandwidthCriterion { FirstCrossing, Envelope };

/// |sin(2 pi f a) / (2 pi f a)|, a = half the integration window.
double attenuation_factor(double f, double a);

double bandwidth(double a, double p, BandwidthCriterion criterion);

// ---- gain ----------------------------------------------------------------

struct GainMeasurement {
  SweepResult sweep;
  double gain = 0.0;
  LinearFit fit;
  std::size_t excluded = 0;
};

/// -100 uV .. +100 uV in 5 uV steps.
std::vector<double> default_gain_grid();

/// Pinned-leg sweep; output is Vmidb - Vmida at the end of integration.
GainMeasurement measure_gain(const AmplifierDesign& d, const ClockSchedule& s,
                             const std::vector<double>& grid, double vin_b,
                             const ExecutionOptions& exec);

// ---- bandwidth -----------------------------------------------------------

struct BandwidthOptions {
  double amplitude = 100e-6;
  double vcm = 1.1;
  double phase_step_deg = 10.0;
};

/// Log-spaced points below 100 kHz, then 0.1 MHz steps up to 27 MHz.
std::vector<double> default_bandwidth_grid();

SweepResult bandwidth_profile(const AmplifierDesign& d, const ClockSchedule& s,
                              const std::vector<double>& freqs, const BandwidthOptions& opt,
                              const ExecutionOptions& exec);

// ---- offset --------------------------------------------------------------

struct TriangleSpec {
  double center = 0.0;         // sweep centre, as a differential offset
  double half_range = 100e-6;  // differential half swing
  std::size_t cycles = 200;
  double interval = 10e-6;     // one conversion per interval
  double vin_b = 1.1;

  double period() const { return static_cast<double>(cycles) * interval; }
  double resolution() const { return 4.0 * half_range / static_cast<double>(cycles); }
};

struct FlipEstimate {
  std::optional<double> ascending;
  std::optional<double> descending;
  double resolution = 0.0;

  std::optional<double> vos() const;
  bool consistent() const;
};

FlipEstimate offset_flip_tracking(const AmplifierDesign& d, const ClockSchedule& s,
                                  const TriangleSpec& sweep, const ExecutionOptions& exec);

/// Coarse wide sweep to locate the flip, then the fine sweep centred on it.
FlipEstimate offset_flip_tracking_two_pass(const AmplifierDesign& d, const ClockSchedule& s,
                                           const TriangleSpec& fine, const ExecutionOptions& exec);

struct OffsetTable {
  std::vector<double> resistances;
  std::vector<std::vector<FlipEstimate>> cells;  // [R1 index][R2 index]
  double resolution = 0.0;

  std::optional<double> vos(std::size_t i, std::size_t j) const { return cells[i][j].vos(); }
  bool complete() const;
  double tuning_range() const;
  /// Mean of |Vos / (R2 - R1)| over off-diagonal cells, V per ohm.
  double mean_sensitivity() const;
};

std::vector<double> default_offset_resistances();

OffsetTable offset_table(const AmplifierDesign& d, const ClockSchedule& s,
                         const std::vector<double>& resistances, const ExecutionOptions& exec);

// ---- noise ---------------------------------------------------------------

struct NoiseParams {
  double gamma = 2.0 / 3.0;
  double excess = 1.0;
  double fc = 250.0;
  double f_lo = 0.05;
  double f_hi = 5e7;
  double temperature = 300.0;
  int points_per_decade = 1000;

  void validate() const;
};

struct NoiseSpectrum {
  std::vector<double> freq;
  std::vector<double> device_psd;          // single input device, V^2/Hz
  std::vector<double> input_unmoderated;   // pair, input referred
  std::vector<double> input_moderated;
  std::vector<double> output_unmoderated;
  std::vector<double> output_moderated;
  double rms_input_unmoderated = 0.0;
  double rms_input_moderated = 0.0;
  double rms_output_unmoderated = 0.0;
  double rms_output_moderated = 0.0;

  double moderation_saving() const { return 1.0 - rms_input_moderated / rms_input_unmoderated; }
};

/// Trapezoid rule over arbitrary (sorted) abscissae.
double trapezoid(const std::vector<double>& x, const std::vector<double>& y);

NoiseSpectrum noise_pipeline(const NoiseParams& np, double gm, double gain, double a);

/// Frequency where the device PSD reaches twice its high-frequency floor.
std::optional<double> flicker_corner(const NoiseSpectrum& spectrum);

/// Excess-noise multiplier giving the requested unmoderated input-referred RMS.
double calibrate_noise_excess(NoiseParams np, double gm, double gain, double a, double target_rms);

/// Equilibrium voltage of the compensation-resistor noise setup: Rcomp * Itail / 2.
double compensation_equilibrium(double rcomp, double itail);

// ---- common mode ---------------------------------------------------------

struct InputRangeOptions {
  double v_start = 0.0;
  double v_stop = 1.8;
  double step = 0.05;
  double dv = 50e-6;
  std::size_t precondition_cycles = 3;
  double precondition_vcm = 1.8;
  double window_db = 1.0;
};

struct InputRangeResult {
  SweepResult sweep;
  std::optional<Interval> dlc_range;
  std::optional<Interval> max_gain_range;
  double peak_gain = 0.0;
};

InputRangeResult input_range_sweep(const AmplifierDesign& d, const ClockSchedule& s,
                                   const InputRangeOptions& opt, const ExecutionOptions& exec);

enum class CmgdConvention { GainOverSlope, InverseSlope };

struct CmgdOptions {
  double v_start = 0.0;
  double v_stop = 1.8;
  double coarse_step = 0.01;
  double fine_step = 0.005;
  double dv = 50e-6;
  double window_db = 1.0;
  double threshold_db = 20.0;
  CmgdConvention convention = CmgdConvention::GainOverSlope;
};

struct CmgdResult {
  SweepResult coarse;       // Vcm -> G
  SweepResult fine;         // Vcm -> G on the refined grid inside the plateau
  SweepResult derivative;   // pair midpoint -> dG/dVcm, with G and dB columns
  std::optional<Interval> plateau;  // coarse 1 dB window around the peak
  std::optional<Interval> region;   // contiguous dB >= threshold around the peak
  /// Largest |G(x + excursion) - G(x)| / G(x) with both points inside the region.
  std::optional<double> max_relative_change(double excursion) const;
};

double cmgd_db(double gain, double slope, CmgdConvention convention);

CmgdResult cmgd_sweep(const AmplifierDesign& d, const ClockSchedule& s, const CmgdOptions& opt,
                      const ExecutionOptions& exec);

/// Gain from one cycle at common mode vcm with split differential dv: (Vmidb - Vmida) / dv.
double cycle_gain(const AmplifierDesign& d, const ClockSchedule& s, double vcm, double dv,
                  double dt);

// ---- calibration ---------------------------------------------------------

/// Sets the input-pair slope factor so G = target at integration time tau; gate drive is kept.
AmplifierDesign calibrate_te(const AmplifierDesign& d, double target_gain, double tau);

/// Sets the cascode Early voltage so |dVos/d(R1 - R2)| = target (V/ohm); gm values kept.
AmplifierDesign calibrate_offset_sensitivity(const AmplifierDesign& d, double target);

/// Adjusts Vequil so the free-running gain peak lands at target_time; Vonset follows.
AmplifierDesign calibrate_peak_time(const AmplifierDesign& d, double target_time, double dt);

}  // namespace integamp
