#pragma once

#include <functional>
#include <string>

namespace integamp {

struct InputSample {
  double vin_a = 0.0;
  double vin_b = 0.0;

  double differential() const { return vin_a - vin_b; }
  double common_mode() const { return 0.5 * (vin_a + vin_b); }
};

/// Pure time -> (vin_a, vin_b) map with a printable descriptor.
class Waveform {
 public:
  using Evaluator = std::function<InputSample(double)>;

  Waveform(std::string descriptor, Evaluator eval);

  /// Throws InvalidInput if the evaluator yields a non-finite value.
  InputSample operator()(double t) const;
  const std::string& descriptor() const { return descriptor_; }

 private:
  std::string descriptor_;
  Evaluator eval_;
};

/// vin_a = vcm + dv/2, vin_b = vcm - dv/2.
Waveform dc_pair(double vcm, double dv);

/// vin_b fixed, vin_a = vin_b + dv.
Waveform dc_pinned(double vin_b, double dv);

/// Differential amplitude*cos(2 pi f t + phase) split symmetrically about vcm.
Waveform tone(double vcm, double amplitude, double freq, double phase);

/// vin_b = center; vin_a ramps center - half_range -> center + half_range -> back, once per period.
Waveform triangle_sweep(double center, double half_range, double period);

/// before(t) for t < t_switch, after(t) otherwise.
Waveform switched(Waveform before, Waveform after, double t_switch);

}  // namespace integamp
