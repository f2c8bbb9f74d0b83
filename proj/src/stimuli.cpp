#include "integamp/stimuli.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <utility>

#include "integamp/error.hpp"

namespace integamp {
namespace {

std::string describe(const char* kind, std::initializer_list<std::pair<const char*, double>> args) {
  std::ostringstream os;
  os.precision(12);
  os << kind << '(';
  bool first = true;
  for (const auto& [k, v] : args) {
    if (!first) os << ';';
    os << k << '=' << v;
    first = false;
  }
  os << ')';
  return os.str();
}

}  // namespace

Waveform::Waveform(std::string descriptor, Evaluator eval)
    : descriptor_(std::move(descriptor)), eval_(std::move(eval)) {}

InputSample Waveform::operator()(double t) const {
  const InputSample s = eval_(t);
  if (!std::isfinite(s.vin_a) || !std::isfinite(s.vin_b))
    throw InvalidInput("waveform " + descriptor_ + " undefined at t=" + std::to_string(t));
  return s;
}

Waveform dc_pair(double vcm, double dv) {
  return Waveform(describe("dc_pair", {{"vcm", vcm}, {"dvin", dv}}), [vcm, dv](double) {
    return InputSample{vcm + 0.5 * dv, vcm - 0.5 * dv};
  });
}

Waveform dc_pinned(double vin_b, double dv) {
  return Waveform(describe("dc_pinned", {{"vin_b", vin_b}, {"dvin", dv}}),
                  [vin_b, dv](double) { return InputSample{vin_b + dv, vin_b}; });
}

Waveform tone(double vcm, double amplitude, double freq, double phase) {
  if (!(freq >= 0)) throw InvalidInput("tone frequency must be >= 0");
  const double w = 2.0 * std::numbers::pi * freq;
  return Waveform(
      describe("tone", {{"vcm", vcm}, {"amplitude", amplitude}, {"f", freq}, {"phase", phase}}),
      [=](double t) {
        const double dv = amplitude * std::cos(w * t + phase);
        return InputSample{vcm + 0.5 * dv, vcm - 0.5 * dv};
      });
}

Waveform triangle_sweep(double center, double half_range, double period) {
  if (!(period > 0)) throw InvalidInput("triangle period must be > 0");
  return Waveform(
      describe("triangle", {{"center", center}, {"half_range", half_range}, {"period", period}}),
      [=](double t) {
        const double ph = t / period - std::floor(t / period);
        const double frac = ph < 0.5 ? 2.0 * ph : 2.0 - 2.0 * ph;
        return InputSample{center - half_range + 2.0 * half_range * frac, center};
      });
}

Waveform switched(Waveform before, Waveform after, double t_switch) {
  std::ostringstream os;
  os.precision(12);
  os << "switched(" << before.descriptor() << ';' << after.descriptor() << ";t=" << t_switch << ')';
  std::string desc = os.str();
  return Waveform(std::move(desc), [b = std::move(before), a = std::move(after), t_switch](double t) {
    return t < t_switch ? b(t) : a(t);
  });
}

}  // namespace integamp
