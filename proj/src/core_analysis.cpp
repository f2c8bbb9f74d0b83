#include "integamp/core_analysis.hpp"

#include <algorithm>
#include <cmath>

#include "integamp/error.hpp"

namespace integamp {
namespace {

constexpr double kNominalHalfTail = 1.5e-6;
constexpr double kNominalLoad = 200e-15;

double nominal_slope_factor() {
  const double dv_mid = kNominalHalfTail * nominal::kIntegrationTime / kNominalLoad;
  return dv_mid / (nominal::kTargetGain * kDefaultThermalVoltage);
}

}  // namespace

double equilibrium_for_onset(double v_onset, double vt) {
  if (!(v_onset > vt && vt > 0)) throw InvalidInput("onset voltage must exceed VT");
  return v_onset + vt * std::log(v_onset / vt - 1.0);
}

TransistorParams nominal_input_pair() {
  TransistorParams p;
  p.polarity = Polarity::PType;
  p.n = nominal_slope_factor();
  p.vth = nominal::kInputThreshold;
  p.va = nominal::kInputEarlyVoltage;
  return with_gate_drive(p, kNominalHalfTail, nominal::kInputGateDrive, p.vds_min());
}

TransistorParams nominal_cascode() {
  TransistorParams p;
  p.polarity = Polarity::PType;
  p.n = nominal_slope_factor();
  p.vth = 0.9;
  const double gm = kNominalHalfTail / (p.n * p.vt);
  const double ro_in = nominal::kInputEarlyVoltage / kNominalHalfTail;
  const double ro_cas =
      2.0 * kNominalHalfTail / (2.0 * nominal::kOffsetSensitivity * gm * (1.0 + gm * ro_in));
  p.va = ro_cas * kNominalHalfTail;
  return with_gate_drive(p, kNominalHalfTail, nominal::kCascodeGateDrive, p.vds_min());
}

TransistorParams nominal_tail() {
  TransistorParams p;
  p.polarity = Polarity::PType;
  p.n = 1.5;
  p.vth = 0.45;
  p.va = 10.0;
  return with_gate_drive(p, 2.0 * kNominalHalfTail, 0.6, p.vds_min());
}

void AmplifierDesign::validate() const {
  if (!(std::isfinite(vdd) && vdd > 0)) throw InvalidInput("VDD must be > 0");
  if (!(std::isfinite(itail) && itail > 0)) throw InvalidInput("Itail must be > 0");
  if (!(std::isfinite(c_load) && c_load > 0)) throw InvalidInput("Cload must be > 0");
  input_pair.validate();
  cascode.validate();
  tail.validate();
  memristors.validate();
  if (!(std::isfinite(vanabar_low) && vanabar_low >= 0 && vanabar_low < vdd))
    throw InvalidInput("Vanabar_low must lie in [0, VDD)");
  if (!(std::isfinite(v_onset) && v_onset > 0)) throw InvalidInput("Vonset must be > 0");
  if (!(std::isfinite(v_equil) && v_onset <= v_equil && v_equil < vdd))
    throw InvalidInput("require 0 < Vonset <= Vequil < VDD");
  if (!(std::isfinite(dlc.v_trigger) && dlc.v_trigger > 0))
    throw InvalidInput("DLC trigger voltage must be > 0");
  if (!(std::isfinite(dlc.conversion_energy) && dlc.conversion_energy >= 0))
    throw InvalidInput("DLC conversion energy must be >= 0");
}

MosOperatingPoint input_operating_point(const AmplifierDesign& d) {
  return small_signal(d.input_pair, d.half_tail());
}

MosOperatingPoint cascode_operating_point(const AmplifierDesign& d) {
  return small_signal(d.cascode, d.half_tail());
}

BranchImpedances branch_impedances(const AmplifierDesign& d) {
  const auto m4 = input_operating_point(d);
  const auto m6 = cascode_operating_point(d);
  if (!(m4.gm > 0 && m6.gm > 0)) throw RangeError("operating point unresolvable at Itail/2");
  const double r1 = d.memristors.r1, r2 = d.memristors.r2;

  BranchImpedances z;
  z.zs6_left = (1.0 / m6.gm) * (1.0 + r1 / m6.ro);
  z.zs6_right = (1.0 / m6.gm) * (1.0 + r2 / m6.ro);
  z.a = 1.0 / m4.gm + 1.0 / (m6.gm * m4.gm * m4.ro);
  z.b = 1.0 / (m6.gm * m6.ro * m4.gm * m4.ro);
  z.zs4_left = z.a + z.b * r1;
  z.zs4_right = z.a + z.b * r2;
  z.approximation_degraded = z.b >= 0.1;
  return z;
}

CurrentSplit current_split(const AmplifierDesign& d) { return current_split(d, d.itail); }

CurrentSplit current_split(const AmplifierDesign& d, double itail) {
  const auto z = branch_impedances(d);
  const double r1 = d.memristors.r1, r2 = d.memristors.r2;
  const double den = 2.0 * z.a + z.b * (r1 + r2);

  CurrentSplit s;
  s.il_exact = itail * (z.a + z.b * r2) / den;
  s.ir_exact = itail * (z.a + z.b * r1) / den;
  const double k = z.b / (2.0 * z.a) * (r1 - r2);
  s.il_approx = 0.5 * itail * (1.0 - k);
  s.ir_approx = 0.5 * itail * (1.0 + k);
  s.delta_i = -itail * k;
  return s;
}

double predict_offset(const AmplifierDesign& d) {
  const auto in = input_operating_point(d);
  const auto cas = cascode_operating_point(d);
  const double dr = d.memristors.r1 - d.memristors.r2;
  return -dr * d.itail / (2.0 * cas.ro * in.gm * (1.0 + cas.gm * in.ro));
}

GainForms closed_form_gain(const AmplifierDesign& d, double tau) {
  if (!(std::isfinite(tau) && tau >= 0)) throw InvalidInput("integration time must be >= 0");
  const double half = d.half_tail();
  const double te = 1.0 / (d.input_pair.n * d.input_pair.vt);
  const double gm = half * te;
  GainForms g;
  g.dv_mid = half * tau / d.c_load;
  g.transconductance = gm * tau / d.c_load;
  g.current = gm * g.dv_mid / half;
  g.efficiency = te * g.dv_mid;
  return g;
}

double integration_time_for_range(const AmplifierDesign& d, double dv_mid) {
  if (!std::isfinite(dv_mid)) throw InvalidInput("dVmid must be finite");
  if (dv_mid < 0 || dv_mid > d.v_equil)
    throw RangeError("dVmid must lie in [0, Vequil]");
  return dv_mid * d.c_load / d.half_tail();
}

InputRange input_range(const AmplifierDesign& d) {
  InputRange r;
  r.vgs4 = solve_gate_drive(d.input_pair, d.half_tail(), d.input_pair.vds_min());
  r.vgs6 = solve_gate_drive(d.cascode, d.half_tail(), d.cascode.vds_min());
  const double vds_sat3 = d.tail.vds_min();
  const double vds_min4 = d.input_pair.vds_min();
  r.vcm_max = d.vdd - vds_sat3 - r.vgs4;
  r.vcm_min = d.vanabar_low + r.vgs6 - r.vgs4 + vds_min4;
  r.max_anabar_low = d.vdd - vds_sat3 - vds_min4 - r.vgs6;
  r.feasible = r.vcm_min < r.vcm_max;
  return r;
}

double cmgd_closed_form(double dv_mid, double vgs) {
  if (!(std::isfinite(vgs) && vgs > 0)) throw InvalidInput("Vgs must be > 0");
  return -dv_mid / (vgs * vgs);
}

double gate_drive_gain(double dv_mid, double vgs) {
  if (!(std::isfinite(vgs) && vgs > 0)) throw InvalidInput("Vgs must be > 0");
  return dv_mid / vgs;
}

CommonModePoint common_mode_point(const AmplifierDesign& d, double vcm) {
  if (!std::isfinite(vcm)) throw InvalidInput("common-mode voltage must be finite");
  const auto& in = d.input_pair;
  const double vgs6 = solve_gate_drive(d.cascode, d.half_tail(), d.cascode.vds_min());

  CommonModePoint cm;
  cm.drain_voltage = d.vanabar_low + vgs6;
  const double vd = cm.drain_voltage;

  auto tail = [&](double vs) { return d.itail * -std::expm1(-(d.vdd - vs) / d.tail.vt); };
  auto pair = [&](double vs) {
    if (vs <= vd) return 0.0;
    const double drive = std::min(vs - vcm, in.vth);
    return 2.0 * subthreshold_current(in, -drive, -(vs - vd)).amps;
  };

  const double vs_hi = std::min(d.vdd, vcm + in.vth);
  if (vs_hi <= vd) {
    cm.source_voltage = vs_hi;
    cm.starved = true;
    return cm;
  }
  if (pair(vs_hi) < tail(vs_hi)) {
    cm.source_voltage = vs_hi;
    cm.tail_current = pair(vs_hi);
    cm.starved = true;
  } else {
    double lo = vd, hi = vs_hi;
    for (int i = 0; i < 200 && hi - lo > 1e-13; ++i) {
      const double mid = 0.5 * (lo + hi);
      if (pair(mid) < tail(mid))
        lo = mid;
      else
        hi = mid;
    }
    cm.source_voltage = 0.5 * (lo + hi);
    cm.tail_current = tail(cm.source_voltage);
  }

  const double u = (cm.source_voltage - vd) / in.vt;
  cm.pair_gain = u > 0 ? 1.0 / (1.0 + d.cascode.n / std::expm1(u)) : 0.0;
  cm.gm_diff = 0.5 * cm.tail_current / (in.n * in.vt) * cm.pair_gain;
  return cm;
}

}  // namespace integamp
