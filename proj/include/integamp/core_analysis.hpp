#pragma once

#include "integamp/devices.hpp"

namespace integamp {

/// Behavioural latched comparator: input threshold and fixed conversion energy.
struct ComparatorModel {
  double v_trigger = 0.45;
  double conversion_energy = 270e-15;
};

/// Nominal device operating targets shared by the design factories.
namespace nominal {
inline constexpr double kTargetGain = 25.0;
inline constexpr double kIntegrationTime = 150e-9;
inline constexpr double kOffsetSensitivity = 1e-9;  // V per ohm
inline constexpr double kInputGateDrive = 0.465;
inline constexpr double kCascodeGateDrive = 0.687;
inline constexpr double kInputThreshold = 0.805;
inline constexpr double kInputEarlyVoltage = 7.5;
inline constexpr double kOnsetVoltage = 1.275;
}  // namespace nominal

/// Linear-charge onset voltage -> self-termination knee that puts the gain peak at that voltage.
double equilibrium_for_onset(double v_onset, double vt);

TransistorParams nominal_input_pair();
TransistorParams nominal_cascode();
TransistorParams nominal_tail();

struct AmplifierDesign {
  double vdd = 1.8;
  double itail = 3e-6;
  double c_load = 200e-15;
  TransistorParams input_pair = nominal_input_pair();
  TransistorParams cascode = nominal_cascode();
  TransistorParams tail = nominal_tail();
  MemristorPair memristors{};
  double vanabar_low = 0.6;
  double v_onset = nominal::kOnsetVoltage;
  double v_equil = equilibrium_for_onset(nominal::kOnsetVoltage, kDefaultThermalVoltage);
  ComparatorModel dlc{};

  void validate() const;
  double half_tail() const { return 0.5 * itail; }
};

struct BranchImpedances {
  double zs6_left = 0.0;
  double zs6_right = 0.0;
  double zs4_left = 0.0;
  double zs4_right = 0.0;
  double a = 0.0;
  double b = 0.0;
  bool approximation_degraded = false;  // B >= 0.1
};

struct CurrentSplit {
  double il_exact = 0.0;
  double ir_exact = 0.0;
  double il_approx = 0.0;
  double ir_approx = 0.0;
  double delta_i = 0.0;
};

struct GainForms {
  double transconductance = 0.0;  // gm*tau/C
  double current = 0.0;           // gm*dVmid/(Itail/2)
  double efficiency = 0.0;        // TE*dVmid
  double dv_mid = 0.0;
};

struct InputRange {
  double vcm_min = 0.0;
  double vcm_max = 0.0;
  double max_anabar_low = 0.0;
  double vgs4 = 0.0;
  double vgs6 = 0.0;
  bool feasible = false;
};

/// Large-signal state of the input stage for a given common-mode input.
struct CommonModePoint {
  double tail_current = 0.0;   // delivered to the pair
  double source_voltage = 0.0; // common source node
  double drain_voltage = 0.0;  // pair drains (cascode sources)
  double pair_gain = 0.0;      // differential gm reduction from pair triode, 0..1
  double gm_diff = 0.0;        // effective differential transconductance
  bool starved = false;
};

MosOperatingPoint input_operating_point(const AmplifierDesign& d);
MosOperatingPoint cascode_operating_point(const AmplifierDesign& d);

BranchImpedances branch_impedances(const AmplifierDesign& d);

/// Tail split between branches; it defaults to the design's nominal tail current.
CurrentSplit current_split(const AmplifierDesign& d);
CurrentSplit current_split(const AmplifierDesign& d, double itail);

double predict_offset(const AmplifierDesign& d);

GainForms closed_form_gain(const AmplifierDesign& d, double tau);

double integration_time_for_range(const AmplifierDesign& d, double dv_mid);

InputRange input_range(const AmplifierDesign& d);

double cmgd_closed_form(double dv_mid, double vgs);

/// G = dVmid / Vgs, the gate-drive form used for the common-mode analysis.
double gate_drive_gain(double dv_mid, double vgs);

CommonModePoint common_mode_point(const AmplifierDesign& d, double vcm);

}  // namespace integamp
