#pragma once

#include <optional>

namespace integamp {

inline constexpr double kBoltzmann = 1.380649e-23;
inline constexpr double kElementaryCharge = 1.602176634e-19;
inline constexpr double kDefaultThermalVoltage = 0.02585;

enum class Polarity { NType, PType };

enum class Region { Saturation, Triode, Off };

const char* region_name(Region r);

/// Weak-inversion MOSFET description. Voltages passed to the device functions
/// are physical (signed); the polarity flag normalises them.
struct TransistorParams {
  Polarity polarity = Polarity::NType;
  double is = 1e-12;
  double n = 1.5;
  double vth = 0.45;
  double va = 10.0;
  double m = 4.0;
  double vt = kDefaultThermalVoltage;

  void validate() const;
  double sign() const { return polarity == Polarity::PType ? -1.0 : 1.0; }
  double vds_min() const { return m * vt; }
};

struct DrainCurrent {
  double amps = 0.0;
  bool clamped = false;
};

struct MosOperatingPoint {
  double id = 0.0;
  double gm = 0.0;
  double ro = 0.0;
  Region region = Region::Off;
};

struct MemristorPair {
  double r1 = 70e3;
  double r2 = 70e3;

  void validate() const;
};

double thermal_voltage(double kelvin);

/// Is*exp(Vgs/(n*VT))*(1 - exp(-Vds/VT))*(1 + Vds/VA) with polarity-normalised Vgs, Vds.
DrainCurrent subthreshold_current(const TransistorParams& p, double vgs, double vds);

/// Small-signal parameters at drain current id. Without vds the device is assumed saturated.
MosOperatingPoint small_signal(const TransistorParams& p, double id,
                               std::optional<double> vds = std::nullopt);

Region saturation_check(double vds, const TransistorParams& p);

/// Polarity-normalised gate drive giving drain current id at drain bias |vds|.
double solve_gate_drive(const TransistorParams& p, double id, double vds);

/// Returns p with Is chosen so that gate drive vgs gives id at |vds|.
TransistorParams with_gate_drive(TransistorParams p, double id, double vgs, double vds);

}  // namespace integamp
