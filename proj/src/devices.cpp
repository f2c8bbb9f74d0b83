#include "integamp/devices.hpp"

#include <cmath>
#include <limits>

#include "integamp/error.hpp"

namespace integamp {
namespace {

constexpr double kMaxExponent = 700.0;

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw InvalidInput(std::string(what) + " must be finite");
}

}  // namespace

const char* region_name(Region r) {
  switch (r) {
    case Region::Saturation: return "saturation";
    case Region::Triode: return "triode";
    case Region::Off: return "off";
  }
  return "unknown";
}

void TransistorParams::validate() const {
  if (!(std::isfinite(is) && is > 0)) throw InvalidInput("transistor Is must be > 0");
  if (!(std::isfinite(n) && n >= 1.0)) throw InvalidInput("transistor n must be >= 1");
  if (!(std::isfinite(va) && va > 0)) throw InvalidInput("transistor VA must be > 0");
  if (!(std::isfinite(m) && m >= 3.0 && m <= 4.0))
    throw InvalidInput("transistor m must lie in [3, 4]");
  if (!(std::isfinite(vt) && vt > 0)) throw InvalidInput("transistor VT must be > 0");
  require_finite(vth, "transistor Vth");
}

void MemristorPair::validate() const {
  if (!(std::isfinite(r1) && r1 > 0)) throw InvalidInput("memristor R1 must be > 0");
  if (!(std::isfinite(r2) && r2 > 0)) throw InvalidInput("memristor R2 must be > 0");
}

double thermal_voltage(double kelvin) {
  if (!(std::isfinite(kelvin) && kelvin > 0)) throw InvalidInput("temperature must be > 0 K");
  return kBoltzmann * kelvin / kElementaryCharge;
}

DrainCurrent subthreshold_current(const TransistorParams& p, double vgs, double vds) {
  require_finite(vgs, "Vgs");
  require_finite(vds, "Vds");
  const double vgs_eff = p.sign() * vgs;
  const double vds_eff = p.sign() * vds;
  if (vds_eff < 0) throw InvalidInput("Vds must be >= 0 after polarity normalisation");

  DrainCurrent out;
  double expo = vgs_eff / (p.n * p.vt);
  if (expo > kMaxExponent) {
    expo = kMaxExponent;
    out.clamped = true;
  }
  out.amps = p.is * std::exp(expo) * -std::expm1(-vds_eff / p.vt) * (1.0 + vds_eff / p.va);
  return out;
}

MosOperatingPoint small_signal(const TransistorParams& p, double id, std::optional<double> vds) {
  require_finite(id, "Id");
  if (id < 0) throw InvalidInput("Id must be >= 0");
  MosOperatingPoint op;
  op.id = id;
  if (id == 0) {
    op.gm = 0.0;
    op.ro = std::numeric_limits<double>::infinity();
    op.region = Region::Off;
    return op;
  }
  op.gm = id / (p.n * p.vt);
  op.ro = p.va / id;
  op.region = vds ? saturation_check(*vds, p) : Region::Saturation;
  return op;
}

Region saturation_check(double vds, const TransistorParams& p) {
  return std::fabs(vds) >= p.m * p.vt ? Region::Saturation : Region::Triode;
}

double solve_gate_drive(const TransistorParams& p, double id, double vds) {
  require_finite(id, "Id");
  if (id <= 0) throw InvalidInput("target Id must be > 0");
  const double s = p.sign();
  const double vds_phys = s * std::fabs(vds);
  auto current = [&](double drive) { return subthreshold_current(p, s * drive, vds_phys).amps; };

  double lo = -5.0, hi = 5.0;
  if (current(lo) > id || current(hi) < id)
    throw RangeError("gate drive for requested current lies outside [-5, 5] V");
  while (hi - lo > 1e-10) {
    const double mid = 0.5 * (lo + hi);
    if (current(mid) < id)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

TransistorParams with_gate_drive(TransistorParams p, double id, double vgs, double vds) {
  if (!(id > 0)) throw InvalidInput("target Id must be > 0");
  const double v = std::fabs(vds);
  p.is = id / (std::exp(vgs / (p.n * p.vt)) * -std::expm1(-v / p.vt) * (1.0 + v / p.va));
  return p;
}

}  // namespace integamp
