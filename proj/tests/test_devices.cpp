#include <catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <random>

#include "integamp/devices.hpp"
#include "integamp/error.hpp"
#include "oracles.hpp"

using namespace integamp;
using Catch::Approx;

namespace {

TransistorParams nmos() {
  TransistorParams p;
  p.is = 1e-12;
  p.n = 1.5;
  p.va = 7.5;
  return p;
}

TransistorParams random_params(std::mt19937& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  TransistorParams p;
  p.polarity = u(rng) < 0.5 ? Polarity::NType : Polarity::PType;
  p.is = std::pow(10.0, -16.0 + 6.0 * u(rng));
  p.n = 1.0 + 1.5 * u(rng);
  p.va = 0.5 + 20.0 * u(rng);
  p.m = 3.0 + u(rng);
  return p;
}

}  // namespace

TEST_CASE("zero drain bias gives zero current") {
  for (double vgs : {-0.3, 0.0, 0.2, 0.6}) CHECK(subthreshold_current(nmos(), vgs, 0.0).amps == 0.0);
}

TEST_CASE("saturation factor at four thermal voltages") {
  const auto p = nmos();
  const double vds = 4 * p.vt;
  const double id = subthreshold_current(p, 0.3, vds).amps;
  const double without = p.is * std::exp(0.3 / (p.n * p.vt)) * (1 + vds / p.va);
  CHECK(id / without == Approx(0.98168).epsilon(1e-5));
  CHECK(id / without == Approx(1 - std::exp(-4.0)).epsilon(1e-12));
}

TEST_CASE("small-signal parameters") {
  TransistorParams p = nmos();
  p.n = 1.742;
  const auto op = small_signal(p, 1.5e-6);
  CHECK(op.gm == Approx(33.31e-6).epsilon(2e-4));
  CHECK(op.gm == Approx(oracle::gm(1.5e-6, 1.742)).epsilon(1e-14));
  CHECK(op.region == Region::Saturation);

  p.va = 7.5;
  CHECK(small_signal(p, 1.5e-6).ro == Approx(5e6).epsilon(1e-12));

  const auto off = small_signal(p, 0.0);
  CHECK(off.gm == 0.0);
  CHECK(std::isinf(off.ro));
  CHECK(off.region == Region::Off);

  CHECK(small_signal(p, 1e-6, 0.01).region == Region::Triode);
  CHECK_THROWS_AS(small_signal(p, -1e-9), InvalidInput);
}

TEST_CASE("saturation check boundaries") {
  TransistorParams p;
  p.m = 4;
  p.vt = 0.02585;
  CHECK(saturation_check(0.2, p) == Region::Saturation);
  CHECK(saturation_check(0.0, p) == Region::Triode);
  CHECK(saturation_check(p.m * p.vt, p) == Region::Saturation);
  CHECK(saturation_check(std::nextafter(p.m * p.vt, 0.0), p) == Region::Triode);
  CHECK(saturation_check(-0.2, p) == Region::Saturation);
}

TEST_CASE("polarity normalisation") {
  TransistorParams n = nmos(), pm = nmos();
  pm.polarity = Polarity::PType;
  CHECK(subthreshold_current(pm, -0.4, -0.2).amps == subthreshold_current(n, 0.4, 0.2).amps);
  CHECK_THROWS_AS(subthreshold_current(pm, -0.4, 0.2), InvalidInput);
  CHECK_THROWS_AS(subthreshold_current(n, 0.4, -0.2), InvalidInput);
}

TEST_CASE("invalid inputs and exponent clamp") {
  const auto p = nmos();
  CHECK_THROWS_AS(subthreshold_current(p, std::nan(""), 0.1), InvalidInput);
  CHECK_THROWS_AS(subthreshold_current(p, 0.1, std::numeric_limits<double>::infinity()), InvalidInput);
  const auto big = subthreshold_current(p, 100.0, 0.2);
  CHECK(big.clamped);
  CHECK(std::isfinite(big.amps));
  CHECK_FALSE(subthreshold_current(p, 0.3, 0.2).clamped);
}

TEST_CASE("parameter validation") {
  TransistorParams p;
  CHECK_NOTHROW(p.validate());
  p.n = 0.9;
  CHECK_THROWS_AS(p.validate(), InvalidInput);
  p = {};
  p.m = 5;
  CHECK_THROWS_AS(p.validate(), InvalidInput);
  p = {};
  p.va = 0;
  CHECK_THROWS_AS(p.validate(), InvalidInput);
  p = {};
  p.is = -1;
  CHECK_THROWS_AS(p.validate(), InvalidInput);

  MemristorPair m{1e3, 10e6};
  CHECK_NOTHROW(m.validate());
  m.r1 = 0;
  CHECK_THROWS_AS(m.validate(), InvalidInput);
}

TEST_CASE("thermal voltage at 300 K") {
  CHECK(thermal_voltage(300.0) == Approx(0.025852).epsilon(1e-4));
  CHECK_THROWS_AS(thermal_voltage(0.0), InvalidInput);
}

TEST_CASE("gate drive inversion round trip") {
  TransistorParams p = nmos();
  p = with_gate_drive(p, 1.5e-6, 0.465, p.vds_min());
  CHECK(subthreshold_current(p, 0.465, p.vds_min()).amps == Approx(1.5e-6).epsilon(1e-12));
  CHECK(solve_gate_drive(p, 1.5e-6, p.vds_min()) == Approx(0.465).margin(1e-6));
  CHECK_THROWS_AS(solve_gate_drive(p, 0.0, 0.2), InvalidInput);
}

TEST_CASE("property: gm * n * VT equals Id in saturation") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> lid(-10.0, -4.0);
  for (int i = 0; i < 500; ++i) {
    const auto p = random_params(rng);
    const double id = std::pow(10.0, lid(rng));
    const auto op = small_signal(p, id, p.m * p.vt);
    REQUIRE(op.region == Region::Saturation);
    CHECK(op.gm * (p.n * p.vt) == Approx(id).epsilon(1e-15));
  }
}

TEST_CASE("property: current strictly increasing in gate drive") {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 300; ++i) {
    const auto p = random_params(rng);
    const double s = p.sign();
    const double vds = s * (0.001 + 0.5 * u(rng));
    double prev = -1;
    for (double drive = -0.2; drive <= 0.8; drive += 0.01) {
      const double id = subthreshold_current(p, s * drive, vds).amps;
      REQUIRE(id > prev);
      prev = id;
    }
  }
}

TEST_CASE("property: above m*VT, Vds enters only through the Early term") {
  std::mt19937 rng(13);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 500; ++i) {
    const auto p = random_params(rng);
    const double v1 = 4 * p.vt + 0.5 * u(rng), v2 = 4 * p.vt + 0.5 * u(rng);
    const double s = p.sign();
    const double r = subthreshold_current(p, s * 0.3, s * v2).amps / subthreshold_current(p, s * 0.3, s * v1).amps;
    const double early = (1 + v2 / p.va) / (1 + v1 / p.va);
    CHECK(std::fabs(r / early - 1.0) <= 0.02);
  }
}
