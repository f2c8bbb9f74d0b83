#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "integamp/error.hpp"
#include "integamp/metrology.hpp"
#include "oracles.hpp"

using namespace integamp;
using Catch::Approx;

namespace {

constexpr double kA = 75e-9;

AmplifierDesign with_r(double r1, double r2) {
  AmplifierDesign d;
  d.memristors = {r1, r2};
  return d;
}

}  // namespace

TEST_CASE("attenuation factor") {
  CHECK(attenuation_factor(0.0, kA) == 1.0);
  const double f_null = 1.0 / (2.0 * kA);
  CHECK(attenuation_factor(f_null, kA) == Approx(0.0).margin(1e-15));
  const double f_quarter = 1.0 / (4.0 * kA);
  CHECK(attenuation_factor(f_quarter, kA) == Approx(2.0 / std::numbers::pi).epsilon(1e-12));
  CHECK_THROWS_AS(attenuation_factor(1e3, 0.0), InvalidInput);
  CHECK_THROWS_AS(attenuation_factor(-1.0, kA), InvalidInput);
}

TEST_CASE("bandwidth definitions") {
  const double fc = bandwidth(kA, 0.2, BandwidthCriterion::FirstCrossing);
  CHECK(fc == Approx(oracle::sinc_root(0.2) / (2 * std::numbers::pi * kA)).epsilon(1e-4));
  CHECK(fc == Approx(5.4e6).margin(0.3e6));
  CHECK(bandwidth(0.5e-6, 0.2, BandwidthCriterion::Envelope) == Approx(1.5e6).margin(0.15e6));
  CHECK(bandwidth(0.5e-6, 0.2, BandwidthCriterion::Envelope) ==
        Approx(5.0 / (2 * std::numbers::pi * 0.5e-6)).epsilon(1e-12));
  CHECK(bandwidth(kA, 1.0, BandwidthCriterion::FirstCrossing) == 0.0);
  CHECK(bandwidth(kA, 1.0, BandwidthCriterion::Envelope) == 0.0);
  CHECK_THROWS_AS(bandwidth(kA, 0.0, BandwidthCriterion::Envelope), InvalidInput);
  CHECK_THROWS_AS(bandwidth(kA, 1.5, BandwidthCriterion::Envelope), InvalidInput);
}

TEST_CASE("property: first crossing lies below the envelope bandwidth") {
  // Below the first sidelobe peak (~0.2172) both definitions exist.
  for (double p = 0.01; p < 0.2172; p += 0.005) {
    INFO("p = " << p);
    CHECK(bandwidth(kA, p, BandwidthCriterion::FirstCrossing) <
          bandwidth(kA, p, BandwidthCriterion::Envelope));
    const double f = bandwidth(kA, p, BandwidthCriterion::FirstCrossing);
    CHECK(attenuation_factor(f, kA) == Approx(p).epsilon(1e-6));
  }
}

TEST_CASE("linear fit") {
  const std::vector<double> x{0, 1, 2, 3, 4};
  std::vector<double> y;
  for (double v : x) y.push_back(3.0 * v - 2.0);
  const auto f = fit_line(x, y);
  CHECK(f.slope == Approx(3.0).epsilon(1e-12));
  CHECK(f.intercept == Approx(-2.0).margin(1e-12));
  CHECK(f.r_squared == Approx(1.0).epsilon(1e-12));
  CHECK(f.mse == Approx(0.0).margin(1e-20));

  // Sxy = 8, Sxx = 10 around the means (2, 2).
  const std::vector<double> y2{1, 0, 3, 2, 4};
  const auto g = fit_line(x, y2);
  CHECK(g.slope == Approx(0.8).epsilon(1e-12));
  CHECK(g.intercept == Approx(0.4).epsilon(1e-12));
  CHECK(g.r_squared == Approx(0.64).epsilon(1e-12));
  CHECK_THROWS_AS(fit_line({1, 1}, {0, 1}), InvalidInput);
  CHECK_THROWS_AS(fit_line({1}, {0}), InvalidInput);
}

TEST_CASE("gain measurement") {
  const AmplifierDesign d;
  const ClockSchedule s;
  const auto m = measure_gain(d, s, default_gain_grid(), 1.1, {});
  CHECK(m.sweep.x.values.size() == 41);
  CHECK(m.excluded == 0);
  CHECK(m.gain == Approx(25.0).margin(2.5));
  CHECK(m.fit.r_squared >= 0.999);
  CHECK(oracle::rel(m.gain, closed_form_gain(d, s.t_integrate).transconductance) <= 0.05);
  // The zero-input point sits at the grid centre.
  CHECK(m.sweep.y.values[20] == Approx(0.0).margin(1e-12));
  REQUIRE(m.sweep.fit);

  const auto half = measure_gain(d, s, default_gain_grid(), 1.1, {0.05e-9, 1});
  CHECK(oracle::rel(half.gain, m.gain) <= 0.01);
}

TEST_CASE("bandwidth profile") {
  const AmplifierDesign d;
  const ClockSchedule s;
  const double a = 0.5 * s.t_integrate;
  const std::vector<double> f{1.0, 1e4, 1e6, 3e6, 1.0 / (2 * a), 10e6, 17e6, 26e6};
  const auto r = bandwidth_profile(d, s, f, {}, {});
  const auto& resp = r.y.values;
  REQUIRE(resp.size() == f.size());
  CHECK(resp[0] == Approx(1.0).margin(0.01));
  CHECK(1.0 - resp[1] <= 0.002);
  CHECK(resp[4] <= 0.02);
  for (std::size_t i = 0; i < f.size(); ++i) {
    INFO("f = " << f[i]);
    CHECK(std::fabs(resp[i] - attenuation_factor(f[i], a)) <= 0.02);
    if (f[i] * s.t_integrate > 1.0) CHECK(resp[i] <= 1.0 / (2 * std::numbers::pi * f[i] * a) + 0.02);
  }
  BandwidthOptions bad;
  bad.phase_step_deg = 7.0;
  CHECK_THROWS_AS(bandwidth_profile(d, s, f, bad, {}), InvalidInput);
}

TEST_CASE("offset flip tracking") {
  const ClockSchedule s;
  const TriangleSpec sweep;
  CHECK(sweep.resolution() == Approx(2e-6).epsilon(1e-12));

  const auto bal = offset_flip_tracking(AmplifierDesign{}, s, sweep, {});
  REQUIRE(bal.vos());
  CHECK(std::fabs(*bal.vos()) <= bal.resolution);
  CHECK(bal.consistent());

  const auto pos = offset_flip_tracking(with_r(10e3, 100e3), s, sweep, {});
  REQUIRE(pos.vos());
  CHECK(*pos.vos() == Approx(90e-6).margin(10e-6));
  CHECK(pos.consistent());

  const auto neg = offset_flip_tracking_two_pass(with_r(100e3, 10e3), s, sweep, {});
  REQUIRE(neg.vos());
  CHECK(*neg.vos() == Approx(-85e-6).margin(10e-6));
  CHECK(neg.consistent());

  // A sweep that cannot reach the offset finds no flip.
  TriangleSpec narrow;
  narrow.half_range = 20e-6;
  CHECK_FALSE(offset_flip_tracking(with_r(10e3, 130e3), s, narrow, {}).vos());
}

TEST_CASE("offset table") {
  const ClockSchedule s;
  const auto rs = default_offset_resistances();
  REQUIRE(rs.size() == 5);
  const auto t = offset_table(AmplifierDesign{}, s, rs, {});
  REQUIRE(t.complete());
  const double res = t.resolution;
  for (std::size_t i = 0; i < rs.size(); ++i)
    for (std::size_t j = 0; j < rs.size(); ++j) {
      const double v = *t.vos(i, j);
      INFO("R1 = " << rs[i] << " R2 = " << rs[j]);
      if (i == j) CHECK(std::fabs(v) <= res);
      if (rs[j] > rs[i]) CHECK(v > 0);
      if (rs[j] < rs[i]) CHECK(v < 0);
      CHECK(std::fabs(v + *t.vos(j, i)) <= 2 * res);
      CHECK(t.cells[i][j].consistent());
    }
  CHECK(*t.vos(0, 4) == Approx(120e-6).margin(15e-6));
  CHECK(t.tuning_range() == Approx(235e-6).epsilon(0.2));
  CHECK(t.mean_sensitivity() == Approx(1e-9).margin(0.3e-9));
}

TEST_CASE("property: sweeps are independent of the job count") {
  const ClockSchedule s;
  const std::vector<double> rs{10e3, 70e3, 130e3};
  const auto a = offset_table(AmplifierDesign{}, s, rs, {0.1e-9, 1});
  const auto b = offset_table(AmplifierDesign{}, s, rs, {0.1e-9, 3});
  for (std::size_t i = 0; i < rs.size(); ++i)
    for (std::size_t j = 0; j < rs.size(); ++j) {
      CHECK(a.cells[i][j].ascending == b.cells[i][j].ascending);
      CHECK(a.cells[i][j].descending == b.cells[i][j].descending);
    }
  const auto g1 = measure_gain(AmplifierDesign{}, s, default_gain_grid(), 1.1, {0.1e-9, 1});
  const auto g2 = measure_gain(AmplifierDesign{}, s, default_gain_grid(), 1.1, {0.1e-9, 4});
  CHECK(g1.sweep.y.values == g2.sweep.y.values);
}

TEST_CASE("noise spectra") {
  const double gm = 33.3e-6;
  NoiseParams np;
  const double floor = 4 * oracle::kBoltzmann * 300.0 * (2.0 / 3.0) / gm;
  CHECK(floor == Approx(3.32e-16).epsilon(0.01));
  const auto sp = noise_pipeline(np, gm, 25.0, kA);
  CHECK(sp.device_psd.back() == Approx(floor).epsilon(1e-4));
  for (std::size_t i = 0; i < sp.freq.size(); ++i) {
    const double lam = attenuation_factor(sp.freq[i], kA);
    CHECK(sp.input_moderated[i] <= sp.input_unmoderated[i]);
    CHECK(sp.input_moderated[i] == Approx(sp.input_unmoderated[i] * lam * lam).epsilon(1e-12));
    CHECK(sp.output_unmoderated[i] == Approx(sp.input_unmoderated[i] * 625.0).epsilon(1e-12));
  }
  // Closed-form band integral of 2 * floor * (1 + fc/f).
  const double ms = 2 * floor * ((np.f_hi - np.f_lo) + np.fc * std::log(np.f_hi / np.f_lo));
  CHECK(sp.rms_input_unmoderated == Approx(std::sqrt(ms)).epsilon(1e-4));
  CHECK(sp.rms_output_unmoderated == Approx(25.0 * sp.rms_input_unmoderated).epsilon(1e-12));

  const auto fc = flicker_corner(sp);
  REQUIRE(fc);
  CHECK(*fc == Approx(250.0).epsilon(0.01));
  CHECK_THROWS_AS(noise_pipeline(np, 0.0, 25.0, kA), InvalidInput);
  NoiseParams bad;
  bad.f_lo = 10.0;
  bad.f_hi = 1.0;
  CHECK_THROWS_AS(noise_pipeline(bad, gm, 25.0, kA), InvalidInput);
}

TEST_CASE("white noise moderation follows the equivalent noise bandwidth") {
  NoiseParams np;
  np.fc = 0.0;
  const auto sp = noise_pipeline(np, 33.3e-6, 25.0, kA);
  const double expected = std::sqrt((1.0 / (4 * kA)) / (np.f_hi - np.f_lo));
  CHECK(sp.rms_input_moderated / sp.rms_input_unmoderated == Approx(expected).epsilon(0.05));
}

TEST_CASE("moderated RMS matches an independent quadrature") {
  NoiseParams np;
  np.excess = 3.0;
  const double gm = 33.3e-6;
  const auto sp = noise_pipeline(np, gm, 25.0, kA);
  const double floor = 3.0 * 4 * oracle::kBoltzmann * 300.0 * (2.0 / 3.0) / gm;
  // Integrate in log frequency: df = f du.
  auto integrand = [&](double u) {
    const double f = std::exp(u);
    const double x = 2 * std::numbers::pi * f * kA;
    const double s = std::sin(x) / x;
    return 2 * floor * (1 + np.fc / f) * s * s * f;
  };
  const double ms = oracle::simpson(integrand, std::log(np.f_lo), std::log(np.f_hi), 400000);
  CHECK(sp.rms_input_moderated == Approx(std::sqrt(ms)).epsilon(0.005));
}

TEST_CASE("property: moderated envelope decays as f^-2") {
  NoiseParams np;
  np.fc = 0.0;
  np.f_hi = 5e8;
  const auto sp = noise_pipeline(np, 33.3e-6, 1.0, kA);
  // Local maxima beyond the fifth sidelobe.
  const double f_start = 5.5 / (2 * kA);
  std::vector<double> lx, ly;
  for (std::size_t i = 1; i + 1 < sp.freq.size(); ++i) {
    if (sp.freq[i] < f_start) continue;
    const auto& p = sp.input_moderated;
    if (p[i] > p[i - 1] && p[i] >= p[i + 1]) {
      lx.push_back(std::log(sp.freq[i]));
      ly.push_back(std::log(p[i]));
    }
  }
  REQUIRE(lx.size() >= 3);
  const auto fit = fit_line(lx, ly);
  CHECK(fit.slope == Approx(-2.0).margin(0.1));
}

TEST_CASE("noise calibration and compensation") {
  const AmplifierDesign d;
  const double gm = input_operating_point(d).gm;
  const double g = closed_form_gain(d, 150e-9).transconductance;
  NoiseParams np;
  np.excess = calibrate_noise_excess(np, gm, g, kA, 350e-6);
  CHECK(np.excess == Approx(3.7).margin(0.1));
  const auto sp = noise_pipeline(np, gm, g, kA);
  CHECK(sp.rms_input_unmoderated == Approx(350e-6).epsilon(1e-9));
  CHECK(sp.moderation_saving() > 0.5);
  CHECK_THROWS_AS(calibrate_noise_excess(np, gm, g, kA, 0.0), InvalidInput);
  CHECK(compensation_equilibrium(330e3, 3e-6) == Approx(0.495).epsilon(1e-12));
}

TEST_CASE("input range sweep") {
  const auto r = input_range_sweep(AmplifierDesign{}, ClockSchedule{}, {}, {});
  CHECK(r.sweep.x.values.size() == 37);
  REQUIRE(r.dlc_range);
  CHECK(r.dlc_range->first == Approx(0.5).margin(0.1));
  CHECK(r.dlc_range->second == Approx(1.4).margin(0.1));
  REQUIRE(r.max_gain_range);
  CHECK(r.max_gain_range->first == Approx(0.9).margin(0.1));
  CHECK(r.max_gain_range->second == Approx(1.3).margin(0.1));
  CHECK(r.max_gain_range->first >= r.dlc_range->first);
  CHECK(r.max_gain_range->second <= r.dlc_range->second);
}

TEST_CASE("starved amplifier does not trigger") {
  const auto res = run_cycle(AmplifierDesign{}, ClockSchedule{}, dc_pair(0.0, 50e-6), 0.1e-9);
  CHECK_FALSE(res.record.triggered);
  CHECK_FALSE(res.record.outa);
  CHECK_FALSE(res.record.outb);
}

TEST_CASE("CMGD dB conventions") {
  CHECK(cmgd_db(25.0, 0.25, CmgdConvention::GainOverSlope) == Approx(40.0).epsilon(1e-12));
  CHECK(cmgd_db(25.0, 0.1, CmgdConvention::InverseSlope) == Approx(20.0).epsilon(1e-12));
  CHECK(std::isinf(cmgd_db(25.0, 0.0, CmgdConvention::GainOverSlope)));
}

TEST_CASE("CMGD sweep") {
  const AmplifierDesign d;
  const auto r = cmgd_sweep(d, ClockSchedule{}, {}, {});
  REQUIRE(r.plateau);
  REQUIRE(r.region);
  CHECK(r.region->first == Approx(0.99).margin(0.05));
  CHECK(r.region->second == Approx(1.14).margin(0.05));
  const auto change = r.max_relative_change(0.15);
  REQUIRE(change);
  CHECK(*change <= 0.015);

  // Inside the 20 dB region the simulated slope never exceeds the closed-form magnitude.
  const double vgs4 = input_range(d).vgs4;
  const double bound = std::fabs(cmgd_closed_form(closed_form_gain(d, 150e-9).dv_mid, vgs4));
  const auto& x = r.derivative.x.values;
  const auto& slope = r.derivative.y.values;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (x[i] >= r.region->first && x[i] <= r.region->second) CHECK(std::fabs(slope[i]) <= bound);
}

TEST_CASE("slope-factor calibration") {
  const AmplifierDesign d;
  const auto c = calibrate_te(d, 25.0, 150e-9);
  CHECK(c.input_pair.n == Approx(1.125 / (25 * 0.02585)).epsilon(1e-9));
  CHECK(closed_form_gain(c, 150e-9).transconductance == Approx(25.0).epsilon(1e-9));
  const double vds = c.input_pair.vds_min();
  CHECK(solve_gate_drive(c.input_pair, c.half_tail(), vds) ==
        Approx(solve_gate_drive(d.input_pair, d.half_tail(), vds)).margin(1e-9));
  const auto unity = calibrate_te(d, 1.125 / 0.02585, 150e-9);
  CHECK(unity.input_pair.n == Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(calibrate_te(d, 100.0, 150e-9), RangeError);
  CHECK_THROWS_AS(calibrate_te(d, 0.0, 150e-9), InvalidInput);
}

TEST_CASE("offset-sensitivity calibration") {
  const AmplifierDesign d;
  const auto c = calibrate_offset_sensitivity(d, 1e-9);
  const double ro = cascode_operating_point(c).ro;
  CHECK(ro == Approx(270e3).epsilon(0.02));
  auto sens = [](AmplifierDesign x) {
    x.memristors = {10e3, 40e3};
    return std::fabs(predict_offset(x) / 30e3);
  };
  CHECK(sens(c) == Approx(1e-9).epsilon(1e-6));
  const auto c2 = calibrate_offset_sensitivity(d, 2e-9);
  CHECK(cascode_operating_point(c2).ro == Approx(ro / 2).epsilon(1e-6));
  CHECK_THROWS_AS(calibrate_offset_sensitivity(d, 0.0), InvalidInput);
}

TEST_CASE("peak-time calibration") {
  const AmplifierDesign d;
  const auto c = calibrate_peak_time(d, 170e-9, 0.1e-9);
  CHECK(c.v_onset == Approx(1.275).epsilon(1e-12));
  const auto tp = peak_gain_time(run_unrestricted(c, 100e-6, 1.1, 400e-9, 0.1e-9));
  REQUIRE(tp);
  CHECK(std::fabs(*tp - 170e-9) <= 0.1e-9 * 1.0001);
  CHECK_THROWS_AS(calibrate_peak_time(d, 0.0, 0.1e-9), InvalidInput);
}
