#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "modhealth/curves.hpp"
#include "modhealth/simulate.hpp"

using namespace modhealth;
using namespace modhealth::sim;
using Catch::Approx;

namespace {

ModuleSpec three_cell_module(std::vector<double> sohs, std::vector<double> rs) {
  ModuleSpec m;
  for (std::size_t i = 0; i < sohs.size(); ++i) m.cells.push_back({3.0, sohs[i], rs[i]});
  return m;
}

// independent oracle: dense bisection on the terminal-voltage balance
std::vector<double> bisect_current_split(const ModuleSpec& m, const std::vector<double>& socs,
                                         double i_total) {
  auto net = [&](double v) {
    double s = -i_total;
    for (std::size_t i = 0; i < m.cells.size(); ++i) {
      s += (v - m.ocv->value(socs[i])) / m.cells[i].series_resistance_ohm;
    }
    return s;
  };
  double lo = 0.0, hi = 10.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (net(mid) > 0.0 ? hi : lo) = mid;
  }
  const double v = 0.5 * (lo + hi);
  std::vector<double> currents;
  for (std::size_t i = 0; i < m.cells.size(); ++i) {
    currents.push_back((v - m.ocv->value(socs[i])) / m.cells[i].series_resistance_ohm);
  }
  return currents;
}

curves::DifferentialCurve ic_of(const QVProfile& p) {
  const auto model = curves::fit_qv_model(p, {}, curves::Orientation::q_of_v);
  return curves::compute_ic_curve(model, curves::uniform_grid(model));
}

}  // namespace

TEST_CASE("identical cells split the current evenly", "[simulate]") {
  const auto m = three_cell_module({0.9, 0.9, 0.9}, {0.02, 0.02, 0.02});
  const auto split = solve_current_split(m, {0.4, 0.4, 0.4}, 3.0);
  for (const double i : split.cell_currents_a) CHECK(i == Approx(1.0).epsilon(1e-12));
}

TEST_CASE("the lower-OCV cell draws more current", "[simulate]") {
  ModuleSpec m;
  m.cells = {{3.0, 1.0, 0.02}, {3.0, 1.0, 0.02}};
  const auto split = solve_current_split(m, {0.2, 0.6}, 2.0);  // OCV(0.2) < OCV(0.6)
  CHECK(split.cell_currents_a[0] > split.cell_currents_a[1]);
}

TEST_CASE("current split matches a dense bisection oracle", "[simulate]") {
  const auto m = three_cell_module({1.0, 1.0, 1.0}, {0.015, 0.018, 0.021});
  const std::vector<double> socs{0.3, 0.3, 0.3};
  const auto split = solve_current_split(m, socs, 4.5);
  const auto oracle = bisect_current_split(m, socs, 4.5);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(split.cell_currents_a[i] == Approx(oracle[i]).margin(1e-9));
  }
  // Kirchhoff
  const double sum = split.cell_currents_a[0] + split.cell_currents_a[1] +
                     split.cell_currents_a[2];
  CHECK(std::fabs(sum - 4.5) <= 1e-9);
}

TEST_CASE("oracle agreement off the symmetric point", "[simulate]") {
  const auto m = three_cell_module({0.99, 0.81, 0.78}, {0.015, 0.025, 0.03});
  const std::vector<double> socs{0.35, 0.52, 0.61};
  const auto split = solve_current_split(m, socs, 4.5);
  const auto oracle = bisect_current_split(m, socs, 4.5);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(split.cell_currents_a[i] == Approx(oracle[i]).margin(1e-9));
  }
}

TEST_CASE("full cells signal charge completion", "[simulate]") {
  const auto m = three_cell_module({0.9, 0.9, 0.9}, {0.02, 0.02, 0.02});
  const auto split = solve_current_split(m, {1.0, 1.0, 1.0}, 3.0);
  CHECK(split.charge_complete);
  CHECK(split.cell_currents_a.empty());
}

TEST_CASE("current split input validation", "[simulate]") {
  const auto m = three_cell_module({0.9, 0.9, 0.9}, {0.02, 0.02, 0.02});
  CHECK_THROWS_AS(solve_current_split(m, {0.5, 0.5}, 3.0), InputError);
  CHECK_THROWS_AS(solve_current_split(m, {0.5, 0.5, 1.4}, 3.0), InputError);
  CHECK_THROWS_AS(solve_current_split(m, {0.5, 0.5, 0.5}, 0.0), InputError);
  ModuleSpec bad = m;
  bad.cells[0].c_soh = 1.5;
  CHECK_THROWS_AS(solve_current_split(bad, {0.5, 0.5, 0.5}, 3.0), InputError);
}

TEST_CASE("single-cell module capacity matches the SoC window", "[simulate]") {
  ModuleSpec m;
  m.cells = {{3.0, 0.85, 0.02}};
  SimulationConfig cfg;
  const auto result = simulate_cc_charge(m, cfg);
  // SoC at which OCV(s) + I R = v_max
  const double i_cell = cfg.c_rate * 3.0;
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 100; ++it) {
    const double mid = 0.5 * (lo + hi);
    (m.ocv->value(mid) + i_cell * 0.02 > cfg.v_max ? hi : lo) = mid;
  }
  const double expected_ah = 0.85 * 3.0 * (0.5 * (lo + hi));
  CHECK(result.profile.samples.back().capacity_ah ==
        Approx(expected_ah).epsilon(0.005));
}

TEST_CASE("three identical cells behave like one cell scaled by three", "[simulate]") {
  SimulationConfig cfg;
  cfg.output_stride = 5;
  ModuleSpec one;
  one.cells = {{3.0, 0.9, 0.02}};
  ModuleSpec three = three_cell_module({0.9, 0.9, 0.9}, {0.02, 0.02, 0.02});
  const auto r1 = simulate_cc_charge(one, cfg);
  const auto r3 = simulate_cc_charge(three, cfg);
  const auto n = std::min(r1.profile.samples.size(), r3.profile.samples.size());
  REQUIRE(n > 100);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    CHECK(r3.profile.samples[i].voltage_v ==
          Approx(r1.profile.samples[i].voltage_v).margin(1e-9));
    CHECK(r3.profile.samples[i].capacity_ah ==
          Approx(3.0 * r1.profile.samples[i].capacity_ah).margin(1e-9));
  }
}

TEST_CASE("simulation invariants: Kirchhoff, shared voltage, conservation, monotone",
          "[simulate]") {
  const auto m = three_cell_module({0.95, 0.84, 0.8}, {0.02, 0.026, 0.028});
  SimulationConfig cfg;
  const auto result = simulate_cc_charge(m, cfg);
  CHECK(result.max_kirchhoff_residual_a <= 1e-9);
  CHECK(result.max_voltage_residual_v <= cfg.solver_tolerance_v);
  const double q_cells = result.cell_charge_ah[0] + result.cell_charge_ah[1] +
                         result.cell_charge_ah[2];
  CHECK(q_cells == Approx(result.profile.samples.back().capacity_ah).epsilon(0.001));
  for (std::size_t i = 1; i < result.profile.samples.size(); ++i) {
    CHECK(result.profile.samples[i].capacity_ah >=
          result.profile.samples[i - 1].capacity_ah);
    CHECK(result.profile.samples[i].voltage_v >= result.profile.samples[i - 1].voltage_v);
  }
  CHECK(result.profile.samples.front().voltage_v == Approx(cfg.v_min).margin(0.12));
  CHECK(result.profile.samples.back().voltage_v == Approx(cfg.v_max).margin(0.01));
}

TEST_CASE("interconnect resistance shifts the recorded terminal voltage", "[simulate]") {
  auto m = three_cell_module({0.9, 0.9, 0.9}, {0.02, 0.02, 0.02});
  SimulationConfig cfg;
  const auto base = simulate_cc_charge(m, cfg);
  m.interconnect_resistance_ohm = 0.002;
  const auto shifted = simulate_cc_charge(m, cfg);
  const double i_total = cfg.c_rate * 9.0;
  CHECK(shifted.profile.samples.front().voltage_v ==
        Approx(base.profile.samples.front().voltage_v + i_total * 0.002).margin(1e-9));
}

TEST_CASE("starting above v_max is an error", "[simulate]") {
  const auto m = three_cell_module({0.9, 0.9, 0.9}, {0.02, 0.02, 0.02});
  SimulationConfig cfg;
  cfg.v_max = 3.01;  // below OCV(0) + IR
  CHECK_THROWS_AS(simulate_cc_charge(m, cfg), InputError);
}

TEST_CASE("heterogeneous modules distort the IC curve", "[simulate]") {
  SimulationConfig cfg;
  const auto hetero = simulate_cc_charge(
      three_cell_module({0.992, 0.806, 0.785}, {0.021, 0.032, 0.033}), cfg);
  const double mean_soh = (0.992 + 0.806 + 0.785) / 3.0;
  const auto homo = simulate_cc_charge(
      three_cell_module({mean_soh, mean_soh, mean_soh}, {0.021, 0.032, 0.033}), cfg);

  // same mean C-SoH to within the windowing effect
  CHECK(hetero.profile.samples.back().capacity_ah ==
        Approx(homo.profile.samples.back().capacity_ah).epsilon(0.03));

  const auto ic_h = ic_of(hetero.profile);
  const auto ic_o = ic_of(homo.profile);

  // numerical noise floor: same homogeneous module at a different recording stride
  SimulationConfig alt = cfg;
  alt.output_stride = 7;
  const auto homo_alt = simulate_cc_charge(
      three_cell_module({mean_soh, mean_soh, mean_soh}, {0.021, 0.032, 0.033}), alt);
  const auto ic_alt = ic_of(homo_alt.profile);

  auto max_gap = [](const curves::DifferentialCurve& a, const curves::DifferentialCurve& b) {
    const double lo = std::max(a.grid.front(), b.grid.front());
    const double hi = std::min(a.grid.back(), b.grid.back());
    double gap = 0.0;
    for (std::size_t i = 0; i < a.grid.size(); ++i) {
      const double x = a.grid[i];
      if (x < lo || x > hi) continue;
      const auto it = std::lower_bound(b.grid.begin(), b.grid.end(), x);
      const auto j = std::min<std::size_t>(it - b.grid.begin(), b.grid.size() - 1);
      gap = std::max(gap, std::fabs(a.values[i] - b.values[j]));
    }
    return gap;
  };
  const double distortion = max_gap(ic_h, ic_o);
  const double noise_floor = max_gap(ic_o, ic_alt);
  INFO("distortion " << distortion << " vs noise floor " << noise_floor);
  CHECK(distortion > 5.0 * noise_floor);
  CHECK(distortion > 0.05);
}

TEST_CASE("fleet of 78 modules at two C-rates yields 156 datapoints", "[simulate]") {
  FleetConfig fc;
  fc.n_modules = 78;
  fc.sim.timestep_s = 4.0;  // coarse: this test only counts datapoints
  fc.sim.output_stride = 4;
  const auto fleet = generate_fleet(fc);
  CHECK(fleet.size() == 156);
  // each module appears once per C-rate
  std::map<std::string, int> seen;
  for (const auto& dp : fleet) seen[dp.module_id]++;
  CHECK(seen.size() == 78);
  for (const auto& [id, n] : seen) CHECK(n == 2);
}

TEST_CASE("point-mass fleet of fresh cells has trivial labels", "[simulate]") {
  FleetConfig fc;
  fc.n_modules = 1;
  fc.sampler.kind = CSohSampler::Kind::point;
  fc.sampler.value = 1.0;
  fc.c_rates = {0.5};
  const auto fleet = generate_fleet(fc);
  REQUIRE(fleet.size() == 1);
  CHECK(fleet[0].labels.m_soh == 1.0);
  CHECK(fleet[0].labels.sd == 0.0);
  CHECK(fleet[0].m_soh_measured == Approx(1.0).margin(1e-9));
}

TEST_CASE("fleet labels are consistent and deterministic", "[simulate]") {
  FleetConfig fc;
  fc.n_modules = 5;
  fc.sim.timestep_s = 4.0;
  const auto a = generate_fleet(fc);
  const auto b = generate_fleet(fc);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].labels.m_soh == b[i].labels.m_soh);  // bitwise
    CHECK(a[i].labels.sd == b[i].labels.sd);
    CHECK(a[i].m_soh_measured == b[i].m_soh_measured);
    for (std::size_t c = 0; c < a[i].labels.c_soh.size(); ++c) {
      CHECK(a[i].labels.c_soh[c] == b[i].labels.c_soh[c]);
    }
    // Eq.-style convention: stored M-SoH is exactly the mean of stored C-SoH
    CHECK(a[i].labels.m_soh == mean(a[i].labels.c_soh));
  }
  FleetConfig other = fc;
  other.seed = fc.seed + 1;
  const auto c = generate_fleet(other);
  CHECK(c[0].labels.m_soh != a[0].labels.m_soh);
}

TEST_CASE("degenerate samplers are rejected", "[simulate]") {
  FleetConfig fc;
  fc.sampler.low = 0.9;
  fc.sampler.high = 0.8;
  CHECK_THROWS_AS(generate_fleet(fc), ConfigError);
  fc.sampler.low = 0.0;
  fc.sampler.high = 0.9;
  CHECK_THROWS_AS(generate_fleet(fc), ConfigError);
}
