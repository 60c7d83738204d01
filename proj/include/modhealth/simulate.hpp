#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "modhealth/common.hpp"
#include "modhealth/metrics.hpp"
#include "modhealth/ocv.hpp"
#include "modhealth/qv_profile.hpp"

namespace modhealth::sim {

struct CellSpec {
  double fresh_capacity_ah = 3.0;
  double c_soh = 1.0;                  // fraction in (0, 1]
  double series_resistance_ohm = 0.02;
};

// Parallel-connected cells sharing one OCV model (the shared handle *is* the
// spec's per-cell ocv_model_id; a single handle makes the share-one-model
// invariant structural).
struct ModuleSpec {
  std::vector<CellSpec> cells;
  double interconnect_resistance_ohm = 0.0;
  const OCVModel* ocv = &builtin_ocv();

  void validate() const {
    if (cells.empty()) throw InputError("ModuleSpec: need at least one cell");
    for (const auto& c : cells) {
      if (!(c.fresh_capacity_ah > 0.0)) throw InputError("CellSpec: fresh capacity must be > 0");
      if (!(c.c_soh > 0.0 && c.c_soh <= 1.0)) throw InputError("CellSpec: C-SoH must lie in (0, 1]");
      if (!(c.series_resistance_ohm > 0.0)) throw InputError("CellSpec: resistance must be > 0");
    }
    if (interconnect_resistance_ohm < 0.0) {
      throw InputError("ModuleSpec: interconnect resistance must be >= 0");
    }
    if (ocv == nullptr) throw InputError("ModuleSpec: missing OCV model");
  }

  double nominal_capacity_ah() const {
    double s = 0.0;
    for (const auto& c : cells) s += c.fresh_capacity_ah;
    return s;
  }

  double remaining_capacity_ah() const {
    double s = 0.0;
    for (const auto& c : cells) s += c.c_soh * c.fresh_capacity_ah;
    return s;
  }
};

struct SimulationConfig {
  double c_rate = 0.5;  // module current / module nominal capacity
  double v_min = 3.0;
  double v_max = 4.2;
  double timestep_s = 1.0;
  double solver_tolerance_v = 1e-9;
  std::size_t output_stride = 10;  // record every n-th accepted step
  double temperature_c = 25.0;

  void validate() const {
    if (!(v_min < v_max)) throw ConfigError("SimulationConfig: v_min must be < v_max");
    if (!(timestep_s > 0.0)) throw ConfigError("SimulationConfig: timestep must be > 0");
    if (!(solver_tolerance_v > 0.0)) throw ConfigError("SimulationConfig: tolerance must be > 0");
    if (!(c_rate > 0.0)) throw ConfigError("SimulationConfig: c_rate must be > 0");
    if (output_stride == 0) throw ConfigError("SimulationConfig: output stride must be >= 1");
  }
};

struct CurrentSplit {
  std::vector<double> cell_currents_a;
  double shared_node_voltage_v = 0.0;  // V_terminal seen by every cell
  bool charge_complete = false;        // all SoC >= 1, nothing left to charge
};

// Split a module charging current across the parallel cells so every cell sees
// the same node voltage V with OCV_i(SoC_i) + I_i R_i = V. With OCVs held at
// the given SoCs the node equation sum_i (V - OCV_i)/R_i = I_total is linear
// in V and solved exactly.
inline CurrentSplit solve_current_split(const ModuleSpec& module,
                                        const std::vector<double>& cell_socs,
                                        double total_current_a) {
  module.validate();
  if (cell_socs.size() != module.cells.size()) {
    throw InputError("solve_current_split: SoC list size mismatch");
  }
  if (!(total_current_a > 0.0)) throw InputError("solve_current_split: current must be > 0");

  CurrentSplit out;
  bool all_full = true;
  for (double s : cell_socs) {
    if (!(s >= 0.0 && s <= 1.0 + 1e-9)) {
      throw InputError("solve_current_split: SoC out of [0, 1]");
    }
    if (s < 1.0) all_full = false;
  }
  if (all_full) {
    out.charge_complete = true;
    return out;
  }

  double g_sum = 0.0, og_sum = 0.0;
  std::vector<double> ocv_v(module.cells.size());
  for (std::size_t i = 0; i < module.cells.size(); ++i) {
    ocv_v[i] = module.ocv->value(cell_socs[i]);
    const double g = 1.0 / module.cells[i].series_resistance_ohm;
    g_sum += g;
    og_sum += ocv_v[i] * g;
  }
  const double v = (total_current_a + og_sum) / g_sum;
  if (!std::isfinite(v)) {
    throw SolverError("solve_current_split: terminal voltage not finite");
  }
  out.shared_node_voltage_v = v;
  out.cell_currents_a.resize(module.cells.size());
  double residual = -total_current_a;
  for (std::size_t i = 0; i < module.cells.size(); ++i) {
    out.cell_currents_a[i] = (v - ocv_v[i]) / module.cells[i].series_resistance_ohm;
    residual += out.cell_currents_a[i];
  }
  if (std::fabs(residual) > 1e-9) {
    throw SolverError("solve_current_split: Kirchhoff residual " + std::to_string(residual) +
                      " A exceeds 1e-9 A");
  }
  return out;
}

struct SimulationResult {
  QVProfile profile;
  std::vector<double> cell_charge_ah;     // per-cell integral of I dt
  double max_kirchhoff_residual_a = 0.0;  // over accepted steps
  double max_voltage_residual_v = 0.0;    // max_i |V - (OCV_i + I_i R_i)|
  std::vector<double> final_socs;
};

// Constant-current charge from the equilibrated-empty state (all cells at
// SoC 0, where rested parallel cells sharing an OCV model must sit) until the
// module terminal voltage reaches v_max or every cell is full. Explicit Euler
// on each cell's SoC.
inline SimulationResult simulate_cc_charge(const ModuleSpec& module,
                                           const SimulationConfig& config,
                                           const std::string& module_id = "module") {
  module.validate();
  config.validate();

  const double i_total = config.c_rate * module.nominal_capacity_ah();
  const double dt_h = config.timestep_s / 3600.0;
  const std::size_t n_cells = module.cells.size();

  SimulationResult result;
  result.profile.c_rate = config.c_rate;
  result.profile.temperature_c = config.temperature_c;
  result.profile.module_id = module_id;
  result.cell_charge_ah.assign(n_cells, 0.0);

  std::vector<double> socs(n_cells, 0.0);
  double q_ah = 0.0;

  // generous cap: full fresh charge plus slack
  const std::size_t max_steps =
      static_cast<std::size_t>(std::ceil(2.0 / (config.c_rate * dt_h))) + 16;

  auto record = [&](double q, double node_v) {
    const double terminal_v = node_v + i_total * module.interconnect_resistance_ohm;
    result.profile.samples.push_back({q, terminal_v});
  };

  bool recorded_first = false;
  for (std::size_t step = 0; step < max_steps; ++step) {
    const CurrentSplit split = solve_current_split(module, socs, i_total);
    if (split.charge_complete) break;
    const double node_v = split.shared_node_voltage_v;
    const double terminal_v = node_v + i_total * module.interconnect_resistance_ohm;
    if (terminal_v >= config.v_max) {
      if (!recorded_first) {
        throw InputError("simulate_cc_charge: terminal voltage at or above v_max at start");
      }
      break;
    }

    double residual = -i_total;
    double v_res = 0.0;
    for (std::size_t i = 0; i < n_cells; ++i) {
      residual += split.cell_currents_a[i];
      const double cell_v = module.ocv->value(socs[i]) +
                            split.cell_currents_a[i] * module.cells[i].series_resistance_ohm;
      v_res = std::max(v_res, std::fabs(node_v - cell_v));
    }
    result.max_kirchhoff_residual_a = std::max(result.max_kirchhoff_residual_a, std::fabs(residual));
    result.max_voltage_residual_v = std::max(result.max_voltage_residual_v, v_res);

    if (step % config.output_stride == 0) {
      record(q_ah, node_v);
      recorded_first = true;
    }

    for (std::size_t i = 0; i < n_cells; ++i) {
      const double cap = module.cells[i].c_soh * module.cells[i].fresh_capacity_ah;
      socs[i] += split.cell_currents_a[i] * dt_h / cap;
      result.cell_charge_ah[i] += split.cell_currents_a[i] * dt_h;
    }
    q_ah += i_total * dt_h;
  }

  // close the profile at the last accepted state
  {
    const CurrentSplit split = solve_current_split(module, socs, i_total);
    if (!split.charge_complete) record(q_ah, split.shared_node_voltage_v);
  }
  result.final_socs = socs;
  result.profile.validate();
  return result;
}

// --- fleet generation -------------------------------------------------------

struct CSohSampler {
  enum class Kind { uniform, point };
  Kind kind = Kind::uniform;
  double low = 0.78;
  double high = 1.0;
  double value = 1.0;  // point-mass location

  void validate() const {
    if (kind == Kind::uniform) {
      if (!(low <= high)) throw ConfigError("CSohSampler: zero-support bounds (low > high)");
      if (!(low > 0.0 && high <= 1.0)) {
        throw ConfigError("CSohSampler: support must lie in (0, 1]");
      }
    } else {
      if (!(value > 0.0 && value <= 1.0)) {
        throw ConfigError("CSohSampler: point mass must lie in (0, 1]");
      }
    }
  }

  double draw(SplitMix64& rng) const {
    return kind == Kind::uniform ? rng.next_uniform(low, high) : value;
  }
};

// Cell resistance grows as the cell fades (aging-coupled), plus a small
// idiosyncratic spread. The coupling is what imprints CtCV onto module curves:
// with a shared OCV model the quasi-static module curve depends only on total
// capacity, so cell-to-cell contrast must enter through IR dynamics.
struct ResistanceModel {
  double base_ohm = 0.020;
  double aging_coeff = 3.0;  // R = base * (1 + aging_coeff * (1 - c_soh)) + spread
  double spread_ohm = 0.0005;

  double draw(double c_soh, SplitMix64& rng) const {
    return base_ohm * (1.0 + aging_coeff * (1.0 - c_soh)) +
           rng.next_uniform(-spread_ohm, spread_ohm);
  }
};

struct FleetConfig {
  std::size_t n_modules = 78;
  std::size_t cells_per_module = 3;
  double fresh_capacity_ah = 3.0;
  CSohSampler sampler;
  ResistanceModel resistance;
  std::vector<double> c_rates = {0.5, 0.25};
  std::uint64_t seed = 1;
  SimulationConfig sim;  // c_rate field overridden per datapoint
  const OCVModel* ocv = &builtin_ocv();

  void validate() const {
    if (n_modules < 1) throw ConfigError("FleetConfig: need at least one module");
    if (cells_per_module < 1) throw ConfigError("FleetConfig: need at least one cell per module");
    if (c_rates.empty()) throw ConfigError("FleetConfig: need at least one C-rate");
    sampler.validate();
    sim.validate();
  }
};

struct FleetDataPoint {
  std::string module_id;
  double c_rate = 0.0;
  QVProfile profile;
  metrics::SohLabels labels;
  double m_soh_measured = 0.0;  // window-capacity ratio vs a fresh module
};

inline std::string fleet_module_id(std::size_t index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "m%03zu", index);
  return buf;
}

// Labeled synthetic fleet: each module appears once per C-rate. Module specs
// are drawn from per-module seed streams (mix of master seed and module index)
// so results do not depend on generation order.
inline std::vector<FleetDataPoint> generate_fleet(const FleetConfig& config) {
  config.validate();

  std::vector<FleetDataPoint> dataset;
  dataset.reserve(config.n_modules * config.c_rates.size());

  // fresh reference window capacity per c-rate for the measured-SoH variant
  std::vector<double> fresh_window_ah(config.c_rates.size());
  for (std::size_t r = 0; r < config.c_rates.size(); ++r) {
    ModuleSpec fresh;
    fresh.ocv = config.ocv;
    fresh.cells.assign(config.cells_per_module,
                       CellSpec{config.fresh_capacity_ah, 1.0, config.resistance.base_ohm});
    SimulationConfig sc = config.sim;
    sc.c_rate = config.c_rates[r];
    fresh_window_ah[r] = simulate_cc_charge(fresh, sc).profile.samples.back().capacity_ah;
  }

  for (std::size_t m = 0; m < config.n_modules; ++m) {
    SplitMix64 rng(mix_seed(config.seed, m));
    ModuleSpec spec;
    spec.ocv = config.ocv;
    std::vector<double> sohs(config.cells_per_module);
    for (auto& s : sohs) s = config.sampler.draw(rng);
    for (double s : sohs) {
      spec.cells.push_back(
          CellSpec{config.fresh_capacity_ah, s, config.resistance.draw(s, rng)});
    }
    const auto labels = metrics::compute_labels(sohs);
    const std::string id = fleet_module_id(m);

    for (std::size_t r = 0; r < config.c_rates.size(); ++r) {
      SimulationConfig sc = config.sim;
      sc.c_rate = config.c_rates[r];
      FleetDataPoint dp;
      dp.module_id = id;
      dp.c_rate = sc.c_rate;
      auto sim_result = simulate_cc_charge(spec, sc, id);
      dp.profile = std::move(sim_result.profile);
      dp.labels = labels;
      dp.m_soh_measured = dp.profile.samples.back().capacity_ah / fresh_window_ah[r];
      dataset.push_back(std::move(dp));
    }
  }
  return dataset;
}

}  // namespace modhealth::sim
