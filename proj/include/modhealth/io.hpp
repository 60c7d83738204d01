#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "modhealth/common.hpp"
#include "modhealth/featsel.hpp"
#include "modhealth/features.hpp"
#include "modhealth/pipeline.hpp"
#include "modhealth/qv_profile.hpp"
#include "modhealth/rvr.hpp"
#include "modhealth/simulate.hpp"

namespace modhealth::io {

using nlohmann::json;

// %.17g round-trips doubles exactly; CSV cells must stay bitwise stable for
// the determinism contract.
inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

inline std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    rows.push_back(split_csv_line(line));
  }
  return rows;
}

inline double parse_double(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw InputError("cannot parse number '" + s + "' in " + what);
  }
}

// --- Q-V profiles ------------------------------------------------------------

inline std::string profile_filename(const std::string& module_id, double c_rate) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "qv_%s_c%.2f.csv", module_id.c_str(), c_rate);
  return buf;
}

inline void write_qv_csv(const std::filesystem::path& path, const QVProfile& profile) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << "capacity_ah,voltage_v\n";
  for (const auto& s : profile.samples) {
    out << fmt(s.capacity_ah) << ',' << fmt(s.voltage_v) << '\n';
  }
}

inline QVProfile read_qv_csv(const std::filesystem::path& path, const std::string& module_id,
                             double c_rate, double temperature_c) {
  const auto rows = read_csv(path);
  if (rows.size() < 2 || rows[0].size() != 2 || rows[0][0] != "capacity_ah") {
    throw InputError("bad Q-V csv header in " + path.string());
  }
  QVProfile p;
  p.module_id = module_id;
  p.c_rate = c_rate;
  p.temperature_c = temperature_c;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].size() != 2) throw InputError("bad Q-V row in " + path.string());
    p.samples.push_back({parse_double(rows[i][0], path.string()),
                         parse_double(rows[i][1], path.string())});
  }
  p.validate();
  return p;
}

// parse "qv_<module>_c<rate>.csv"
inline bool parse_profile_filename(const std::string& name, std::string& module_id,
                                   double& c_rate) {
  if (name.rfind("qv_", 0) != 0 || name.size() < 10) return false;
  const auto c_pos = name.rfind("_c");
  if (c_pos == std::string::npos || name.substr(name.size() - 4) != ".csv") return false;
  module_id = name.substr(3, c_pos - 3);
  try {
    c_rate = std::stod(name.substr(c_pos + 2, name.size() - 4 - (c_pos + 2)));
  } catch (const std::exception&) {
    return false;
  }
  return !module_id.empty();
}

// --- labels ------------------------------------------------------------------

inline void write_labels_csv(const std::filesystem::path& path,
                             const std::vector<sim::FleetDataPoint>& fleet) {
  if (fleet.empty()) throw InputError("write_labels_csv: empty fleet");
  const std::size_t np = fleet.front().labels.c_soh.size();
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << "module_id,c_rate,m_soh,sd,range,cv";
  for (std::size_t i = 1; i <= np; ++i) out << ",c_soh_" << i;
  out << ",m_soh_measured\n";
  for (const auto& dp : fleet) {
    out << dp.module_id << ',' << fmt(dp.c_rate) << ',' << fmt(dp.labels.m_soh) << ','
        << fmt(dp.labels.sd) << ',' << fmt(dp.labels.range) << ',' << fmt(dp.labels.cv);
    for (const auto s : dp.labels.c_soh) out << ',' << fmt(s);
    out << ',' << fmt(dp.m_soh_measured) << '\n';
  }
}

struct LabelRow {
  double m_soh = 0.0, sd = 0.0, range = 0.0, cv = 0.0;
};

// (module_id, c_rate) -> labels; c_rate keyed through its exact printed form
inline std::map<std::pair<std::string, std::string>, LabelRow> read_labels_csv(
    const std::filesystem::path& path) {
  const auto rows = read_csv(path);
  if (rows.empty()) throw InputError("empty labels csv " + path.string());
  const auto& hdr = rows[0];
  auto col = [&](const std::string& name) {
    for (std::size_t i = 0; i < hdr.size(); ++i) {
      if (hdr[i] == name) return i;
    }
    throw InputError("labels csv missing column " + name);
  };
  const auto c_id = col("module_id"), c_rate = col("c_rate"), c_msoh = col("m_soh"),
             c_sd = col("sd"), c_range = col("range"), c_cv = col("cv");
  std::map<std::pair<std::string, std::string>, LabelRow> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& r = rows[i];
    LabelRow lr{parse_double(r[c_msoh], "m_soh"), parse_double(r[c_sd], "sd"),
                parse_double(r[c_range], "range"), parse_double(r[c_cv], "cv")};
    out[{r[c_id], fmt(parse_double(r[c_rate], "c_rate"))}] = lr;
  }
  return out;
}

// --- differential curves -------------------------------------------------------

inline void write_curve_csv(const std::filesystem::path& path,
                            const curves::DifferentialCurve& curve) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << "abscissa,value\n";
  for (std::size_t i = 0; i < curve.grid.size(); ++i) {
    out << fmt(curve.grid[i]) << ',' << fmt(curve.values[i]) << '\n';
  }
}

// --- feature table ---------------------------------------------------------

// one row per (module, c_rate); empty cell = absent feature
inline void write_feature_table_csv(const std::filesystem::path& path,
                                    const std::vector<features::FeatureVector>& rows) {
  if (rows.empty()) throw InputError("write_feature_table_csv: no rows");
  std::set<features::FeatureDescriptor> all;
  for (const auto& r : rows) {
    for (const auto& [d, v] : r.values) all.insert(d);
  }
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << "module_id";
  for (const auto& d : all) out << ',' << d.name();
  out << '\n';
  for (const auto& r : rows) {
    out << r.module_id;
    for (const auto& d : all) {
      out << ',';
      const auto it = r.values.find(d);
      if (it != r.values.end()) out << fmt(it->second);
    }
    out << '\n';
  }
}

struct FeatureTable {
  std::vector<std::string> feature_names;  // excludes module_id
  std::vector<std::string> module_ids;
  std::vector<std::vector<std::optional<double>>> rows;

  std::size_t column(const std::string& name) const {
    for (std::size_t i = 0; i < feature_names.size(); ++i) {
      if (feature_names[i] == name) return i;
    }
    throw InputError("feature table missing column '" + name + "'");
  }
};

inline FeatureTable read_feature_table_csv(const std::filesystem::path& path) {
  const auto raw = read_csv(path);
  if (raw.size() < 2 || raw[0].empty() || raw[0][0] != "module_id") {
    throw InputError("bad feature table header in " + path.string());
  }
  FeatureTable t;
  t.feature_names.assign(raw[0].begin() + 1, raw[0].end());
  for (std::size_t i = 1; i < raw.size(); ++i) {
    if (raw[i].size() != raw[0].size()) {
      throw InputError("ragged feature table row in " + path.string());
    }
    t.module_ids.push_back(raw[i][0]);
    std::vector<std::optional<double>> row;
    for (std::size_t c = 1; c < raw[i].size(); ++c) {
      if (raw[i][c].empty()) {
        row.emplace_back(std::nullopt);
      } else {
        row.emplace_back(parse_double(raw[i][c], path.string()));
      }
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

// Join a feature table with labels into the dataset for one estimation task.
// Only the chosen task's label column is copied out.
inline pipeline::LabeledDataset make_dataset(const FeatureTable& table,
                                             const std::filesystem::path& labels_path,
                                             pipeline::Task task) {
  const auto labels = read_labels_csv(labels_path);
  const std::size_t c_rate_col = table.column("C Rate");
  pipeline::LabeledDataset ds;
  ds.feature_names = table.feature_names;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& rate_cell = table.rows[i][c_rate_col];
    if (!rate_cell) throw InputError("feature table row missing C Rate");
    const auto key = std::make_pair(table.module_ids[i], fmt(*rate_cell));
    const auto it = labels.find(key);
    if (it == labels.end()) {
      throw InputError("no label row for module " + key.first + " at C-rate " + key.second);
    }
    double y = 0.0;
    switch (task) {
      case pipeline::Task::sd: y = it->second.sd; break;
      case pipeline::Task::m_soh: y = it->second.m_soh; break;
      case pipeline::Task::range: y = it->second.range; break;
      case pipeline::Task::cv: y = it->second.cv; break;
    }
    ds.rows.push_back(table.rows[i]);
    ds.module_ids.push_back(table.module_ids[i]);
    ds.targets.push_back(y);
  }
  return ds;
}

// --- RVR model JSON ----------------------------------------------------------

inline json model_to_json(const rvr::RVRModel& m, const std::string& task,
                          const std::vector<std::string>& feature_names) {
  json j;
  j["format"] = "modhealth-rvr-v1";
  j["task"] = task;
  j["features"] = feature_names;
  j["kernel"] = {{"kind", "rbf"},
                 {"width", m.kernel.width},
                 {"include_offset", m.kernel.include_offset}};
  json scalers = json::array();
  for (const auto& s : m.input_scaler) scalers.push_back({{"mean", s.mean}, {"sd", s.sd}});
  j["input_scaler"] = scalers;
  j["output_scaler"] = {{"mean", m.output_scaler.mean}, {"sd", m.output_scaler.sd}};
  json rvs = json::array();
  for (Eigen::Index i = 0; i < m.relevance_vectors.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.relevance_vectors.cols(); ++c) {
      row.push_back(m.relevance_vectors(i, c));
    }
    rvs.push_back(row);
  }
  j["relevance_vectors"] = rvs;
  j["offset_retained"] = m.offset_retained;
  j["posterior_mean"] = std::vector<double>(m.posterior_mean.data(),
                                            m.posterior_mean.data() + m.posterior_mean.size());
  std::vector<double> cov;  // row-major
  for (Eigen::Index r = 0; r < m.posterior_cov.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.posterior_cov.cols(); ++c) {
      cov.push_back(m.posterior_cov(r, c));
    }
  }
  j["posterior_cov"] = cov;
  j["alphas"] =
      std::vector<double>(m.alphas.data(), m.alphas.data() + m.alphas.size());
  j["noise_precision"] = m.noise_precision;
  return j;
}

inline rvr::RVRModel model_from_json(const json& j, std::string* task = nullptr,
                                     std::vector<std::string>* feature_names = nullptr) {
  if (j.value("format", "") != "modhealth-rvr-v1") {
    throw InputError("unsupported model format '" + j.value("format", "<missing>") + "'");
  }
  rvr::RVRModel m;
  if (task) *task = j.at("task").get<std::string>();
  if (feature_names) *feature_names = j.at("features").get<std::vector<std::string>>();
  m.kernel.width = j.at("kernel").at("width").get<double>();
  m.kernel.include_offset = j.at("kernel").at("include_offset").get<bool>();
  for (const auto& s : j.at("input_scaler")) {
    m.input_scaler.push_back({s.at("mean").get<double>(), s.at("sd").get<double>()});
  }
  m.output_scaler = {j.at("output_scaler").at("mean").get<double>(),
                     j.at("output_scaler").at("sd").get<double>()};
  const auto rvs = j.at("relevance_vectors");
  const std::size_t nrv = rvs.size();
  const std::size_t dim = m.input_scaler.size();
  m.relevance_vectors.resize(nrv, dim);
  for (std::size_t i = 0; i < nrv; ++i) {
    if (rvs[i].size() != dim) throw InputError("model json: relevance vector dim mismatch");
    for (std::size_t c = 0; c < dim; ++c) m.relevance_vectors(i, c) = rvs[i][c].get<double>();
  }
  m.offset_retained = j.at("offset_retained").get<bool>();
  const auto mu = j.at("posterior_mean").get<std::vector<double>>();
  m.posterior_mean = Eigen::Map<const Eigen::VectorXd>(mu.data(), mu.size());
  const auto cov = j.at("posterior_cov").get<std::vector<double>>();
  const std::size_t mdim = mu.size();
  if (cov.size() != mdim * mdim) throw InputError("model json: covariance size mismatch");
  m.posterior_cov.resize(mdim, mdim);
  for (std::size_t r = 0; r < mdim; ++r) {
    for (std::size_t c = 0; c < mdim; ++c) m.posterior_cov(r, c) = cov[r * mdim + c];
  }
  const auto al = j.at("alphas").get<std::vector<double>>();
  m.alphas = Eigen::Map<const Eigen::VectorXd>(al.data(), al.size());
  m.noise_precision = j.at("noise_precision").get<double>();
  return m;
}

// --- selection / report JSON --------------------------------------------------

inline json selection_to_json(const featsel::SelectionResult& result, const std::string& task) {
  json j;
  j["task"] = task;
  j["threshold"] = result.threshold;
  j["complete_cases"] = result.complete_cases;
  j["truncated"] = result.truncated;
  json ranked = json::array();
  int rank = 1;
  for (const auto& rf : result.ranked) {
    ranked.push_back({{"rank", rank++},
                      {"name", rf.name},
                      {"preselected", rf.preselected},
                      {"relevance", rf.score.relevance},
                      {"avg_redundancy", rf.score.avg_redundancy},
                      {"avg_complementarity", rf.score.avg_complementarity},
                      {"total", rf.score.total}});
  }
  j["ranked_selected"] = ranked;
  json removed = json::array();
  for (const auto& rm : result.removed) {
    removed.push_back(
        {{"name", rm.name}, {"removed_by", rm.removed_by}, {"redundancy", rm.redundancy}});
  }
  j["removed"] = removed;
  json iters = json::array();
  for (const auto& it : result.iterations) {
    json scores = json::array();
    for (const auto& [name, s] : it.candidates) {
      scores.push_back({{"name", name},
                        {"relevance", s.relevance},
                        {"avg_redundancy", s.avg_redundancy},
                        {"avg_complementarity", s.avg_complementarity},
                        {"total", s.total}});
    }
    iters.push_back(scores);
  }
  j["per_iteration_scores"] = iters;
  return j;
}

inline json report_to_json(const pipeline::EvaluationReport& r) {
  json j;
  j["task"] = pipeline::task_name(r.task);
  j["n_features"] = r.n_features;
  j["mae"] = r.mae;
  j["avg_three_sigma"] = r.avg_three_sigma;
  j["mean_n_rv"] = r.mean_n_rv;
  j["coverage"] = r.coverage;
  j["pearson_r"] = r.pearson_r;
  j["n_points"] = r.points.size();
  j["excluded_rows"] = r.excluded_rows;
  j["presentation_ranking"] = r.presentation_ranking;
  j["presentation_ranking_note"] =
      "full-data ranking for display; per-fold selections drive the estimates";
  return j;
}

inline void write_pred_vs_truth_csv(const std::filesystem::path& path,
                                    const pipeline::EvaluationReport& r) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << "module_id,row,truth,estimate,three_sigma,lower,upper,kernel_width,n_rv\n";
  for (const auto& p : r.points) {
    out << p.module_id << ',' << p.row << ',' << fmt(p.truth) << ',' << fmt(p.estimate) << ','
        << fmt(p.three_sigma) << ',' << fmt(p.lower) << ',' << fmt(p.upper) << ','
        << fmt(p.kernel_width) << ',' << p.n_rv << '\n';
  }
}

inline void write_sweep_csv(const std::filesystem::path& path,
                            const pipeline::SweepResult& sweep) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << "n_features,mae,avg_three_sigma,mean_n_rv,pearson_r,coverage\n";
  for (const auto& row : sweep.rows) {
    out << row.n_features << ',' << fmt(row.mae) << ',' << fmt(row.avg_three_sigma) << ','
        << fmt(row.mean_n_rv) << ',' << fmt(row.pearson_r) << ',' << fmt(row.coverage) << '\n';
  }
}

inline json load_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("bad json in " + path.string() + ": " + e.what());
  }
  return j;
}

inline void save_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace modhealth::io
