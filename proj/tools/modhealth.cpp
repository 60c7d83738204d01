// Command-line front end: simulate | extract | select | train | evaluate.
//
// Every stage takes --config <json> and --out <dir>; --seed overrides the
// config seed. Exit codes: 0 success, 2 configuration/input problems,
// 3 numeric/solver failures.

#include <CLI11.hpp>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "modhealth/io.hpp"

namespace fs = std::filesystem;
using modhealth::io::json;

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir = ".";
  std::int64_t seed_override = -1;
};

json load_config(const CommonArgs& args) {
  if (args.config_path.empty()) throw modhealth::ConfigError("--config is required");
  return modhealth::io::load_json(args.config_path);
}

std::uint64_t effective_seed(const json& cfg, const CommonArgs& args) {
  if (args.seed_override >= 0) return static_cast<std::uint64_t>(args.seed_override);
  return cfg.value("seed", 1ULL);
}

fs::path ensure_out_dir(const CommonArgs& args) {
  fs::path out(args.out_dir);
  fs::create_directories(out);
  return out;
}

modhealth::pipeline::Task parse_task(const std::string& name) {
  if (name == "sd") return modhealth::pipeline::Task::sd;
  if (name == "m_soh") return modhealth::pipeline::Task::m_soh;
  if (name == "range") return modhealth::pipeline::Task::range;
  if (name == "cv") return modhealth::pipeline::Task::cv;
  throw modhealth::ConfigError("unknown target '" + name + "' (want sd|m_soh|range|cv)");
}

// --- simulate ----------------------------------------------------------------

int run_simulate(const CommonArgs& args) {
  using namespace modhealth;
  const json cfg = load_config(args);
  sim::FleetConfig fc;
  fc.n_modules = cfg.value("n_modules", fc.n_modules);
  fc.cells_per_module = cfg.value("cells", fc.cells_per_module);
  fc.fresh_capacity_ah = cfg.value("fresh_capacity_ah", fc.fresh_capacity_ah);
  fc.seed = effective_seed(cfg, args);
  if (cfg.contains("c_rates")) fc.c_rates = cfg["c_rates"].get<std::vector<double>>();
  if (cfg.contains("sampler")) {
    const auto& s = cfg["sampler"];
    const std::string kind = s.value("kind", "uniform");
    if (kind == "uniform") {
      fc.sampler.kind = sim::CSohSampler::Kind::uniform;
      fc.sampler.low = s.value("low", fc.sampler.low);
      fc.sampler.high = s.value("high", fc.sampler.high);
    } else if (kind == "point") {
      fc.sampler.kind = sim::CSohSampler::Kind::point;
      fc.sampler.value = s.value("value", 1.0);
    } else {
      throw ConfigError("sampler.kind must be uniform|point");
    }
  }
  if (cfg.contains("resistance")) {
    const auto& r = cfg["resistance"];
    fc.resistance.base_ohm = r.value("base_ohm", fc.resistance.base_ohm);
    fc.resistance.aging_coeff = r.value("aging_coeff", fc.resistance.aging_coeff);
    fc.resistance.spread_ohm = r.value("spread_ohm", fc.resistance.spread_ohm);
  }
  if (cfg.contains("solver")) {
    const auto& s = cfg["solver"];
    fc.sim.v_min = s.value("v_min", fc.sim.v_min);
    fc.sim.v_max = s.value("v_max", fc.sim.v_max);
    fc.sim.timestep_s = s.value("timestep_s", fc.sim.timestep_s);
    fc.sim.solver_tolerance_v = s.value("tolerance_v", fc.sim.solver_tolerance_v);
    fc.sim.output_stride = s.value("output_stride", fc.sim.output_stride);
  }
  fc.sim.temperature_c = cfg.value("temperature_c", fc.sim.temperature_c);

  const auto out = ensure_out_dir(args);
  const auto fleet = sim::generate_fleet(fc);
  for (const auto& dp : fleet) {
    io::write_qv_csv(out / io::profile_filename(dp.module_id, dp.c_rate), dp.profile);
  }
  io::write_labels_csv(out / "labels.csv", fleet);
  std::cout << "simulate: wrote " << fleet.size() << " Q-V profiles + labels.csv to "
            << out.string() << "\n";
  return 0;
}

// --- extract -----------------------------------------------------------------

int run_extract(const CommonArgs& args, const std::string& in_dir_flag) {
  using namespace modhealth;
  const json cfg = load_config(args);
  const std::string in_dir = !in_dir_flag.empty() ? in_dir_flag : cfg.value("input_dir", "");
  if (in_dir.empty()) throw ConfigError("extract: need --in or config input_dir");

  curves::SmoothingConfig sc;
  if (cfg.contains("smoothing")) {
    const auto& s = cfg["smoothing"];
    sc.kernel_width = s.value("kernel_width", sc.kernel_width);
    sc.regularization = s.value("regularization", sc.regularization);
    sc.insensitivity_margin = s.value("insensitivity_margin", sc.insensitivity_margin);
    sc.n_support = s.value("n_support", sc.n_support);
    sc.rmse_bound = s.value("rmse_bound", sc.rmse_bound);
  }
  features::ExtractionOptions eo;
  if (cfg.contains("extraction")) {
    const auto& e = cfg["extraction"];
    eo.prominence_fraction = e.value("prominence_fraction", eo.prominence_fraction);
    eo.trim_fraction = e.value("trim_fraction", eo.trim_fraction);
    eo.partial_area_cutoff = e.value("partial_area_cutoff", eo.partial_area_cutoff);
  }
  const std::size_t grid_points = cfg.value("grid_points", 500);
  const bool write_curves = cfg.value("write_curves", true);
  const double temperature_c = cfg.value("temperature_c", 25.0);

  std::vector<std::pair<std::string, double>> found;  // (module_id, c_rate) per file
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(in_dir)) {
    std::string id;
    double rate = 0.0;
    if (entry.is_regular_file() &&
        io::parse_profile_filename(entry.path().filename().string(), id, rate)) {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw InputError("extract: no qv_*.csv profiles in " + in_dir);

  const auto out = ensure_out_dir(args);
  std::vector<features::FeatureVector> table;
  for (const auto& path : files) {
    std::string id;
    double rate = 0.0;
    io::parse_profile_filename(path.filename().string(), id, rate);
    const auto profile = io::read_qv_csv(path, id, rate, temperature_c);

    const auto q_of_v = curves::fit_qv_model(profile, sc, curves::Orientation::q_of_v);
    const auto v_of_q = curves::fit_qv_model(profile, sc, curves::Orientation::v_of_q);
    const auto ic = curves::compute_ic_curve(q_of_v, curves::uniform_grid(q_of_v, grid_points));
    const auto dv = curves::compute_dv_curve(v_of_q, curves::uniform_grid(v_of_q, grid_points));
    if (write_curves) {
      char name[64];
      std::snprintf(name, sizeof(name), "ic_%s_c%.2f.csv", id.c_str(), rate);
      io::write_curve_csv(out / name, ic);
      std::snprintf(name, sizeof(name), "dv_%s_c%.2f.csv", id.c_str(), rate);
      io::write_curve_csv(out / name, dv);
    }
    table.push_back(features::assemble_feature_vector(
        ic, dv, {id, rate, profile.temperature_c}, eo));
  }
  io::write_feature_table_csv(out / "features.csv", table);
  std::cout << "extract: " << files.size() << " profiles -> features.csv";
  if (write_curves) std::cout << " (+ per-profile IC/DV csvs)";
  std::cout << " in " << out.string() << "\n";
  return 0;
}

// --- shared select/train/evaluate plumbing -------------------------------------

struct TaskData {
  modhealth::pipeline::Task task;
  modhealth::pipeline::LabeledDataset dataset;
};

TaskData load_task_data(const json& cfg, const std::string& target_flag,
                        const std::string& features_flag, const std::string& labels_flag) {
  using namespace modhealth;
  const std::string target =
      !target_flag.empty() ? target_flag : cfg.value("target", std::string());
  if (target.empty()) throw ConfigError("need --target or config target");
  const std::string features_csv =
      !features_flag.empty() ? features_flag : cfg.value("features_csv", std::string());
  const std::string labels_csv =
      !labels_flag.empty() ? labels_flag : cfg.value("labels_csv", std::string());
  if (features_csv.empty() || labels_csv.empty()) {
    throw ConfigError("need --features/--labels or config features_csv/labels_csv");
  }
  TaskData td{parse_task(target), {}};
  td.dataset = io::make_dataset(io::read_feature_table_csv(features_csv), labels_csv, td.task);
  return td;
}

// complete-case view used by select (drops rows with any missing feature)
modhealth::featsel::FeatureData complete_cases(const modhealth::pipeline::LabeledDataset& ds,
                                               modhealth::infotheory::SampleColumn& target,
                                               std::size_t& n_dropped) {
  modhealth::featsel::FeatureData fd;
  fd.names = ds.feature_names;
  fd.columns.resize(ds.feature_names.size());
  n_dropped = 0;
  for (std::size_t i = 0; i < ds.rows.size(); ++i) {
    if (!ds.row_complete(i)) {
      ++n_dropped;
      continue;
    }
    for (std::size_t c = 0; c < ds.feature_names.size(); ++c) {
      fd.columns[c].values.push_back(*ds.rows[i][c]);
    }
    target.values.push_back(ds.targets[i]);
  }
  return fd;
}

// --- select --------------------------------------------------------------------

int run_select(const CommonArgs& args, const std::string& target_flag,
               const std::string& features_flag, const std::string& labels_flag,
               double threshold_flag, bool dump_scores,
               const std::vector<std::string>& preselected) {
  using namespace modhealth;
  const json cfg = args.config_path.empty() ? json::object() : load_config(args);
  const auto td = load_task_data(cfg, target_flag, features_flag, labels_flag);

  featsel::SelectionOptions opt;
  opt.threshold = threshold_flag > 0.0 ? threshold_flag : cfg.value("threshold", 0.95);
  opt.k_neighbors = cfg.value("k", 7);
  opt.seed = effective_seed(cfg, args);
  opt.max_rank = cfg.value("max_rank", 0);

  infotheory::SampleColumn target;
  std::size_t n_dropped = 0;
  const auto fd = complete_cases(td.dataset, target, n_dropped);
  if (n_dropped > 0) {
    std::cerr << "select: dropped " << n_dropped << " incomplete rows\n";
  }
  const auto result = featsel::select_features(fd, target, preselected, opt);

  const auto out = ensure_out_dir(args);
  json j = io::selection_to_json(result, pipeline::task_name(td.task));
  j["dropped_incomplete_rows"] = n_dropped;
  io::save_json(out / "selection.json", j);

  if (dump_scores) {
    featsel::EstimatorCache cache(fd, target, opt.k_neighbors, opt.seed);
    const auto& names = cache.names();
    std::ofstream rel(out / "relevance.csv");
    rel << "feature,relevance\n";
    for (std::size_t i = 0; i < names.size(); ++i) {
      rel << names[i] << ',' << io::fmt(cache.relevance(i)) << '\n';
    }
    auto write_matrix = [&](const fs::path& path, auto&& entry) {
      std::ofstream m(path);
      m << "feature";
      for (const auto& n : names) m << ',' << n;
      m << '\n';
      for (std::size_t i = 0; i < names.size(); ++i) {
        m << names[i];
        for (std::size_t k = 0; k < names.size(); ++k) m << ',' << io::fmt(entry(i, k));
        m << '\n';
      }
    };
    write_matrix(out / "redundancy.csv",
                 [&](std::size_t i, std::size_t k) { return cache.mi(i, k); });
    write_matrix(out / "complementarity.csv", [&](std::size_t i, std::size_t k) {
      return cache.cmi_given_target(i, k);
    });
  }
  std::cout << "select: " << result.ranked.size() << " selected, " << result.removed.size()
            << " removed -> selection.json\n";
  return 0;
}

// --- train ---------------------------------------------------------------------

std::vector<std::string> ranking_from_config(const json& cfg,
                                             const TaskData& td,
                                             const CommonArgs& args,
                                             std::size_t n_features) {
  using namespace modhealth;
  if (cfg.contains("selection_json")) {
    const json sel = io::load_json(cfg["selection_json"].get<std::string>());
    std::vector<std::string> names;
    for (const auto& row : sel.at("ranked_selected")) {
      names.push_back(row.at("name").get<std::string>());
    }
    if (names.size() < n_features) {
      throw ConfigError("selection_json holds fewer features than n_features");
    }
    names.resize(n_features);
    return names;
  }
  featsel::SelectionOptions opt;
  opt.threshold = cfg.value("threshold", 0.95);
  opt.k_neighbors = cfg.value("k", 7);
  opt.seed = effective_seed(cfg, args);
  opt.max_rank = n_features;
  opt.record_iterations = false;
  infotheory::SampleColumn target;
  std::size_t n_dropped = 0;
  const auto fd = complete_cases(td.dataset, target, n_dropped);
  const auto result = featsel::select_features(fd, target, {}, opt);
  std::vector<std::string> names;
  for (const auto& rf : result.ranked) names.push_back(rf.name);
  if (names.size() > n_features) names.resize(n_features);
  return names;
}

int run_train(const CommonArgs& args, const std::string& target_flag,
              const std::string& features_flag, const std::string& labels_flag) {
  using namespace modhealth;
  const json cfg = load_config(args);
  const auto td = load_task_data(cfg, target_flag, features_flag, labels_flag);
  const std::size_t n_features = cfg.value("n_features", 6);
  const auto feats = ranking_from_config(cfg, td, args, n_features);

  // rows complete in the chosen features
  std::vector<std::size_t> cols;
  for (const auto& f : feats) {
    cols.push_back([&] {
      for (std::size_t c = 0; c < td.dataset.feature_names.size(); ++c) {
        if (td.dataset.feature_names[c] == f) return c;
      }
      throw ConfigError("train: unknown feature '" + f + "'");
    }());
  }
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < td.dataset.rows.size(); ++i) {
    bool ok = true;
    for (const auto c : cols) ok = ok && td.dataset.rows[i][c].has_value();
    if (ok) rows.push_back(i);
  }
  Eigen::MatrixXd x(rows.size(), cols.size());
  Eigen::VectorXd y(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < cols.size(); ++c) x(r, c) = *td.dataset.rows[rows[r]][cols[c]];
    y(r) = td.dataset.targets[rows[r]];
  }

  rvr::KernelConfig kc;
  kc.width = cfg.value("kernel_width", 0.0);
  if (kc.width <= 0.0) {
    // pick the width by 10-fold CV over the configured grid
    pipeline::RunConfig rc;
    rc.task = td.task;
    rc.n_features = feats.size();
    rc.inner_folds = cfg.value("inner_folds", 10);
    if (cfg.contains("kernel_width_grid")) {
      rc.kernel_width_grid = cfg["kernel_width_grid"].get<std::vector<double>>();
    }
    rc.seed = effective_seed(cfg, args);
    double best_mae = std::numeric_limits<double>::infinity();
    for (const double w : rc.kernel_width_grid) {
      const auto fold_of = pipeline::detail::inner_fold_of(rows.size(), rc.inner_folds,
                                                           modhealth::mix_seed(rc.seed, 0));
      double ae = 0.0;
      std::size_t cnt = 0;
      for (std::size_t f = 0; f < rc.inner_folds; ++f) {
        std::vector<std::size_t> tr, va;
        for (std::size_t i = 0; i < rows.size(); ++i) (fold_of[i] == f ? va : tr).push_back(i);
        if (va.empty() || tr.size() < 10) continue;
        Eigen::MatrixXd xt(tr.size(), cols.size());
        Eigen::VectorXd yt(tr.size());
        for (std::size_t i = 0; i < tr.size(); ++i) {
          xt.row(i) = x.row(tr[i]);
          yt(i) = y(tr[i]);
        }
        rvr::KernelConfig kw;
        kw.width = w;
        const auto m = rvr::train(xt, yt, kw);
        for (const auto i : va) {
          ae += std::fabs(rvr::predict(m, x.row(i).transpose()).mean - y(i));
          ++cnt;
        }
      }
      const double mae = cnt ? ae / static_cast<double>(cnt)
                             : std::numeric_limits<double>::infinity();
      if (mae < best_mae) {
        best_mae = mae;
        kc.width = w;
      }
    }
  }

  const auto model = rvr::train(x, y, kc);
  const auto out = ensure_out_dir(args);
  io::save_json(out / "model.json",
                io::model_to_json(model, pipeline::task_name(td.task), feats));
  std::cout << "train: " << rows.size() << " rows, width " << kc.width << ", "
            << model.n_relevance_vectors() << " relevance vectors -> model.json\n";
  return 0;
}

// --- evaluate --------------------------------------------------------------------

int run_evaluate(const CommonArgs& args, const std::string& target_flag,
                 const std::string& features_flag, const std::string& labels_flag,
                 const std::string& model_flag) {
  using namespace modhealth;
  const json cfg = load_config(args);
  const auto td = load_task_data(cfg, target_flag, features_flag, labels_flag);
  const auto out = ensure_out_dir(args);

  const std::string model_path =
      !model_flag.empty() ? model_flag : cfg.value("model_json", std::string());
  if (!model_path.empty()) {
    // score a saved model on the dataset
    std::string task_name;
    std::vector<std::string> feats;
    const auto model = io::model_from_json(io::load_json(model_path), &task_name, &feats);
    pipeline::EvaluationReport report;
    report.task = td.task;
    report.n_features = feats.size();
    std::vector<double> truths, estimates;
    for (std::size_t i = 0; i < td.dataset.rows.size(); ++i) {
      Eigen::VectorXd xrow(feats.size());
      bool ok = true;
      for (std::size_t c = 0; c < feats.size(); ++c) {
        const auto col = [&] {
          for (std::size_t k = 0; k < td.dataset.feature_names.size(); ++k) {
            if (td.dataset.feature_names[k] == feats[c]) return k;
          }
          throw ConfigError("evaluate: model feature '" + feats[c] + "' not in table");
        }();
        if (!td.dataset.rows[i][col]) {
          ok = false;
          break;
        }
        xrow(c) = *td.dataset.rows[i][col];
      }
      if (!ok) {
        report.excluded_rows.push_back(i);
        continue;
      }
      const auto p = rvr::predict(model, xrow);
      pipeline::PointReport pr;
      pr.row = i;
      pr.module_id = td.dataset.module_ids[i];
      pr.truth = td.dataset.targets[i];
      pr.estimate = p.mean;
      pr.three_sigma = 3.0 * std::sqrt(std::max(p.variance, 0.0));
      pr.lower = p.lower;
      pr.upper = p.upper;
      pr.kernel_width = model.kernel.width;
      pr.n_rv = model.n_relevance_vectors();
      report.points.push_back(pr);
      truths.push_back(pr.truth);
      estimates.push_back(pr.estimate);
    }
    if (report.points.empty()) throw InputError("evaluate: no usable rows");
    double ae = 0.0, ts = 0.0;
    for (const auto& p : report.points) {
      ae += std::fabs(p.estimate - p.truth);
      ts += p.three_sigma;
    }
    report.mae = ae / static_cast<double>(report.points.size());
    report.avg_three_sigma = ts / static_cast<double>(report.points.size());
    report.mean_n_rv = static_cast<double>(model.n_relevance_vectors());
    report.coverage = pipeline::evaluate_intervals(report);
    report.pearson_r = pipeline::pearson(truths, estimates);
    io::save_json(out / "report.json", io::report_to_json(report));
    io::write_pred_vs_truth_csv(out / "pred_vs_truth.csv", report);
    std::cout << "evaluate(model): mae=" << report.mae << " coverage=" << report.coverage
              << " r=" << report.pearson_r << "\n";
    return 0;
  }

  pipeline::RunConfig rc;
  rc.task = td.task;
  rc.n_features = cfg.value("n_features", 6);
  rc.inner_folds = cfg.value("inner_folds", 10);
  if (cfg.contains("kernel_width_grid")) {
    rc.kernel_width_grid = cfg["kernel_width_grid"].get<std::vector<double>>();
  }
  rc.threshold = cfg.value("threshold", 0.95);
  rc.k_neighbors = cfg.value("k", 7);
  rc.seed = effective_seed(cfg, args);

  if (cfg.contains("sweep")) {
    const auto counts = cfg["sweep"].get<std::vector<std::size_t>>();
    const auto sweep = pipeline::feature_count_sweep(td.dataset, rc, counts);
    io::write_sweep_csv(out / "mae_vs_nfeatures.csv", sweep);
    // report + predictions at the deepest sweep point
    std::size_t deepest = 0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
      if (counts[i] > counts[deepest]) deepest = i;
    }
    io::save_json(out / "report.json", io::report_to_json(sweep.reports[deepest]));
    io::write_pred_vs_truth_csv(out / "pred_vs_truth.csv", sweep.reports[deepest]);
    std::cout << "evaluate(sweep): " << counts.size() << " feature counts -> mae_vs_nfeatures.csv\n";
  } else {
    const auto report = pipeline::nested_cv(td.dataset, rc);
    io::save_json(out / "report.json", io::report_to_json(report));
    io::write_pred_vs_truth_csv(out / "pred_vs_truth.csv", report);
    std::cout << "evaluate: mae=" << report.mae << " coverage=" << report.coverage
              << " r=" << report.pearson_r << " n_rv=" << report.mean_n_rv << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Battery module CtCV / SoH estimation toolkit"};
  app.require_subcommand(1);

  CommonArgs common;
  std::string in_dir, target, features_csv, labels_csv, model_json;
  double threshold = 0.0;
  bool dump_scores = false;
  std::vector<std::string> preselected;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config_path, "JSON config file");
    sub->add_option("--out", common.out_dir, "output directory");
    sub->add_option("--seed", common.seed_override, "override config seed");
  };

  auto* sim_cmd = app.add_subcommand("simulate", "generate a labeled synthetic fleet");
  add_common(sim_cmd);

  auto* ext_cmd = app.add_subcommand("extract", "fit curves and extract the feature table");
  add_common(ext_cmd);
  ext_cmd->add_option("--in", in_dir, "directory with qv_*.csv profiles");

  auto* sel_cmd = app.add_subcommand("select", "rank features (Algorithm: greedy JMI-style)");
  add_common(sel_cmd);
  sel_cmd->add_option("--target", target, "sd|m_soh|range|cv");
  sel_cmd->add_option("--features", features_csv, "feature table csv");
  sel_cmd->add_option("--labels", labels_csv, "labels csv");
  sel_cmd->add_option("--threshold", threshold, "redundancy removal threshold");
  sel_cmd->add_flag("--dump-scores", dump_scores, "write relevance/redundancy/complementarity csvs");
  sel_cmd->add_option("--preselect", preselected, "pre-selected feature names");

  auto* trn_cmd = app.add_subcommand("train", "train an RVR on selected features");
  add_common(trn_cmd);
  trn_cmd->add_option("--target", target, "sd|m_soh|range|cv");
  trn_cmd->add_option("--features", features_csv, "feature table csv");
  trn_cmd->add_option("--labels", labels_csv, "labels csv");

  auto* evl_cmd = app.add_subcommand("evaluate", "nested-CV evaluation or saved-model scoring");
  add_common(evl_cmd);
  evl_cmd->add_option("--target", target, "sd|m_soh|range|cv");
  evl_cmd->add_option("--features", features_csv, "feature table csv");
  evl_cmd->add_option("--labels", labels_csv, "labels csv");
  evl_cmd->add_option("--model", model_json, "saved model.json to score");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim_cmd->parsed()) return run_simulate(common);
    if (ext_cmd->parsed()) return run_extract(common, in_dir);
    if (sel_cmd->parsed()) {
      return run_select(common, target, features_csv, labels_csv, threshold, dump_scores,
                        preselected);
    }
    if (trn_cmd->parsed()) return run_train(common, target, features_csv, labels_csv);
    if (evl_cmd->parsed()) {
      return run_evaluate(common, target, features_csv, labels_csv, model_json);
    }
  } catch (const modhealth::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const modhealth::SolverError& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return 3;
  } catch (const modhealth::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
