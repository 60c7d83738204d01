#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "modhealth/common.hpp"
#include "modhealth/featsel.hpp"
#include "modhealth/rvr.hpp"

namespace modhealth::pipeline {

enum class Task { sd, m_soh, range, cv };

inline const char* task_name(Task t) {
  switch (t) {
    case Task::sd: return "sd";
    case Task::m_soh: return "m_soh";
    case Task::range: return "range";
    case Task::cv: return "cv";
  }
  return "?";
}

// Feature table plus the one target column of the chosen task. Keeping only
// that column in the dataset makes the task-independence contract structural:
// an SD run never holds M-SoH labels at all.
struct LabeledDataset {
  std::vector<std::string> feature_names;
  std::vector<std::vector<std::optional<double>>> rows;  // row-major, absent = missing
  std::vector<std::string> module_ids;
  std::vector<double> targets;

  void validate() const {
    if (rows.size() != targets.size() || rows.size() != module_ids.size()) {
      throw InputError("LabeledDataset: row/target/id count mismatch");
    }
    if (rows.size() < 20) throw InputError("LabeledDataset: need at least 20 datapoints");
    for (const auto& r : rows) {
      if (r.size() != feature_names.size()) throw InputError("LabeledDataset: ragged rows");
    }
  }

  bool row_complete(std::size_t i) const {
    for (const auto& v : rows[i]) {
      if (!v) return false;
    }
    return true;
  }
};

struct RunConfig {
  Task task = Task::sd;
  std::size_t n_features = 6;
  std::size_t inner_folds = 10;  // outer scheme is leave-one-out
  std::vector<double> kernel_width_grid = {0.5, 1.0, 2.0, 4.0};
  double threshold = 0.95;  // featsel removal threshold
  int k_neighbors = 7;
  std::uint64_t seed = 1;
  bool include_presentation_ranking = true;

  void validate() const {
    if (inner_folds < 2) throw ConfigError("RunConfig: need at least 2 inner folds");
    if (n_features < 1) throw ConfigError("RunConfig: need at least 1 feature");
    if (kernel_width_grid.empty()) throw ConfigError("RunConfig: empty kernel width grid");
  }
};

struct PointReport {
  std::size_t row = 0;
  std::string module_id;
  double truth = 0.0;
  double estimate = 0.0;
  double three_sigma = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  double kernel_width = 0.0;
  std::size_t n_rv = 0;
};

struct EvaluationReport {
  Task task = Task::sd;
  std::size_t n_features = 0;
  std::vector<PointReport> points;
  std::vector<std::size_t> excluded_rows;  // test points missing a selected feature
  double mae = 0.0;
  double avg_three_sigma = 0.0;
  double mean_n_rv = 0.0;
  double coverage = 0.0;
  double pearson_r = 0.0;
  std::vector<std::string> presentation_ranking;  // full-data ranking, display only
};

// Per-fold regressor hook. The default trains an RVR; tests can inject stubs.
// `fold` is the index of the held-out row.
struct FoldContext {
  std::size_t fold = 0;
  Eigen::MatrixXd train_inputs;
  Eigen::VectorXd train_targets;
  double kernel_width = 0.0;
};
using FoldRegressor = std::function<rvr::Prediction(const Eigen::VectorXd&)>;
using RegressorFactory = std::function<FoldRegressor(const FoldContext&, std::size_t& n_rv)>;

inline RegressorFactory default_regressor_factory() {
  return [](const FoldContext& ctx, std::size_t& n_rv) -> FoldRegressor {
    rvr::KernelConfig kc;
    kc.width = ctx.kernel_width;
    auto model = std::make_shared<rvr::RVRModel>(
        rvr::train(ctx.train_inputs, ctx.train_targets, kc));
    n_rv = model->n_relevance_vectors();
    return [model](const Eigen::VectorXd& x) { return rvr::predict(*model, x); };
  };
}

inline double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2) return 0.0;
  const double ma = mean(a), mb = mean(b);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (!(saa > 0.0) || !(sbb > 0.0)) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

// Fraction of points whose truth lies strictly inside (estimate - 3s, estimate + 3s).
inline double evaluate_intervals(const EvaluationReport& report) {
  if (report.points.empty()) throw InputError("evaluate_intervals: empty report");
  std::size_t in = 0;
  for (const auto& p : report.points) {
    if (p.truth > p.lower && p.truth < p.upper) ++in;
  }
  return static_cast<double>(in) / static_cast<double>(report.points.size());
}

namespace detail {

// Complete-case training view for one outer fold.
struct FoldData {
  std::vector<std::size_t> train_rows;
  featsel::FeatureData features;
  infotheory::SampleColumn target;
};

inline FoldData build_fold(const LabeledDataset& data, std::size_t held_out) {
  FoldData fd;
  for (std::size_t i = 0; i < data.rows.size(); ++i) {
    if (i == held_out || !data.row_complete(i)) continue;
    fd.train_rows.push_back(i);
  }
  fd.features.names = data.feature_names;
  fd.features.columns.resize(data.feature_names.size());
  for (std::size_t c = 0; c < data.feature_names.size(); ++c) {
    auto& col = fd.features.columns[c].values;
    col.reserve(fd.train_rows.size());
    for (const auto r : fd.train_rows) col.push_back(*data.rows[r][c]);
  }
  fd.target.values.reserve(fd.train_rows.size());
  for (const auto r : fd.train_rows) fd.target.values.push_back(data.targets[r]);
  return fd;
}

inline std::vector<std::string> fold_ranking(const FoldData& fd, const RunConfig& config,
                                             std::size_t max_rank) {
  featsel::SelectionOptions opt;
  opt.threshold = config.threshold;
  opt.k_neighbors = config.k_neighbors;
  opt.seed = config.seed;
  opt.max_rank = max_rank;
  opt.record_iterations = false;
  const auto sel = featsel::select_features(fd.features, fd.target, {}, opt);
  std::vector<std::string> names;
  names.reserve(sel.ranked.size());
  for (const auto& rf : sel.ranked) names.push_back(rf.name);
  return names;
}

// deterministic seeded fold assignment for the inner grid search
inline std::vector<std::size_t> inner_fold_of(std::size_t n, std::size_t folds,
                                              std::uint64_t seed) {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  SplitMix64 rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.next() % i);
    std::swap(order[i - 1], order[j]);
  }
  std::vector<std::size_t> fold_of(n);
  for (std::size_t i = 0; i < n; ++i) fold_of[order[i]] = i % folds;
  return fold_of;
}

struct MatrixView {
  Eigen::MatrixXd inputs;
  Eigen::VectorXd targets;
};

inline MatrixView to_matrix(const FoldData& fd, const std::vector<std::string>& feats,
                            const std::vector<std::size_t>& which_rows) {
  std::vector<std::size_t> cols;
  for (const auto& f : feats) {
    const auto it = std::find(fd.features.names.begin(), fd.features.names.end(), f);
    cols.push_back(static_cast<std::size_t>(it - fd.features.names.begin()));
  }
  MatrixView mv;
  mv.inputs.resize(which_rows.size(), cols.size());
  mv.targets.resize(which_rows.size());
  for (std::size_t r = 0; r < which_rows.size(); ++r) {
    for (std::size_t c = 0; c < cols.size(); ++c) {
      mv.inputs(r, c) = fd.features.columns[cols[c]].values[which_rows[r]];
    }
    mv.targets(r) = fd.target.values[which_rows[r]];
  }
  return mv;
}

inline double inner_cv_mae(const FoldData& fd, const std::vector<std::string>& feats,
                           double width, std::size_t folds, std::uint64_t seed,
                           const RegressorFactory& factory, std::size_t outer_fold) {
  const std::size_t n = fd.train_rows.size();
  const auto fold_of = inner_fold_of(n, folds, seed);
  double abs_sum = 0.0;
  std::size_t count = 0;
  for (std::size_t f = 0; f < folds; ++f) {
    std::vector<std::size_t> tr, va;
    for (std::size_t i = 0; i < n; ++i) (fold_of[i] == f ? va : tr).push_back(i);
    if (va.empty() || tr.size() < 10) continue;
    const auto train_mv = to_matrix(fd, feats, tr);
    FoldContext ctx{outer_fold, train_mv.inputs, train_mv.targets, width};
    std::size_t n_rv = 0;
    const auto reg = factory(ctx, n_rv);
    const auto val_mv = to_matrix(fd, feats, va);
    for (Eigen::Index i = 0; i < val_mv.targets.size(); ++i) {
      abs_sum += std::fabs(reg(val_mv.inputs.row(i).transpose()).mean - val_mv.targets(i));
      ++count;
    }
  }
  if (count == 0) throw ConfigError("inner_cv_mae: no usable inner folds");
  return abs_sum / static_cast<double>(count);
}

}  // namespace detail

// Shared machinery for nested_cv and the feature-count sweep: per-fold
// rankings are computed once (at the largest rank needed) and truncated per
// run, which leaves results identical to independent runs because greedy
// selection prefixes do not depend on the stopping rank.
class NestedCvSession {
 public:
  NestedCvSession(const LabeledDataset& data, RunConfig config,
                  RegressorFactory factory = default_regressor_factory())
      : data_(data), config_(std::move(config)), factory_(std::move(factory)) {
    data_.validate();
    config_.validate();
  }

  EvaluationReport run(std::size_t n_features) {
    EvaluationReport report;
    report.task = config_.task;
    report.n_features = n_features;

    std::vector<double> truths, estimates;
    for (std::size_t i = 0; i < data_.rows.size(); ++i) {
      const auto& ranking = ranking_for_fold(i, n_features);
      std::vector<std::string> feats(
          ranking.begin(),
          ranking.begin() + std::min<std::size_t>(n_features, ranking.size()));
      if (feats.empty()) throw ConfigError("nested_cv: empty selected feature set");

      // the held-out point must carry every selected feature
      bool usable = true;
      Eigen::VectorXd test_x(feats.size());
      for (std::size_t c = 0; c < feats.size(); ++c) {
        const auto it =
            std::find(data_.feature_names.begin(), data_.feature_names.end(), feats[c]);
        const auto col = static_cast<std::size_t>(it - data_.feature_names.begin());
        if (!data_.rows[i][col]) {
          usable = false;
          break;
        }
        test_x(c) = *data_.rows[i][col];
      }
      if (!usable) {
        report.excluded_rows.push_back(i);
        continue;
      }

      const auto& fd = fold_data(i);
      const double width = pick_width(i, fd, feats);
      const std::vector<std::size_t> all_rows = index_range(fd.train_rows.size());
      const auto mv = detail::to_matrix(fd, feats, all_rows);
      FoldContext ctx{i, mv.inputs, mv.targets, width};
      std::size_t n_rv = 0;
      const auto reg = factory_(ctx, n_rv);
      const auto pred = reg(test_x);

      PointReport pr;
      pr.row = i;
      pr.module_id = data_.module_ids[i];
      pr.truth = data_.targets[i];
      pr.estimate = pred.mean;
      pr.three_sigma = 3.0 * std::sqrt(std::max(pred.variance, 0.0));
      pr.lower = pred.lower;
      pr.upper = pred.upper;
      pr.kernel_width = width;
      pr.n_rv = n_rv;
      report.points.push_back(pr);
      truths.push_back(pr.truth);
      estimates.push_back(pr.estimate);
    }

    if (report.points.empty()) throw ConfigError("nested_cv: no usable test points");
    double ae = 0.0, ts = 0.0, rv = 0.0;
    for (const auto& p : report.points) {
      ae += std::fabs(p.estimate - p.truth);
      ts += p.three_sigma;
      rv += static_cast<double>(p.n_rv);
    }
    const auto n = static_cast<double>(report.points.size());
    report.mae = ae / n;
    report.avg_three_sigma = ts / n;
    report.mean_n_rv = rv / n;
    report.coverage = evaluate_intervals(report);
    report.pearson_r = pearson(truths, estimates);

    if (config_.include_presentation_ranking) {
      report.presentation_ranking = presentation_ranking(n_features);
    }
    return report;
  }

  // Full-data ranking, for display only (per-fold selections drive estimation).
  const std::vector<std::string>& presentation_ranking(std::size_t n_features) {
    if (presentation_ranking_.size() < n_features) {
      detail::FoldData all;
      all.train_rows = index_range(data_.rows.size());
      std::erase_if(all.train_rows, [&](std::size_t r) { return !data_.row_complete(r); });
      all.features.names = data_.feature_names;
      all.features.columns.resize(data_.feature_names.size());
      for (std::size_t c = 0; c < data_.feature_names.size(); ++c) {
        for (const auto r : all.train_rows) {
          all.features.columns[c].values.push_back(*data_.rows[r][c]);
        }
      }
      for (const auto r : all.train_rows) all.target.values.push_back(data_.targets[r]);
      presentation_ranking_ = detail::fold_ranking(all, config_, n_features);
    }
    return presentation_ranking_;
  }

 private:
  static std::vector<std::size_t> index_range(std::size_t n) {
    std::vector<std::size_t> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = i;
    return v;
  }

  const detail::FoldData& fold_data(std::size_t fold) {
    auto it = fold_data_.find(fold);
    if (it == fold_data_.end()) {
      it = fold_data_.emplace(fold, detail::build_fold(data_, fold)).first;
    }
    return it->second;
  }

  const std::vector<std::string>& ranking_for_fold(std::size_t fold, std::size_t n_features) {
    max_rank_ = std::max(max_rank_, n_features);
    auto it = rankings_.find(fold);
    if (it == rankings_.end() || it->second.computed_rank < max_rank_) {
      CachedRanking cr;
      cr.computed_rank = max_rank_;
      cr.names = detail::fold_ranking(fold_data(fold), config_, max_rank_);
      it = rankings_.insert_or_assign(fold, std::move(cr)).first;
    }
    return it->second.names;
  }

  double pick_width(std::size_t fold, const detail::FoldData& fd,
                    const std::vector<std::string>& feats) {
    const auto key = std::make_pair(fold, feats.size());
    const auto it = width_cache_.find(key);
    if (it != width_cache_.end()) return it->second;
    double best_width = config_.kernel_width_grid.front();
    double best_mae = std::numeric_limits<double>::infinity();
    for (const double w : config_.kernel_width_grid) {
      const double mae = detail::inner_cv_mae(fd, feats, w, config_.inner_folds,
                                              mix_seed(config_.seed, fold), factory_, fold);
      if (mae < best_mae) {
        best_mae = mae;
        best_width = w;
      }
    }
    width_cache_.emplace(key, best_width);
    return best_width;
  }

  struct CachedRanking {
    std::size_t computed_rank = 0;
    std::vector<std::string> names;
  };

  LabeledDataset data_;
  RunConfig config_;
  RegressorFactory factory_;
  std::size_t max_rank_ = 0;
  std::map<std::size_t, detail::FoldData> fold_data_;
  std::map<std::size_t, CachedRanking> rankings_;
  std::map<std::pair<std::size_t, std::size_t>, double> width_cache_;
  std::vector<std::string> presentation_ranking_;

 public:
  // Pre-declare the deepest rank a session will need so fold rankings are
  // computed once rather than re-deepened per sweep step.
  void ensure_rank(std::size_t rank) { max_rank_ = std::max(max_rank_, rank); }
};

// Leave-one-out nested cross-validation at a fixed feature count.
inline EvaluationReport nested_cv(const LabeledDataset& data, const RunConfig& config,
                                  RegressorFactory factory = default_regressor_factory()) {
  NestedCvSession session(data, config, std::move(factory));
  return session.run(config.n_features);
}

struct SweepRow {
  std::size_t n_features = 0;
  double mae = 0.0;
  double avg_three_sigma = 0.0;
  double mean_n_rv = 0.0;
  double pearson_r = 0.0;
  double coverage = 0.0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::vector<EvaluationReport> reports;
};

// One nested-CV evaluation per feature count, reusing each fold's selection
// ranking across counts.
inline SweepResult feature_count_sweep(const LabeledDataset& data, const RunConfig& config,
                                       const std::vector<std::size_t>& counts,
                                       RegressorFactory factory = default_regressor_factory()) {
  if (counts.empty()) throw ConfigError("feature_count_sweep: empty sweep list");
  NestedCvSession session(data, config, std::move(factory));
  session.ensure_rank(*std::max_element(counts.begin(), counts.end()));
  SweepResult result;
  for (const auto count : counts) {
    auto report = session.run(count);
    result.rows.push_back({count, report.mae, report.avg_three_sigma, report.mean_n_rv,
                           report.pearson_r, report.coverage});
    result.reports.push_back(std::move(report));
  }
  return result;
}

}  // namespace modhealth::pipeline
