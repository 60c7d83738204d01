#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "modhealth/common.hpp"
#include "modhealth/infotheory.hpp"

namespace modhealth::featsel {

// Complete-case feature table handed to selection: parallel named columns.
struct FeatureData {
  std::vector<std::string> names;
  std::vector<infotheory::SampleColumn> columns;

  void validate() const {
    if (names.size() != columns.size()) throw InputError("FeatureData: name/column mismatch");
    if (names.size() < 2) throw InputError("FeatureData: need at least 2 candidate features");
    const std::size_t n = columns.front().values.size();
    for (const auto& c : columns) {
      if (c.values.size() != n) throw InputError("FeatureData: ragged columns");
    }
    std::set<std::string> uniq(names.begin(), names.end());
    if (uniq.size() != names.size()) throw InputError("FeatureData: duplicate feature names");
  }
};

struct CandidateScore {
  double relevance = 0.0;
  double avg_redundancy = 0.0;
  double avg_complementarity = 0.0;
  double total = 0.0;  // relevance - avg_redundancy + avg_complementarity
};

struct SelectionState {
  std::vector<std::string> selected;  // insertion order = importance ranking
  std::set<std::string> unselected;
  std::set<std::string> removed;
  double threshold = 0.95;
};

// Memoized normalized MI / CMI over standardized columns. Each unordered pair
// owns one white-noise seed derived from the base seed and the pair key, so
// estimates are symmetric and independent of evaluation order. Negative raw
// estimates clip to zero at normalization.
class EstimatorCache {
 public:
  EstimatorCache(const FeatureData& data, infotheory::SampleColumn target, int k,
                 std::uint64_t seed)
      : k_(k), seed_(seed), target_(std::move(target)) {
    data.validate();
    names_ = data.names;
    cols_.reserve(data.columns.size());
    for (const auto& c : data.columns) cols_.push_back(infotheory::standardize(c));
    target_ = infotheory::standardize(target_);
    if (target_.values.size() != cols_.front().values.size()) {
      throw InputError("EstimatorCache: target length mismatch");
    }
  }

  std::size_t n_features() const { return cols_.size(); }
  const std::vector<std::string>& names() const { return names_; }

  // normalized MI between features i and j (target_index() for Y)
  double mi(std::size_t i, std::size_t j) {
    const double raw = raw_mi(i, j);
    return infotheory::normalize(raw, self_mi(i), self_mi(j));
  }

  double relevance(std::size_t i) { return mi(i, target_index()); }

  // normalized CMI I(X_i; X_j | Y)
  double cmi_given_target(std::size_t i, std::size_t j) {
    const auto key = ordered(i, j);
    auto it = cmi_.find(key);
    if (it == cmi_.end()) {
      const double raw = infotheory::estimate_cmi(column(key.first), column(key.second),
                                                  target_, k_);
      it = cmi_.emplace(key, raw).first;
    }
    return infotheory::normalize(it->second, self_mi(i), self_mi(j));
  }

  std::size_t target_index() const { return cols_.size(); }

  double self_mi(std::size_t i) {
    const double v = raw_mi(i, i);
    if (!(v > 0.0)) {
      throw InputError("EstimatorCache: nonpositive self-MI for '" + label(i) + "'");
    }
    return v;
  }

 private:
  std::pair<std::size_t, std::size_t> ordered(std::size_t i, std::size_t j) const {
    return {std::min(i, j), std::max(i, j)};
  }

  const infotheory::SampleColumn& column(std::size_t i) const {
    return i == target_index() ? target_ : cols_[i];
  }

  std::string label(std::size_t i) const { return i == target_index() ? "<target>" : names_[i]; }

  double raw_mi(std::size_t i, std::size_t j) {
    const auto key = ordered(i, j);
    auto it = mi_.find(key);
    if (it == mi_.end()) {
      const std::uint64_t pair_seed = mix_seed(seed_, mix_seed(key.first, key.second));
      const double raw = infotheory::estimate_mi(column(key.first), column(key.second), k_,
                                                 pair_seed);
      it = mi_.emplace(key, raw).first;
    }
    return it->second;
  }

  int k_;
  std::uint64_t seed_;
  std::vector<std::string> names_;
  std::vector<infotheory::SampleColumn> cols_;
  infotheory::SampleColumn target_;
  std::map<std::pair<std::size_t, std::size_t>, double> mi_;
  std::map<std::pair<std::size_t, std::size_t>, double> cmi_;
};

// J(X) for candidate x against the current selected set: relevance minus
// average redundancy plus average complementarity; with an empty selected set
// the criterion reduces to relevance alone.
inline CandidateScore score_candidate(const std::string& x, const SelectionState& state,
                                      EstimatorCache& cache) {
  if (!state.unselected.count(x)) {
    throw StateError("score_candidate: '" + x + "' is not an unselected candidate");
  }
  const auto& names = cache.names();
  const auto idx_of = [&](const std::string& n) {
    const auto it = std::find(names.begin(), names.end(), n);
    if (it == names.end()) throw StateError("score_candidate: unknown feature '" + n + "'");
    return static_cast<std::size_t>(it - names.begin());
  };
  const std::size_t xi = idx_of(x);
  CandidateScore s;
  s.relevance = cache.relevance(xi);
  if (!state.selected.empty()) {
    double red = 0.0, comp = 0.0;
    for (const auto& sel : state.selected) {
      const std::size_t ji = idx_of(sel);
      red += cache.mi(xi, ji);
      comp += cache.cmi_given_target(xi, ji);
    }
    const double m = static_cast<double>(state.selected.size());
    s.avg_redundancy = red / m;
    s.avg_complementarity = comp / m;
  }
  s.total = s.relevance - s.avg_redundancy + s.avg_complementarity;
  return s;
}

struct RankedFeature {
  std::string name;
  CandidateScore score;   // components at selection time
  bool preselected = false;
};

struct RemovedFeature {
  std::string name;
  std::string removed_by;  // selected feature that triggered removal, or "degenerate"
  double redundancy = 0.0;
};

struct IterationScores {
  std::vector<std::pair<std::string, CandidateScore>> candidates;  // sorted by name
};

struct SelectionResult {
  std::vector<RankedFeature> ranked;   // S in selection order
  std::vector<RemovedFeature> removed;  // R
  std::vector<IterationScores> iterations;
  double threshold = 0.95;
  std::size_t complete_cases = 0;
  bool truncated = false;  // stopped at max_rank before exhausting U
};

struct SelectionOptions {
  double threshold = 0.95;     // normalized-redundancy removal threshold
  int k_neighbors = 7;
  std::uint64_t seed = 1;
  std::size_t max_rank = 0;    // 0 = run until U is empty
  bool record_iterations = true;
};

// Greedy forward selection with complete-redundancy removal. Ties in the
// argmax break lexicographically on the canonical feature name. Constant
// (zero-variance) candidates cannot be estimated and are moved to R up front.
inline SelectionResult select_features(const FeatureData& data,
                                       const infotheory::SampleColumn& target,
                                       const std::vector<std::string>& preselected,
                                       const SelectionOptions& options = {}) {
  data.validate();
  if (!(options.threshold > 0.0)) throw ConfigError("select_features: threshold must be > 0");

  SelectionResult result;
  result.threshold = options.threshold;
  result.complete_cases = data.columns.front().values.size();

  // split off degenerate columns before estimation
  FeatureData live;
  for (std::size_t i = 0; i < data.names.size(); ++i) {
    try {
      (void)infotheory::standardize(data.columns[i]);
      live.names.push_back(data.names[i]);
      live.columns.push_back(data.columns[i]);
    } catch (const InputError&) {
      result.removed.push_back({data.names[i], "degenerate", 0.0});
    }
  }
  if (live.names.size() < 1) {
    throw InputError("select_features: no estimable candidate features");
  }

  EstimatorCache cache(live, target, options.k_neighbors, options.seed);
  const auto& names = cache.names();
  const auto idx_of = [&](const std::string& n) {
    const auto it = std::find(names.begin(), names.end(), n);
    return it == names.end() ? names.size() : static_cast<std::size_t>(it - names.begin());
  };

  SelectionState state;
  state.threshold = options.threshold;
  for (const auto& n : names) state.unselected.insert(n);
  for (const auto& p : preselected) {
    if (!state.unselected.count(p)) {
      throw InputError("select_features: preselected feature '" + p + "' not in table");
    }
    state.unselected.erase(p);
    state.selected.push_back(p);
    RankedFeature rf;
    rf.name = p;
    rf.preselected = true;
    rf.score.relevance = cache.relevance(idx_of(p));
    rf.score.total = rf.score.relevance;
    result.ranked.push_back(rf);
  }

  auto remove_redundant_to = [&](const std::string& anchor) {
    const std::size_t ai = idx_of(anchor);
    std::vector<std::string> doomed;
    for (const auto& u : state.unselected) {
      const double r = cache.mi(ai, idx_of(u));
      if (r >= state.threshold) {
        doomed.push_back(u);
        result.removed.push_back({u, anchor, r});
      }
    }
    for (const auto& d : doomed) {
      state.unselected.erase(d);
      state.removed.insert(d);
    }
  };

  // Algorithm pre-loop: drop candidates completely redundant to preselected S0
  for (const auto& p : preselected) remove_redundant_to(p);

  std::size_t selected_this_run = 0;
  while (!state.unselected.empty()) {
    if (options.max_rank > 0 && result.ranked.size() >= options.max_rank) {
      result.truncated = true;
      break;
    }
    std::optional<std::string> best;
    CandidateScore best_score;
    IterationScores iter;
    for (const auto& u : state.unselected) {
      const CandidateScore s = score_candidate(u, state, cache);
      if (options.record_iterations) iter.candidates.emplace_back(u, s);
      if (!best || s.total > best_score.total ||
          (s.total == best_score.total && u < *best)) {
        best = u;
        best_score = s;
      }
    }
    if (options.record_iterations) result.iterations.push_back(std::move(iter));

    state.unselected.erase(*best);
    state.selected.push_back(*best);
    result.ranked.push_back({*best, best_score, false});
    ++selected_this_run;
    remove_redundant_to(*best);
  }

  if (result.ranked.empty()) {
    throw InputError("select_features: every feature was removed before any selection (" +
                     std::to_string(result.removed.size()) + " removed)");
  }
  return result;
}

struct RankReportRow {
  int rank = 0;
  std::string name;
  CandidateScore score;
  bool preselected = false;
};

// Ranked table of the selected set with the score components recorded at
// selection time.
inline std::vector<RankReportRow> rank_report(const SelectionResult& result) {
  std::vector<RankReportRow> rows;
  rows.reserve(result.ranked.size());
  int rank = 1;
  for (const auto& rf : result.ranked) {
    rows.push_back({rank++, rf.name, rf.score, rf.preselected});
  }
  return rows;
}

}  // namespace modhealth::featsel
