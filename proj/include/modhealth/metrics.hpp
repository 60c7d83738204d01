#pragma once

#include <algorithm>
#include <vector>

#include "modhealth/common.hpp"

namespace modhealth::metrics {

// Health and cell-to-cell-variation statistics of one module, all derived from
// the list of per-cell states of health. Conventions: M-SoH is the mean of the
// cell values, SD is the population standard deviation (divide by N, not N-1),
// range is max - min, and CV = SD / M-SoH.
struct SohLabels {
  std::vector<double> c_soh;
  double m_soh = 0.0;
  double sd = 0.0;
  double range = 0.0;
  double cv = 0.0;
};

inline SohLabels compute_labels(const std::vector<double>& c_soh) {
  if (c_soh.empty()) throw InputError("compute_labels: empty C-SoH list");
  for (double x : c_soh) {
    if (!(x > 0.0 && x <= 1.0)) {
      throw InputError("compute_labels: C-SoH values must lie in (0, 1]");
    }
  }
  SohLabels out;
  out.c_soh = c_soh;
  out.m_soh = mean(c_soh);
  out.sd = population_sd(c_soh);
  const auto [lo, hi] = std::minmax_element(c_soh.begin(), c_soh.end());
  out.range = *hi - *lo;
  out.cv = out.sd / out.m_soh;
  return out;
}

}  // namespace modhealth::metrics
