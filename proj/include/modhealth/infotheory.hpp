#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "modhealth/common.hpp"

namespace modhealth::infotheory {

enum class ColumnKind { continuous, discrete, mixed };

// One variable's samples. Estimation calls expect standardized columns
// (standardize() below) of at least 20 samples.
struct SampleColumn {
  std::vector<double> values;
  ColumnKind declared_kind = ColumnKind::continuous;
};

struct MIEstimate {
  double raw = 0.0;         // nats, signed (finite-sample estimates can dip below 0)
  double normalized = 0.0;  // raw / min(self_f, self_g), clipped to [0, 1]
  int k_neighbors = 0;
  std::uint64_t seed = 0;  // seed of the white-noise conditioning draw
};

// Zero-mean unit-variance rescaling with the population sd.
inline SampleColumn standardize(const SampleColumn& column) {
  const auto& v = column.values;
  if (v.size() < 2) throw InputError("standardize: need at least 2 samples");
  const double m = mean(v);
  const double s = population_sd(v);
  if (!(s > 0.0)) {
    throw InputError("standardize: zero-variance column (drop constant features)");
  }
  SampleColumn out;
  out.declared_kind = column.declared_kind;
  out.values.resize(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out.values[i] = (v[i] - m) / s;
  return out;
}

namespace detail {

// psi(n) for positive integers: psi(1) = -gamma, psi(n) = psi(n-1) + 1/(n-1).
inline std::vector<double> digamma_table(std::size_t n_max) {
  constexpr double kEulerGamma = 0.57721566490153286060651209008240243;
  std::vector<double> psi(n_max + 1, 0.0);
  if (n_max >= 1) psi[1] = -kEulerGamma;
  for (std::size_t n = 2; n <= n_max; ++n) {
    psi[n] = psi[n - 1] + 1.0 / static_cast<double>(n - 1);
  }
  return psi;
}

}  // namespace detail

// Mixed-data k-nearest-neighbor estimate of I(F;G|H) in nats.
//
// For each sample, the k-th neighbor distance rho under the max-norm in the
// joint (f,g,h) space defines a radius; neighbors within (<=) that radius are
// counted in the (f,h), (g,h), and (h) marginal spaces, and the contributions
// psi(k~) - psi(n_fh) - psi(n_gh) + psi(n_h) are averaged. Distance ties at the
// radius (repeated discrete values) inflate k~ to the realized in-radius count.
// Counts never include the query point itself. Exact O(N^2) neighbor search.
inline double estimate_cmi(const SampleColumn& f, const SampleColumn& g,
                           const SampleColumn& h, int k) {
  const std::size_t n = f.values.size();
  if (g.values.size() != n || h.values.size() != n) {
    throw InputError("estimate_cmi: columns must have equal length");
  }
  if (n < 20) throw InputError("estimate_cmi: need at least 20 samples");
  if (k < 3 || static_cast<std::size_t>(k) > n / 4) {
    throw ConfigError("estimate_cmi: k must lie in [3, N/4]");
  }

  const double* fv = f.values.data();
  const double* gv = g.values.data();
  const double* hv = h.values.data();
  const auto psi = detail::digamma_table(n);

  std::vector<double> df(n), dg(n), dh(n), joint(n), scratch;
  scratch.reserve(n);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      df[j] = std::fabs(fv[i] - fv[j]);
      dg[j] = std::fabs(gv[i] - gv[j]);
      dh[j] = std::fabs(hv[i] - hv[j]);
      joint[j] = std::max(std::max(df[j], dg[j]), dh[j]);
    }
    scratch.clear();
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) scratch.push_back(joint[j]);
    }
    std::nth_element(scratch.begin(), scratch.begin() + (k - 1), scratch.end());
    const double rho = scratch[k - 1];

    std::size_t k_tilde = 0, n_fh = 0, n_gh = 0, n_h = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      if (dh[j] <= rho) {
        ++n_h;
        if (df[j] <= rho) ++n_fh;
        if (dg[j] <= rho) ++n_gh;
        if (joint[j] <= rho) ++k_tilde;
      }
    }
    // Grouped so that swapping f and g is bitwise neutral.
    acc += (psi[k_tilde] + psi[n_h]) - (psi[n_fh] + psi[n_gh]);
  }
  return acc / static_cast<double>(n);
}

// MI via the same estimator with H set to an independent standardized white
// Gaussian noise column; one fresh draw per call, pinned by the seed.
inline double estimate_mi(const SampleColumn& f, const SampleColumn& g, int k,
                          std::uint64_t seed) {
  const std::size_t n = f.values.size();
  NormalSampler normal(seed);
  SampleColumn noise;
  noise.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) noise.values[i] = normal();
  return estimate_cmi(f, g, standardize(noise), k);
}

// raw / min(self_f, self_g), clipped to [0, 1]. Self-MI values are the finite
// kNN self-estimates standing in for the (divergent) continuous self-information.
inline double normalize(double raw, double self_f, double self_g) {
  if (!(self_f > 0.0) || !(self_g > 0.0)) {
    throw InputError("normalize: nonpositive self-MI (degenerate feature)");
  }
  const double v = raw / std::min(self_f, self_g);
  return std::clamp(v, 0.0, 1.0);
}

// Raw + normalized MI of a pair, with both self-MIs computed at the same k and
// seed as the cross estimate.
inline MIEstimate estimate_mi_normalized(const SampleColumn& f, const SampleColumn& g,
                                         int k, std::uint64_t seed) {
  MIEstimate est;
  est.k_neighbors = k;
  est.seed = seed;
  est.raw = estimate_mi(f, g, k, seed);
  const double self_f = estimate_mi(f, f, k, seed);
  const double self_g = estimate_mi(g, g, k, seed);
  est.normalized = normalize(est.raw, self_f, self_g);
  return est;
}

}  // namespace modhealth::infotheory
