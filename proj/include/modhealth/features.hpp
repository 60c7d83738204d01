#pragma once

#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "modhealth/common.hpp"
#include "modhealth/curves.hpp"

namespace modhealth::features {

// Catalog categories, in canonical (table) order.
enum class FeatureCategory {
  ic_peak_height,
  ic_peak_location,
  dv_valley_height,
  dv_valley_location,
  ic_valley_height,
  ic_valley_location,
  dv_peak_height,
  dv_peak_location,
  ic_peak_area,
  ic_partial_area,
  temperature,
  c_rate,
};

inline const char* category_acronym(FeatureCategory c) {
  switch (c) {
    case FeatureCategory::ic_peak_height: return "IC PH";
    case FeatureCategory::ic_peak_location: return "IC PL";
    case FeatureCategory::dv_valley_height: return "DV VH";
    case FeatureCategory::dv_valley_location: return "DV VL";
    case FeatureCategory::ic_valley_height: return "IC VH";
    case FeatureCategory::ic_valley_location: return "IC VL";
    case FeatureCategory::dv_peak_height: return "DV PH";
    case FeatureCategory::dv_peak_location: return "DV PL";
    case FeatureCategory::ic_peak_area: return "IC AR";
    case FeatureCategory::ic_partial_area: return "IC PA";
    case FeatureCategory::temperature: return "Temperature";
    case FeatureCategory::c_rate: return "C Rate";
  }
  return "?";
}

// (category, left-to-right ordinal). Charging-condition features carry no
// ordinal. The canonical name, e.g. "IC PH 1", identifies a feature uniquely.
struct FeatureDescriptor {
  FeatureCategory category = FeatureCategory::c_rate;
  int index = 0;  // 1-based; 0 for Temperature / C Rate

  std::string name() const {
    std::string s = category_acronym(category);
    if (index > 0) s += " " + std::to_string(index);
    return s;
  }

  friend bool operator<(const FeatureDescriptor& a, const FeatureDescriptor& b) {
    if (a.category != b.category) return a.category < b.category;
    return a.index < b.index;
  }
  friend bool operator==(const FeatureDescriptor& a, const FeatureDescriptor& b) {
    return a.category == b.category && a.index == b.index;
  }
};

struct FeatureVector {
  std::map<FeatureDescriptor, double> values;  // absent features simply missing
  std::string module_id;
  double c_rate = 0.0;
  double temperature_c = 25.0;
};

struct Extremum {
  enum class Kind { peak, valley };
  Kind kind = Kind::peak;
  double location = 0.0;
  double height = 0.0;
};

// Interior peaks and valleys of a sampled curve, pruned so every survivor
// stands out by at least `prominence` against its flanking opposite extrema
// (window endpoints act as flanks for the outermost extrema). Survivors
// alternate peak/valley and are sorted by abscissa. A flat curve yields an
// empty list.
inline std::vector<Extremum> detect_extrema(const curves::DifferentialCurve& curve,
                                            double prominence) {
  curve.validate();
  if (!(prominence > 0.0)) throw InputError("detect_extrema: prominence must be > 0");
  const auto& g = curve.grid;
  const auto& v = curve.values;
  const std::size_t n = v.size();

  // alternating raw extrema from sign changes of consecutive differences;
  // plateaus inherit the last nonzero trend
  std::vector<Extremum> seq;
  int last_sign = 0;
  std::size_t run_start = 0;  // start of the current flat run
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double d = v[i + 1] - v[i];
    const int s = d > 0.0 ? 1 : (d < 0.0 ? -1 : 0);
    if (s == 0) continue;
    if (last_sign != 0 && s != last_sign) {
      const std::size_t at = (run_start + i) / 2 + (run_start + i) % 2;
      seq.push_back({last_sign > 0 ? Extremum::Kind::peak : Extremum::Kind::valley,
                     g[at], v[at]});
    }
    last_sign = s;
    run_start = i + 1;
  }

  // persistence-style pruning: repeatedly remove the shallowest oscillation
  // until every adjacent gap (window endpoints included as flanks) reaches the
  // prominence. Interior removals drop a peak/valley pair, edge removals merge
  // the outermost extremum into the boundary run; alternation is preserved.
  while (!seq.empty()) {
    enum class Where { none, edge_left, edge_right, interior };
    Where where = Where::none;
    double min_gap = prominence;
    std::size_t idx = 0;
    const double gl = std::fabs(seq.front().height - v.front());
    if (gl < min_gap) {
      min_gap = gl;
      where = Where::edge_left;
    }
    const double gr = std::fabs(seq.back().height - v.back());
    if (gr < min_gap) {
      min_gap = gr;
      where = Where::edge_right;
    }
    for (std::size_t i = 0; i + 1 < seq.size(); ++i) {
      const double gi = std::fabs(seq[i].height - seq[i + 1].height);
      if (gi < min_gap) {
        min_gap = gi;
        where = Where::interior;
        idx = i;
      }
    }
    if (where == Where::none) break;
    if (where == Where::edge_left) {
      seq.erase(seq.begin());
    } else if (where == Where::edge_right) {
      seq.pop_back();
    } else {
      seq.erase(seq.begin() + idx, seq.begin() + idx + 2);
    }
  }
  return seq;
}

namespace detail {

inline double interp(const std::vector<double>& xs, const std::vector<double>& ys, double x) {
  if (x <= xs.front()) return ys.front();
  if (x >= xs.back()) return ys.back();
  const auto it = std::upper_bound(xs.begin(), xs.end(), x);
  const std::size_t hi = static_cast<std::size_t>(it - xs.begin());
  const std::size_t lo = hi - 1;
  const double t = (x - xs[lo]) / (xs[hi] - xs[lo]);
  return ys[lo] + t * (ys[hi] - ys[lo]);
}

// trapezoid integral of the sampled curve over [a, b] with interpolated ends
inline double integrate(const curves::DifferentialCurve& c, double a, double b) {
  if (!(b >= a)) throw InputError("integrate: inverted bounds");
  const auto& g = c.grid;
  const auto& v = c.values;
  const double fa = interp(g, v, a), fb = interp(g, v, b);
  double acc = 0.0;
  double prev_x = a, prev_y = fa;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g[i] <= a) continue;
    if (g[i] >= b) break;
    acc += 0.5 * (prev_y + v[i]) * (g[i] - prev_x);
    prev_x = g[i];
    prev_y = v[i];
  }
  acc += 0.5 * (prev_y + fb) * (b - prev_x);
  return acc;
}

}  // namespace detail

// IC areas over the valley-delimited voltage segments. With two interior
// valleys the segments are [v_min, valley1], [valley1, valley2],
// [valley2, v_max]; with one valley the third area is absent; with none only
// the total is present. Absent segments propagate as missing features.
inline std::array<std::optional<double>, 3> ic_peak_areas(
    const curves::DifferentialCurve& ic, const std::vector<double>& valley_locations) {
  if (ic.kind != curves::CurveKind::ic) throw InputError("ic_peak_areas: IC curve required");
  ic.validate();
  if (valley_locations.size() > 2) {
    throw InputError("ic_peak_areas: at most two interior valleys expected");
  }
  const double lo = ic.grid.front(), hi = ic.grid.back();
  std::array<std::optional<double>, 3> areas;
  if (valley_locations.empty()) {
    areas[0] = detail::integrate(ic, lo, hi);
  } else if (valley_locations.size() == 1) {
    areas[0] = detail::integrate(ic, lo, valley_locations[0]);
    areas[1] = detail::integrate(ic, valley_locations[0], hi);
  } else {
    areas[0] = detail::integrate(ic, lo, valley_locations[0]);
    areas[1] = detail::integrate(ic, valley_locations[0], valley_locations[1]);
    areas[2] = detail::integrate(ic, valley_locations[1], hi);
  }
  return areas;
}

enum class PartialAreaMode { cutoff_line, voltage_window };

struct PartialArea {
  double area_ah = 0.0;
  bool clipped = false;  // window extended past the curve domain
};

// Area above a horizontal cutoff line (contiguous region around the peak where
// the curve stays >= the cutoff), or the plain integral over a symmetric
// window centered on the peak.
inline PartialArea ic_partial_area(const curves::DifferentialCurve& ic, const Extremum& peak,
                                   PartialAreaMode mode, double parameter) {
  ic.validate();
  if (peak.kind != Extremum::Kind::peak) throw InputError("ic_partial_area: peak required");
  PartialArea out;
  const auto& g = ic.grid;
  const auto& v = ic.values;

  if (mode == PartialAreaMode::voltage_window) {
    if (!(parameter > 0.0)) throw InputError("ic_partial_area: window width must be > 0");
    double a = peak.location - 0.5 * parameter;
    double b = peak.location + 0.5 * parameter;
    if (a < g.front()) {
      a = g.front();
      out.clipped = true;
    }
    if (b > g.back()) {
      b = g.back();
      out.clipped = true;
    }
    out.area_ah = detail::integrate(ic, a, b);
    return out;
  }

  const double h = parameter;
  if (h >= peak.height) return out;  // cutoff above the peak: zero area

  // nearest grid index to the peak
  std::size_t p = 0;
  double best = std::fabs(g[0] - peak.location);
  for (std::size_t i = 1; i < g.size(); ++i) {
    const double d = std::fabs(g[i] - peak.location);
    if (d < best) {
      best = d;
      p = i;
    }
  }
  // crossings of the cutoff on each side, linearly interpolated
  double a = g.front();
  for (std::size_t i = p; i-- > 0;) {
    if (v[i] < h) {
      const double t = (h - v[i]) / (v[i + 1] - v[i]);
      a = g[i] + t * (g[i + 1] - g[i]);
      break;
    }
  }
  double b = g.back();
  for (std::size_t i = p + 1; i < g.size(); ++i) {
    if (v[i] < h) {
      const double t = (h - v[i - 1]) / (v[i] - v[i - 1]);
      b = g[i - 1] + t * (g[i] - g[i - 1]);
      break;
    }
  }
  out.area_ah = detail::integrate(ic, a, b) - h * (b - a);
  return out;
}

struct ExtractionOptions {
  double prominence_fraction = 0.05;   // of the trimmed curve's ordinate range
  double trim_fraction = 0.05;         // cut from each end before extraction
  double partial_area_cutoff = 0.5;    // cutoff at this fraction of peak height
};

namespace detail {

inline curves::DifferentialCurve trim(const curves::DifferentialCurve& c, double frac) {
  const std::size_t n = c.grid.size();
  const auto cut = static_cast<std::size_t>(std::floor(frac * static_cast<double>(n)));
  if (n < 2 * cut + 8) throw InputError("trim: curve too short for trim fraction");
  curves::DifferentialCurve out;
  out.kind = c.kind;
  out.grid.assign(c.grid.begin() + cut, c.grid.end() - cut);
  out.values.assign(c.values.begin() + cut, c.values.end() - cut);
  return out;
}

}  // namespace detail

struct ChargeMeta {
  std::string module_id;
  double c_rate = 0.0;
  double temperature_c = 25.0;
};

// Every catalog feature that exists on this charge's IC/DV pair, under
// left-to-right ordinal naming. The outer trim_fraction of each curve is
// excluded first (derivative edge artifacts).
inline FeatureVector assemble_feature_vector(const curves::DifferentialCurve& ic_full,
                                             const curves::DifferentialCurve& dv_full,
                                             const ChargeMeta& meta,
                                             const ExtractionOptions& opt = {}) {
  if (ic_full.kind != curves::CurveKind::ic || dv_full.kind != curves::CurveKind::dv) {
    throw InputError("assemble_feature_vector: need one IC and one DV curve");
  }
  const auto ic = detail::trim(ic_full, opt.trim_fraction);
  const auto dv = detail::trim(dv_full, opt.trim_fraction);

  FeatureVector fv;
  fv.module_id = meta.module_id;
  fv.c_rate = meta.c_rate;
  fv.temperature_c = meta.temperature_c;

  auto put = [&fv](FeatureCategory cat, int idx, double value) {
    if (!std::isfinite(value)) throw NumericError("assemble_feature_vector: non-finite feature");
    fv.values[{cat, idx}] = value;
  };

  auto ordinate_range = [](const curves::DifferentialCurve& c) {
    const auto [lo, hi] = std::minmax_element(c.values.begin(), c.values.end());
    return *hi - *lo;
  };

  const double ic_range = ordinate_range(ic);
  std::vector<Extremum> ic_ext;
  if (ic_range > 0.0) ic_ext = detect_extrema(ic, opt.prominence_fraction * ic_range);
  const double dv_range = ordinate_range(dv);
  std::vector<Extremum> dv_ext;
  if (dv_range > 0.0) dv_ext = detect_extrema(dv, opt.prominence_fraction * dv_range);

  int ic_pk = 0, ic_vl = 0;
  std::vector<Extremum> ic_peaks;
  std::vector<double> ic_valley_locs;
  for (const auto& e : ic_ext) {
    if (e.kind == Extremum::Kind::peak) {
      ++ic_pk;
      put(FeatureCategory::ic_peak_height, ic_pk, e.height);
      put(FeatureCategory::ic_peak_location, ic_pk, e.location);
      ic_peaks.push_back(e);
    } else {
      ++ic_vl;
      put(FeatureCategory::ic_valley_height, ic_vl, e.height);
      put(FeatureCategory::ic_valley_location, ic_vl, e.location);
      if (ic_valley_locs.size() < 2) ic_valley_locs.push_back(e.location);
    }
  }
  int dv_pk = 0, dv_vl = 0;
  for (const auto& e : dv_ext) {
    if (e.kind == Extremum::Kind::peak) {
      ++dv_pk;
      put(FeatureCategory::dv_peak_height, dv_pk, e.height);
      put(FeatureCategory::dv_peak_location, dv_pk, e.location);
    } else {
      ++dv_vl;
      put(FeatureCategory::dv_valley_height, dv_vl, e.height);
      put(FeatureCategory::dv_valley_location, dv_vl, e.location);
    }
  }

  const auto areas = ic_peak_areas(ic, ic_valley_locs);
  for (int i = 0; i < 3; ++i) {
    if (areas[i]) put(FeatureCategory::ic_peak_area, i + 1, *areas[i]);
  }
  for (std::size_t i = 0; i < ic_peaks.size(); ++i) {
    const auto pa = ic_partial_area(ic, ic_peaks[i], PartialAreaMode::cutoff_line,
                                    opt.partial_area_cutoff * ic_peaks[i].height);
    put(FeatureCategory::ic_partial_area, static_cast<int>(i) + 1, pa.area_ah);
  }

  put(FeatureCategory::temperature, 0, meta.temperature_c);
  put(FeatureCategory::c_rate, 0, meta.c_rate);
  return fv;
}

}  // namespace modhealth::features
