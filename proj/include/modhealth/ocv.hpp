#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "modhealth/common.hpp"

namespace modhealth::sim {

// Open-circuit voltage as a monotone piecewise-cubic (Fritsch-Carlson) over
// SoC control points. Monotone Hermite slopes keep the interpolant strictly
// increasing for strictly increasing data, which downstream differentiation
// relies on. Outside [first, last] the curve extends linearly with the end
// slopes.
class OCVModel {
 public:
  OCVModel(std::string version, std::vector<double> soc, std::vector<double> voltage)
      : version_(std::move(version)), x_(std::move(soc)), y_(std::move(voltage)) {
    if (x_.size() != y_.size() || x_.size() < 2) {
      throw InputError("OCVModel: need matching SoC/voltage lists with >= 2 points");
    }
    for (std::size_t i = 1; i < x_.size(); ++i) {
      if (!(x_[i] > x_[i - 1])) throw InputError("OCVModel: SoC points must increase");
      if (!(y_[i] > y_[i - 1])) throw InputError("OCVModel: voltage must increase in SoC");
    }
    build_slopes();
  }

  const std::string& version() const { return version_; }
  double soc_min() const { return x_.front(); }
  double soc_max() const { return x_.back(); }
  double v_min() const { return y_.front(); }
  double v_max() const { return y_.back(); }

  double value(double soc) const {
    if (soc <= x_.front()) return y_.front() + d_.front() * (soc - x_.front());
    if (soc >= x_.back()) return y_.back() + d_.back() * (soc - x_.back());
    // locate interval: x_[i] <= soc < x_[i+1]
    std::size_t lo = 0, hi = x_.size() - 1;
    while (hi - lo > 1) {
      const std::size_t mid = (lo + hi) / 2;
      if (x_[mid] <= soc)
        lo = mid;
      else
        hi = mid;
    }
    const double h = x_[lo + 1] - x_[lo];
    const double t = (soc - x_[lo]) / h;
    const double t2 = t * t, t3 = t2 * t;
    const double h00 = 2 * t3 - 3 * t2 + 1;
    const double h10 = t3 - 2 * t2 + t;
    const double h01 = -2 * t3 + 3 * t2;
    const double h11 = t3 - t2;
    return h00 * y_[lo] + h10 * h * d_[lo] + h01 * y_[lo + 1] + h11 * h * d_[lo + 1];
  }

 private:
  void build_slopes() {
    const std::size_t n = x_.size();
    std::vector<double> h(n - 1), delta(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
      h[i] = x_[i + 1] - x_[i];
      delta[i] = (y_[i + 1] - y_[i]) / h[i];
    }
    d_.assign(n, 0.0);
    d_[0] = delta[0];
    d_[n - 1] = delta[n - 2];
    for (std::size_t i = 1; i + 1 < n; ++i) {
      if (delta[i - 1] * delta[i] <= 0.0) {
        d_[i] = 0.0;
      } else {
        const double w1 = 2 * h[i] + h[i - 1];
        const double w2 = h[i] + 2 * h[i - 1];
        d_[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
      }
    }
  }

  std::string version_;
  std::vector<double> x_, y_, d_;
};

// Default synthetic chemistry: two plateau regions (SoC ~0.2-0.42 and
// ~0.55-0.82) separated by a riser, so IC curves show two peaks and one
// interior valley over a [3.0, 4.2] V charge window.
inline const OCVModel& builtin_ocv() {
  static const OCVModel model(
      "synth-nca-ocv-v1",
      {0.00, 0.08, 0.20, 0.32, 0.42, 0.55, 0.68, 0.80, 0.92, 1.00},
      {3.00, 3.35, 3.45, 3.50, 3.55, 3.70, 3.76, 3.82, 3.98, 4.20});
  return model;
}

}  // namespace modhealth::sim
