#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "modhealth/common.hpp"
#include "modhealth/qv_profile.hpp"

namespace modhealth::curves {

enum class Orientation { q_of_v, v_of_q };
enum class CurveKind { ic, dv };

struct SmoothingConfig {
  double kernel_width = 0.0;        // abscissa units; 0 = 4x median support spacing
  double regularization = 3e-7;     // ridge factor, scaled by N internally
  double insensitivity_margin = 0.0;  // epsilon of the insensitive loss; 0 = plain ridge
  std::size_t n_support = 200;
  double rmse_bound = 0.0;          // ordinate units; 0 = unchecked
};

// Smooth model of one charge curve: affine trend plus a radial-basis expansion
// on fixed support locations, differentiable in closed form everywhere. The
// affine part carries the global ramp so the kernel part only shapes residuals.
struct SmoothedCurveModel {
  Orientation orientation = Orientation::q_of_v;
  double kernel_width = 0.0;
  double slope = 0.0;
  double intercept = 0.0;  // ordinate bias
  std::vector<double> supports;
  std::vector<double> weights;
  double window_lo = 0.0;
  double window_hi = 0.0;
  double fit_rmse = 0.0;

  double evaluate(double x) const {
    double acc = intercept + slope * x;
    const double inv2w2 = 1.0 / (2.0 * kernel_width * kernel_width);
    for (std::size_t j = 0; j < supports.size(); ++j) {
      const double d = x - supports[j];
      acc += weights[j] * std::exp(-d * d * inv2w2);
    }
    return acc;
  }

  double derivative(double x) const {
    double acc = slope;
    const double inv_w2 = 1.0 / (kernel_width * kernel_width);
    for (std::size_t j = 0; j < supports.size(); ++j) {
      const double d = x - supports[j];
      acc += weights[j] * (-d * inv_w2) * std::exp(-0.5 * d * d * inv_w2);
    }
    return acc;
  }
};

// IC (dQ/dV vs V) or DV (dV/dQ vs Q) samples on a uniform grid.
struct DifferentialCurve {
  std::vector<double> grid;
  std::vector<double> values;
  CurveKind kind = CurveKind::ic;

  void validate() const {
    if (grid.size() != values.size() || grid.size() < 8) {
      throw InputError("DifferentialCurve: grid/value size mismatch or too short");
    }
    for (std::size_t i = 1; i < grid.size(); ++i) {
      if (!(grid[i] > grid[i - 1])) throw InputError("DifferentialCurve: grid must increase");
    }
    for (double v : values) {
      if (!std::isfinite(v)) throw InputError("DifferentialCurve: non-finite value");
    }
  }
};

namespace detail {

inline Eigen::MatrixXd rbf_design(const std::vector<double>& x,
                                  const std::vector<double>& supports, double width) {
  Eigen::MatrixXd psi(x.size(), supports.size());
  const double inv2w2 = 1.0 / (2.0 * width * width);
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = 0; j < supports.size(); ++j) {
      const double d = x[i] - supports[j];
      psi(i, j) = std::exp(-d * d * inv2w2);
    }
  }
  return psi;
}

inline Eigen::VectorXd solve_ridge(const Eigen::MatrixXd& psi, const Eigen::VectorXd& rhs,
                                   double lambda) {
  const auto m = psi.cols();
  Eigen::MatrixXd normal = psi.transpose() * psi;
  normal.diagonal().array() += lambda;
  Eigen::LLT<Eigen::MatrixXd> llt(normal);
  if (llt.info() != Eigen::Success) {
    normal.diagonal().array() += 1e-10 * normal.trace() / static_cast<double>(m);
    llt.compute(normal);
    if (llt.info() != Eigen::Success) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(normal, Eigen::EigenvaluesOnly);
      const double cond = es.eigenvalues().maxCoeff() /
                          std::max(es.eigenvalues().minCoeff(), 1e-300);
      throw NumericError("fit_qv_model: ill-conditioned normal equations, condition ~" +
                         std::to_string(cond));
    }
  }
  return llt.solve(psi.transpose() * rhs);
}

}  // namespace detail

// Fit the smooth model in the requested orientation: Q as a function of V for
// later IC evaluation, or V as a function of Q for DV. A nonzero insensitivity
// margin switches the data term to the squared epsilon-insensitive loss,
// minimized by active-set reweighted least squares.
inline SmoothedCurveModel fit_qv_model(const QVProfile& profile, const SmoothingConfig& hyper,
                                       Orientation orientation) {
  profile.validate();
  const std::size_t n = profile.samples.size();
  std::vector<double> x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& s = profile.samples[i];
    x[i] = orientation == Orientation::q_of_v ? s.voltage_v : s.capacity_ah;
    y[i] = orientation == Orientation::q_of_v ? s.capacity_ah : s.voltage_v;
  }

  SmoothedCurveModel model;
  model.orientation = orientation;
  model.window_lo = x.front();
  model.window_hi = x.back();
  if (!(model.window_hi > model.window_lo)) {
    throw InputError("fit_qv_model: degenerate abscissa window");
  }

  // affine baseline (least squares)
  const double xm = mean(x), ym = mean(y);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - xm) * (x[i] - xm);
    sxy += (x[i] - xm) * (y[i] - ym);
  }
  model.slope = sxy / sxx;
  model.intercept = ym - model.slope * xm;

  // uniform supports over the window, padded so edge behavior stays smooth
  const std::size_t m = std::min<std::size_t>(std::max<std::size_t>(hyper.n_support, 8), n);
  const double spacing = (model.window_hi - model.window_lo) / static_cast<double>(m - 1);
  model.kernel_width = hyper.kernel_width > 0.0 ? hyper.kernel_width : 4.0 * spacing;
  const int pad = static_cast<int>(std::ceil(model.kernel_width / spacing));
  model.supports.clear();
  for (int j = -pad; j < static_cast<int>(m) + pad; ++j) {
    model.supports.push_back(model.window_lo + spacing * j);
  }

  Eigen::VectorXd resid(n);
  for (std::size_t i = 0; i < n; ++i) {
    resid(i) = y[i] - (model.intercept + model.slope * x[i]);
  }
  const Eigen::MatrixXd psi = detail::rbf_design(x, model.supports, model.kernel_width);
  const double lambda = hyper.regularization * static_cast<double>(n);

  Eigen::VectorXd coeff = detail::solve_ridge(psi, resid, lambda);

  if (hyper.insensitivity_margin > 0.0) {
    const double eps = hyper.insensitivity_margin;
    std::vector<char> active(n, 1);
    for (int iter = 0; iter < 50; ++iter) {
      const Eigen::VectorXd fit = psi * coeff;
      std::vector<char> next(n, 0);
      std::size_t n_active = 0;
      for (std::size_t i = 0; i < n; ++i) {
        next[i] = std::fabs(resid(i) - fit(i)) > eps ? 1 : 0;
        n_active += next[i];
      }
      if (next == active) break;
      active = next;
      if (n_active == 0) break;
      Eigen::MatrixXd psi_a(n_active, model.supports.size());
      Eigen::VectorXd rhs_a(n_active);
      std::size_t r = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (!active[i]) continue;
        psi_a.row(r) = psi.row(i);
        const double sign = (resid(i) - fit(i)) > 0.0 ? 1.0 : -1.0;
        rhs_a(r) = resid(i) - sign * eps;
        ++r;
      }
      coeff = detail::solve_ridge(psi_a, rhs_a, lambda);
    }
  }

  model.weights.assign(coeff.data(), coeff.data() + coeff.size());

  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = y[i] - model.evaluate(x[i]);
    ss += e * e;
  }
  model.fit_rmse = std::sqrt(ss / static_cast<double>(n));
  if (hyper.rmse_bound > 0.0 && model.fit_rmse > hyper.rmse_bound) {
    throw NumericError("fit_qv_model: fit RMSE " + std::to_string(model.fit_rmse) +
                       " exceeds bound " + std::to_string(hyper.rmse_bound));
  }
  return model;
}

namespace detail {

inline DifferentialCurve differentiate_on_grid(const SmoothedCurveModel& model,
                                               const std::vector<double>& grid,
                                               CurveKind kind) {
  if (grid.size() < 8) throw InputError("differential curve: grid too short");
  const double slack = 1e-9 * (model.window_hi - model.window_lo);
  if (grid.front() < model.window_lo - slack || grid.back() > model.window_hi + slack) {
    throw DomainError("differential curve: grid outside the fit window");
  }
  DifferentialCurve out;
  out.kind = kind;
  out.grid = grid;
  out.values.resize(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) out.values[i] = model.derivative(grid[i]);
  out.validate();
  return out;
}

}  // namespace detail

// IC = dQ/dV evaluated from the closed-form derivative of the fitted Q(V).
inline DifferentialCurve compute_ic_curve(const SmoothedCurveModel& model,
                                          const std::vector<double>& voltage_grid) {
  if (model.orientation != Orientation::q_of_v) {
    throw DomainError("compute_ic_curve: model must be fitted as Q(V)");
  }
  return detail::differentiate_on_grid(model, voltage_grid, CurveKind::ic);
}

// DV = dV/dQ evaluated from the closed-form derivative of the fitted V(Q).
inline DifferentialCurve compute_dv_curve(const SmoothedCurveModel& model,
                                          const std::vector<double>& capacity_grid) {
  if (model.orientation != Orientation::v_of_q) {
    throw DomainError("compute_dv_curve: model must be fitted as V(Q)");
  }
  return detail::differentiate_on_grid(model, capacity_grid, CurveKind::dv);
}

inline std::vector<double> uniform_grid(const SmoothedCurveModel& model, std::size_t n = 500) {
  return linspace(model.window_lo, model.window_hi, n);
}

}  // namespace modhealth::curves
