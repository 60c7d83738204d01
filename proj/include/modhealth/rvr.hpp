#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "modhealth/common.hpp"

namespace modhealth::rvr {

// Radial-basis kernel on standardized inputs: K(x,x') = exp(-|x-x'|^2 / (2 w^2)).
struct KernelConfig {
  double width = 1.0;
  bool include_offset = true;

  void validate() const {
    if (!(width > 0.0)) throw ConfigError("KernelConfig: width must be > 0");
  }
};

struct TrainLimits {
  int max_iterations = 3000;
  double tolerance = 1e-3;       // on max |delta log alpha|
  double prune_threshold = 1e9;  // alpha above this collapses the weight
  int stagnation_window = 200;   // stop after this many non-improving iterations
};

struct Scaler {
  double mean = 0.0;
  double sd = 1.0;
};

struct Prediction {
  double mean = 0.0;      // physical output units
  double variance = 0.0;  // squared output units
  double lower = 0.0;     // mean - 3 sigma
  double upper = 0.0;     // mean + 3 sigma
};

// Trained sparse regressor. Relevance vectors are stored standardized; the
// scalers map between raw and standardized spaces on both sides.
struct RVRModel {
  KernelConfig kernel;
  std::vector<Scaler> input_scaler;
  Scaler output_scaler;
  Eigen::MatrixXd relevance_vectors;  // N_rv x dim, standardized
  bool offset_retained = true;
  Eigen::VectorXd posterior_mean;  // length N_rv + offset
  Eigen::MatrixXd posterior_cov;
  Eigen::VectorXd alphas;
  double noise_precision = 0.0;  // beta_MP, standardized space

  // diagnostics
  std::vector<double> mll_trace;
  std::vector<int> prune_iterations;
  int iterations = 0;
  bool converged = false;

  std::size_t n_relevance_vectors() const {
    return static_cast<std::size_t>(relevance_vectors.rows());
  }
};

inline double kernel_value(const KernelConfig& k, const Eigen::VectorXd& a,
                           const Eigen::VectorXd& b) {
  return std::exp(-(a - b).squaredNorm() / (2.0 * k.width * k.width));
}

// Phi row i = [1, K(x_i, x_1), ..., K(x_i, x_N)] (offset column optional).
inline Eigen::MatrixXd build_design_matrix(const Eigen::MatrixXd& inputs,
                                           const KernelConfig& kernel) {
  kernel.validate();
  const auto n = inputs.rows();
  if (n < 1) throw InputError("build_design_matrix: empty inputs");
  const int off = kernel.include_offset ? 1 : 0;
  Eigen::MatrixXd phi(n, n + off);
  if (off) phi.col(0).setOnes();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      phi(i, j + off) = kernel_value(kernel, inputs.row(i), inputs.row(j));
    }
  }
  return phi;
}

namespace detail {

struct PosteriorState {
  Eigen::MatrixXd sigma;
  Eigen::VectorXd mu;
  double logdet_sigma_inv = 0.0;
};

// Sigma = (beta Phi'Phi + A)^-1 and mu = beta Sigma Phi' y via a symmetric
// factorization, with one jitter retry.
inline PosteriorState compute_posterior(const Eigen::MatrixXd& gram_aa,
                                        const Eigen::VectorXd& phity_a,
                                        const Eigen::VectorXd& alpha, double beta) {
  Eigen::MatrixXd prec = beta * gram_aa;
  prec.diagonal() += alpha;
  Eigen::LLT<Eigen::MatrixXd> llt(prec);
  if (llt.info() != Eigen::Success) {
    prec.diagonal().array() += 1e-10;
    llt.compute(prec);
    if (llt.info() != Eigen::Success) {
      throw NumericError("rvr::train: posterior precision not positive definite after jitter");
    }
  }
  PosteriorState st;
  const auto m = prec.rows();
  st.sigma = llt.solve(Eigen::MatrixXd::Identity(m, m));
  st.mu = beta * (st.sigma * phity_a);
  st.logdet_sigma_inv = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  return st;
}

inline Scaler fit_scaler(const Eigen::VectorXd& v, const char* what) {
  Scaler s;
  s.mean = v.mean();
  s.sd = std::sqrt((v.array() - s.mean).square().mean());
  if (!(s.sd > 0.0)) {
    throw InputError(std::string("rvr::train: zero-variance ") + what +
                     " (drop constant columns first)");
  }
  return s;
}

}  // namespace detail

// Type-II maximum-likelihood training with the standard fixed-point
// re-estimation: gamma_i = 1 - alpha_i Sigma_ii, alpha_i <- gamma_i / mu_i^2,
// beta <- (N - sum gamma) / |y - Phi mu|^2, pruning weights whose alpha passes
// the threshold. Inputs and targets are standardized internally first.
//
// The marginal likelihood is recorded each iteration. The fixed point can
// oscillate for wide kernels, so the best-likelihood iterate is tracked and
// the returned model is refit at it; training also stops once the likelihood
// has not improved for `stagnation_window` iterations.
inline RVRModel train(const Eigen::MatrixXd& raw_inputs, const Eigen::VectorXd& raw_targets,
                      const KernelConfig& kernel, const TrainLimits& limits = {}) {
  kernel.validate();
  const auto n = raw_inputs.rows();
  if (n != raw_targets.size()) throw InputError("rvr::train: input/target size mismatch");
  if (n < 10) throw InputError("rvr::train: need at least 10 training points");

  RVRModel model;
  model.kernel = kernel;

  // standardize inputs per dimension and targets
  Eigen::MatrixXd x = raw_inputs;
  for (Eigen::Index d = 0; d < x.cols(); ++d) {
    const Scaler s = detail::fit_scaler(x.col(d), "input dimension");
    model.input_scaler.push_back(s);
    x.col(d) = (x.col(d).array() - s.mean) / s.sd;
  }
  model.output_scaler = detail::fit_scaler(raw_targets, "targets");
  const Eigen::VectorXd y =
      (raw_targets.array() - model.output_scaler.mean) / model.output_scaler.sd;

  const Eigen::MatrixXd phi_full = build_design_matrix(x, kernel);
  const Eigen::MatrixXd gram_full = phi_full.transpose() * phi_full;
  const Eigen::VectorXd phity_full = phi_full.transpose() * y;
  const double yty = y.squaredNorm();
  const int off = kernel.include_offset ? 1 : 0;
  const auto m0 = phi_full.cols();

  std::vector<Eigen::Index> active(m0);
  for (Eigen::Index i = 0; i < m0; ++i) active[i] = i;
  Eigen::VectorXd alpha = Eigen::VectorXd::Constant(m0, 1e-6);
  const double target_var = (y.array() - y.mean()).square().mean();
  double beta = 100.0 / std::max(target_var, 1e-12);

  auto subset = [&](const std::vector<Eigen::Index>& idx) {
    Eigen::MatrixXd g(idx.size(), idx.size());
    Eigen::VectorXd p(idx.size());
    for (std::size_t a = 0; a < idx.size(); ++a) {
      p(a) = phity_full(idx[a]);
      for (std::size_t b = 0; b < idx.size(); ++b) g(a, b) = gram_full(idx[a], idx[b]);
    }
    return std::make_pair(g, p);
  };

  // best-iterate bookkeeping
  double best_mll = -std::numeric_limits<double>::infinity();
  std::vector<Eigen::Index> best_active = active;
  Eigen::VectorXd best_alpha = alpha;
  double best_beta = beta;
  int since_best = 0;

  const double nd = static_cast<double>(n);
  for (int iter = 0; iter < limits.max_iterations; ++iter) {
    model.iterations = iter + 1;
    auto [gram, phity] = subset(active);
    const auto st = detail::compute_posterior(gram, phity, alpha, beta);

    const double fit_term = yty - phity.dot(st.mu);
    const double mll = -0.5 * (nd * std::log(2.0 * M_PI) - nd * std::log(beta) +
                               st.logdet_sigma_inv - alpha.array().log().sum() +
                               beta * fit_term);
    if (!std::isfinite(mll)) throw NumericError("rvr::train: marginal likelihood not finite");
    model.mll_trace.push_back(mll);
    if (mll > best_mll + 1e-9) {
      best_mll = mll;
      best_active = active;
      best_alpha = alpha;
      best_beta = beta;
      since_best = 0;
    } else if (++since_best >= limits.stagnation_window) {
      break;
    }

    Eigen::VectorXd gamma(active.size());
    for (std::size_t i = 0; i < active.size(); ++i) {
      gamma(i) = std::clamp(1.0 - alpha(i) * st.sigma(i, i), 0.0, 1.0);
    }
    Eigen::VectorXd new_alpha(active.size());
    for (std::size_t i = 0; i < active.size(); ++i) {
      new_alpha(i) = std::clamp(gamma(i) / std::max(st.mu(i) * st.mu(i), 1e-300), 1e-12, 1e300);
    }
    // residual against the full-length phi restricted to active columns
    Eigen::VectorXd fitted = Eigen::VectorXd::Zero(n);
    for (std::size_t i = 0; i < active.size(); ++i) {
      fitted += st.mu(i) * phi_full.col(active[i]);
    }
    const double rss = (y - fitted).squaredNorm();
    beta = std::min((nd - gamma.sum()) / std::max(rss, 1e-300), 1e12);
    if (!(beta > 0.0)) beta = 1e-6;

    // prune and check convergence on the survivors
    std::vector<Eigen::Index> next;
    Eigen::VectorXd next_alpha(active.size());
    double max_dlog = 0.0;
    Eigen::Index k = 0;
    for (std::size_t i = 0; i < active.size(); ++i) {
      if (new_alpha(i) > limits.prune_threshold) continue;
      max_dlog = std::max(max_dlog, std::fabs(std::log(new_alpha(i)) - std::log(alpha(i))));
      next.push_back(active[i]);
      next_alpha(k++) = new_alpha(i);
    }
    if (next.empty()) {
      throw NumericError("rvr::train: degenerate model, every weight pruned (offset included)");
    }
    if (next.size() != active.size()) model.prune_iterations.push_back(iter);
    active = std::move(next);
    alpha = next_alpha.head(k);
    if (max_dlog < limits.tolerance) {
      model.converged = true;
      break;
    }
  }

  // refit at the best recorded iterate
  active = best_active;
  alpha = best_alpha;
  beta = best_beta;
  auto [gram, phity] = subset(active);
  const auto st = detail::compute_posterior(gram, phity, alpha, beta);

  model.offset_retained = off && !active.empty() && active[0] == 0;
  std::vector<Eigen::Index> rv_rows;
  for (const auto a : active) {
    if (off && a == 0) continue;
    rv_rows.push_back(a - off);
  }
  model.relevance_vectors.resize(rv_rows.size(), x.cols());
  for (std::size_t i = 0; i < rv_rows.size(); ++i) {
    model.relevance_vectors.row(i) = x.row(rv_rows[i]);
  }
  model.posterior_mean = st.mu;
  model.posterior_cov = st.sigma;
  model.alphas = alpha;
  model.noise_precision = beta;
  return model;
}

inline Eigen::VectorXd basis_at(const RVRModel& model, const Eigen::VectorXd& raw_input) {
  if (raw_input.size() != static_cast<Eigen::Index>(model.input_scaler.size())) {
    throw InputError("rvr::predict: input dimension mismatch");
  }
  Eigen::VectorXd xs(raw_input.size());
  for (Eigen::Index d = 0; d < raw_input.size(); ++d) {
    xs(d) = (raw_input(d) - model.input_scaler[d].mean) / model.input_scaler[d].sd;
  }
  const int off = model.offset_retained ? 1 : 0;
  Eigen::VectorXd phi(model.relevance_vectors.rows() + off);
  if (off) phi(0) = 1.0;
  for (Eigen::Index j = 0; j < model.relevance_vectors.rows(); ++j) {
    phi(j + off) = kernel_value(model.kernel, xs, model.relevance_vectors.row(j));
  }
  return phi;
}

// Posterior predictive mean/variance (Gaussian), un-standardized to physical
// units, with the three-sigma credible interval.
inline Prediction predict(const RVRModel& model, const Eigen::VectorXd& raw_input) {
  const Eigen::VectorXd phi = basis_at(model, raw_input);
  const double t = model.posterior_mean.dot(phi);
  const double var_std = 1.0 / model.noise_precision + phi.dot(model.posterior_cov * phi);
  Prediction p;
  const double sd_y = model.output_scaler.sd;
  p.mean = t * sd_y + model.output_scaler.mean;
  p.variance = var_std * sd_y * sd_y;
  const double three_sigma = 3.0 * std::sqrt(std::max(p.variance, 0.0));
  p.lower = p.mean - three_sigma;
  p.upper = p.mean + three_sigma;
  return p;
}

}  // namespace modhealth::rvr
