#pragma once

// Closed-form kernels of the normal-normal hierarchical model for a fixed
// heterogeneity tau:
//
//   y | beta, tau ~ N(X beta, Sigma_tau),   Sigma_tau = diag(sigma_i^2 + tau^2)
//
// Sigma_tau is diagonal and never formed densely; all work happens on the
// d x d precision X' Sigma_tau^-1 X (+ prior precision).

#include <cmath>
#include <numbers>

#include <Eigen/Dense>

#include "metareg/detail/half_line_quadrature.hpp"
#include "metareg/detail/numeric.hpp"
#include "metareg/errors.hpp"
#include "metareg/model_spec.hpp"

namespace metareg {

struct MvnMoments {
  VectorXd mean;
  MatrixXd cov;

  Eigen::Index dimension() const { return mean.size(); }
};

namespace detail {

struct GlsSystem {
  VectorXd weights;  // 1 / (sigma_i^2 + tau^2)
  MatrixXd precision;
  VectorXd rhs;
  Eigen::LLT<MatrixXd> chol;
};

inline GlsSystem gls_system(const RegressionProblem& p, double tau) {
  const auto& X = p.design.X;
  GlsSystem s;
  s.weights = (p.dataset.sigma.array().square() + tau * tau).inverse().matrix();
  const MatrixXd WX = s.weights.asDiagonal() * X;
  s.precision = X.transpose() * WX;
  s.rhs = WX.transpose() * p.dataset.y;
  if (p.beta_prior.is_normal()) {
    s.precision += p.beta_prior.precision();
    s.rhs += p.beta_prior.precision() * p.beta_prior.mean();
  }
  s.chol.compute(s.precision);
  if (s.chol.info() != Eigen::Success) {
    throw ValidationError(ValidationError::Kind::rank_deficient,
                          "conditional posterior precision is singular");
  }
  return s;
}

inline double sum_log_variances(const RegressionProblem& p, double tau) {
  return (p.dataset.sigma.array().square() + tau * tau).log().sum();
}

inline double log_det_from_llt(const Eigen::LLT<MatrixXd>& llt) {
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

}  // namespace detail

/// Conditional posterior of beta given tau (multivariate normal).
inline MvnMoments conditional_beta_posterior(const RegressionProblem& p, double tau) {
  if (!(tau >= 0.0)) throw std::domain_error("tau must be non-negative");
  const auto s = detail::gls_system(p, tau);
  const auto d = s.precision.rows();
  MvnMoments m;
  m.mean = s.chol.solve(s.rhs);
  m.cov = s.chol.solve(MatrixXd::Identity(d, d));
  m.cov = 0.5 * (m.cov + m.cov.transpose()).eval();
  return m;
}

/// ln of the conditional marginal likelihood m(tau) = int p(y | beta, tau) p(beta) d beta.
/// Under the uniform coefficient prior this is defined up to a constant
/// (the (2 pi)^(-(k-d)/2) factor is dropped); under a normal prior it is the
/// fully normalized N(X mu0, Sigma_tau + X Sigma0 X') log-density at y.
inline double log_conditional_marginal(const RegressionProblem& p, double tau) {
  const auto s = detail::gls_system(p, tau);
  const double log_det_p = detail::log_det_from_llt(s.chol);
  const double sum_log_v = detail::sum_log_variances(p, tau);
  if (!p.beta_prior.is_normal()) {
    const VectorXd& y = p.dataset.y;
    const double quad = y.dot(s.weights.asDiagonal() * y) - s.rhs.dot(s.chol.solve(s.rhs));
    return -0.5 * (sum_log_v + log_det_p + quad);
  }
  // Woodbury / determinant lemma on C = Sigma_tau + X Sigma0 X'.
  const VectorXd r = p.dataset.y - p.design.X * p.beta_prior.mean();
  const VectorXd wr = s.weights.asDiagonal() * r;
  const VectorXd u = p.design.X.transpose() * wr;
  const double quad = r.dot(wr) - u.dot(s.chol.solve(u));
  const double log_det_c = sum_log_v + p.beta_prior.log_det_cov() + log_det_p;
  return -0.5 * (static_cast<double>(p.k()) * detail::kLog2Pi + log_det_c + quad);
}

/// ln f(tau) + ln m(tau): the unnormalized log marginal posterior of tau.
inline double tau_log_marginal_unnorm(const RegressionProblem& p, double tau) {
  const double lp = p.tau_prior.log_density(tau);
  if (!(lp > -detail::kInf)) return -detail::kInf;
  return lp + log_conditional_marginal(p, tau);
}

inline double log_conditional_marginal_likelihood(const RegressionProblem& p, double tau) {
  if (!p.beta_prior.proper()) {
    throw UnsupportedError("conditional marginal likelihood needs a proper coefficient prior");
  }
  return log_conditional_marginal(p, tau);
}

/// p(y | tau) with exact normalization.
inline double conditional_marginal_likelihood(const RegressionProblem& p, double tau) {
  return std::exp(log_conditional_marginal_likelihood(p, tau));
}

/// ln p(y) = ln int p(y | tau) f(tau) d tau, by adaptive quadrature.
inline double log_marginal_likelihood(const RegressionProblem& p) {
  if (!p.beta_prior.proper() || !p.tau_prior.proper()) {
    throw UnsupportedError("marginal likelihood needs proper priors for tau and beta");
  }
  detail::HalfLineDensity integral([&p](double t) { return tau_log_marginal_unnorm(p, t); },
                                   detail::HalfLineDensity::Options{1e-11, 48, 4000});
  return integral.log_total();
}

inline double marginal_likelihood(const RegressionProblem& p) {
  return std::exp(log_marginal_likelihood(p));
}

}  // namespace metareg
