#pragma once

// Fitted posterior and its accessors.  Coefficient and study indices are
// zero-based.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "metareg/detail/numeric.hpp"
#include "metareg/direct_grid.hpp"
#include "metareg/errors.hpp"
#include "metareg/mixture.hpp"
#include "metareg/model_spec.hpp"
#include "metareg/nnhm_core.hpp"
#include "metareg/tau_posterior.hpp"

namespace metareg {

struct SummaryRow {
  std::string name;
  double mode = 0.0;
  double median = 0.0;
  double mean = 0.0;
  double sd = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

/// Marginal posterior summary: the tau row first, then one row per coefficient.
struct SummaryTable {
  std::vector<SummaryRow> rows;
  double level = 0.95;

  const SummaryRow& at(const std::string& name) const {
    for (const auto& r : rows) {
      if (r.name == name) return r;
    }
    throw std::out_of_range("no summary row named " + name);
  }
};

/// A named coefficient vector; mean = false asks for a prediction.
struct CombinationRow {
  std::string name;
  VectorXd x;
  bool mean = true;
};

class FitResult;
inline FitResult fit(RegressionProblem problem, GridOptions opts);

class FitResult {
 public:
  const RegressionProblem& problem() const { return problem_; }
  const PosteriorGrid& grid() const { return grid_; }
  const TauPosterior& tau_posterior() const { return tau_; }
  const SummaryTable& summary() const { return summary_; }
  std::optional<double> log_marginal_likelihood() const { return log_ml_; }
  std::optional<double> marginal_likelihood() const {
    if (!log_ml_) return std::nullopt;
    return std::exp(*log_ml_);
  }

  /// Reassembles a fit from stored parts (used when loading serialized fits).
  /// The continuous tau posterior is recomputed from the problem.
  static FitResult restore(RegressionProblem problem, PosteriorGrid grid, SummaryTable summary,
                           std::optional<double> log_ml) {
    FitResult f;
    f.problem_ = validate_problem(std::move(problem));
    f.tau_ = TauPosterior(f.problem_);
    f.grid_ = std::move(grid);
    f.summary_ = std::move(summary);
    f.log_ml_ = log_ml;
    return f;
  }

 private:
  friend FitResult fit(RegressionProblem problem, GridOptions opts);
  FitResult() = default;

  RegressionProblem problem_;
  TauPosterior tau_;
  PosteriorGrid grid_;
  SummaryTable summary_;
  std::optional<double> log_ml_;
};

// ---------------------------------------------------------------------------
// Mixtures derived from the grid

inline ScalarMixture linear_combination(const FitResult& f, const VectorXd& x, bool mean = true) {
  if (static_cast<std::size_t>(x.size()) != f.problem().d()) {
    throw ValidationError(ValidationError::Kind::dimension_mismatch,
                          "combination vector length differs from number of coefficients");
  }
  std::vector<MixtureComponent> comps;
  comps.reserve(f.grid().size());
  for (const auto& node : f.grid().nodes) {
    double var = x.dot(node.moments.cov * x);
    if (!mean) var += node.tau * node.tau;
    comps.push_back({node.weight, x.dot(node.moments.mean), std::sqrt(std::max(0.0, var))});
  }
  return ScalarMixture(std::move(comps),
                       mean ? MixtureKind::combination_mean : MixtureKind::prediction);
}

inline ScalarMixture coefficient_marginal(const FitResult& f, std::size_t index) {
  if (index >= f.problem().d()) throw std::out_of_range("coefficient index out of range");
  std::vector<MixtureComponent> comps;
  const auto i = static_cast<Eigen::Index>(index);
  for (const auto& node : f.grid().nodes) {
    comps.push_back({node.weight, node.moments.mean(i), std::sqrt(node.moments.cov(i, i))});
  }
  return ScalarMixture(std::move(comps), MixtureKind::coefficient);
}

/// Posterior of the study-specific mean theta_i.
inline ScalarMixture shrinkage(const FitResult& f, std::size_t study) {
  if (study >= f.problem().k()) throw std::out_of_range("study index out of range");
  const auto i = static_cast<Eigen::Index>(study);
  const double yi = f.problem().dataset.y(i);
  const double s2 = std::pow(f.problem().dataset.sigma(i), 2);
  const VectorXd xi = f.problem().design.X.row(i).transpose();
  std::vector<MixtureComponent> comps;
  for (const auto& node : f.grid().nodes) {
    const double t2 = node.tau * node.tau;
    const double fitted = xi.dot(node.moments.mean);
    const double fitted_var = xi.dot(node.moments.cov * xi);
    const double pool = s2 / (s2 + t2);
    const double m = (t2 * yi + s2 * fitted) / (s2 + t2);
    const double v = s2 * t2 / (s2 + t2) + pool * pool * fitted_var;
    comps.push_back({node.weight, m, std::sqrt(std::max(0.0, v))});
  }
  return ScalarMixture(std::move(comps), MixtureKind::shrinkage);
}

inline double tau_quantile(const FitResult& f, double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::domain_error("probability must lie in (0, 1)");
  return f.tau_posterior().quantile(p);
}
inline double tau_density(const FitResult& f, double tau) { return f.tau_posterior().density(tau); }
inline double tau_cdf(const FitResult& f, double tau) { return f.tau_posterior().cdf(tau); }

// ---------------------------------------------------------------------------
// Summaries

inline SummaryRow summarize_mixture(std::string name, const ScalarMixture& m, double level = 0.95) {
  const Interval ci = credible_interval(m, level, IntervalMethod::shortest);
  return {std::move(name), m.mode(), m.quantile(0.5), m.mean(), m.sd(), ci.lower, ci.upper};
}

inline SummaryRow summarize_tau(const TauPosterior& tau, double level = 0.95) {
  const Interval ci = credible_interval(tau, level, IntervalMethod::shortest);
  return {"tau", tau.mode(), tau.quantile(0.5), tau.mean(), tau.sd(), ci.lower, ci.upper};
}

/// One summary row per extra coefficient combination (or prediction).
inline std::vector<SummaryRow> summarize(const FitResult& f, std::span<const CombinationRow> rows,
                                         double level = 0.95) {
  std::vector<SummaryRow> out;
  for (const auto& r : rows) out.push_back(summarize_mixture(r.name, linear_combination(f, r.x, r.mean), level));
  return out;
}

inline FitResult fit(RegressionProblem problem, GridOptions opts = {}) {
  FitResult f;
  f.problem_ = validate_problem(std::move(problem));
  f.tau_ = TauPosterior(f.problem_);
  f.grid_ = build_grid(f.problem_, f.tau_, opts);
  f.summary_.rows.push_back(summarize_tau(f.tau_));
  for (std::size_t j = 0; j < f.problem_.d(); ++j) {
    f.summary_.rows.push_back(
        summarize_mixture(f.problem_.design.column_names[j], coefficient_marginal(f, j)));
  }
  if (f.problem_.tau_prior.proper() && f.problem_.beta_prior.proper()) {
    f.log_ml_ = f.tau_.log_normalizer();
  }
  return f;
}

// ---------------------------------------------------------------------------
// Point estimates and sampling

struct MapEstimates {
  double joint_tau = 0.0;
  VectorXd joint_beta;
  double marginal_tau = 0.0;
  VectorXd marginal_beta;
};

/// Joint mode maximizes p(tau | y) |Sigma_beta(tau)|^(-1/2) over tau, with
/// beta at the conditional mean; marginal modes come from each marginal.
inline MapEstimates map_estimates(const FitResult& f) {
  const auto& tau = f.tau_posterior();
  const auto& p = f.problem();
  auto objective = [&](double t) {
    const auto s = detail::gls_system(p, t);
    // log det Sigma_beta = -log det precision
    return tau.log_density(t) + 0.5 * detail::log_det_from_llt(s.chol);
  };
  const double upper = tau.quantile(0.999);
  constexpr int kScan = 400;
  int best = 0;
  double best_val = objective(0.0);
  for (int i = 1; i <= kScan; ++i) {
    const double v = objective(upper * i / kScan);
    if (v > best_val) {
      best_val = v;
      best = i;
    }
  }
  const double lo = upper * std::max(0, best - 1) / kScan;
  const double hi = upper * std::min(kScan, best + 1) / kScan;
  double t = detail::golden_section_minimize([&](double u) { return -objective(u); }, lo, hi,
                                             1e-10 * (1.0 + upper));
  if (best == 0 && objective(0.0) >= objective(t) - 1e-9) t = 0.0;

  MapEstimates out;
  out.joint_tau = t;
  out.joint_beta = conditional_beta_posterior(p, t).mean;
  out.marginal_tau = tau.mode();
  out.marginal_beta.resize(static_cast<Eigen::Index>(p.d()));
  for (std::size_t j = 0; j < p.d(); ++j) {
    out.marginal_beta(static_cast<Eigen::Index>(j)) = coefficient_marginal(f, j).mode();
  }
  return out;
}

struct PosteriorDraw {
  double tau = 0.0;
  VectorXd beta;
};

/// tau by inversion of the continuous posterior CDF, then beta from the exact
/// conditional normal at that tau.  Deterministic for a given seed.
inline std::vector<PosteriorDraw> sample_posterior(const FitResult& f, std::size_t n,
                                                   std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("number of draws must be positive");
  std::mt19937_64 engine(seed);
  std::vector<PosteriorDraw> draws;
  draws.reserve(n);
  const auto d = static_cast<Eigen::Index>(f.problem().d());
  for (std::size_t i = 0; i < n; ++i) {
    PosteriorDraw draw;
    draw.tau = f.tau_posterior().quantile(detail::uniform_open01(engine));
    const MvnMoments m = conditional_beta_posterior(f.problem(), draw.tau);
    Eigen::LLT<MatrixXd> llt(m.cov);
    VectorXd z(d);
    for (Eigen::Index j = 0; j < d; ++j) z(j) = detail::normal_quantile(detail::uniform_open01(engine));
    draw.beta = m.mean + llt.matrixL() * z;
    draws.push_back(std::move(draw));
  }
  return draws;
}

/// Tabulates the tau posterior density (2001 points on [0, q(1 - 1e-6)]) as a
/// prior for a follow-up analysis.
inline TauPrior tau_posterior_as_prior(const FitResult& f, std::size_t points = 2001) {
  const double upper = f.tau_posterior().quantile(1.0 - 1e-6);
  std::vector<double> t(points);
  std::vector<double> dens(points);
  for (std::size_t i = 0; i < points; ++i) {
    t[i] = upper * static_cast<double>(i) / static_cast<double>(points - 1);
    dens[i] = f.tau_posterior().density(t[i]);
  }
  return TauPrior::tabulated(std::move(t), std::move(dens), true);
}

}  // namespace metareg
