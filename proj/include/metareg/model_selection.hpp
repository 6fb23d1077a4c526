#pragma once

// Bayesian model selection over subsets of candidate covariables.  Every
// model keeps the intercept; model m includes variable j iff bit j of m is set.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "metareg/errors.hpp"
#include "metareg/inference.hpp"
#include "metareg/mixture.hpp"
#include "metareg/model_spec.hpp"
#include "metareg/nnhm_core.hpp"

namespace metareg {

inline constexpr std::size_t kMaxSelectionVariables = 20;

struct ModelSpace {
  std::vector<std::string> variables;
  std::vector<std::vector<bool>> models;
  std::vector<double> prior_probs;
  std::optional<std::vector<double>> log_mls;
  std::optional<std::vector<double>> posterior_probs;

  std::size_t size() const { return models.size(); }

  std::size_t included_count(std::size_t m) const {
    return static_cast<std::size_t>(std::count(models[m].begin(), models[m].end(), true));
  }

  /// Human-readable label such as "{FP, FN}" or "{}" for the intercept-only model.
  std::string label(std::size_t m) const {
    std::string out = "{";
    bool first = true;
    for (std::size_t j = 0; j < variables.size(); ++j) {
      if (!models[m][j]) continue;
      if (!first) out += ", ";
      out += variables[j];
      first = false;
    }
    return out + "}";
  }
};

/// All 2^N subsets, starting with the intercept-only model.  Prior
/// probabilities are initialized to uniform.
inline ModelSpace enumerate_models(std::vector<std::string> variables) {
  const std::size_t n = variables.size();
  if (n < 1 || n > kMaxSelectionVariables) {
    throw ValidationError(ValidationError::Kind::invalid_value,
                          "number of candidate variables must lie in [1, " +
                              std::to_string(kMaxSelectionVariables) + "]");
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (variables[i] == variables[j]) {
        throw ValidationError(ValidationError::Kind::invalid_value,
                              "duplicate variable name " + variables[i]);
      }
    }
  }
  ModelSpace space;
  space.variables = std::move(variables);
  const std::size_t count = std::size_t{1} << n;
  space.models.reserve(count);
  for (std::size_t m = 0; m < count; ++m) {
    std::vector<bool> inc(n);
    for (std::size_t j = 0; j < n; ++j) inc[j] = ((m >> j) & 1U) != 0;
    space.models.push_back(std::move(inc));
  }
  space.prior_probs.assign(count, 1.0 / static_cast<double>(count));
  return space;
}

struct ModelPrior {
  enum class Kind { uniform, bernoulli };
  Kind kind = Kind::uniform;
  double pi = 0.5;

  static ModelPrior uniform() { return {}; }
  static ModelPrior bernoulli(double pi) { return {Kind::bernoulli, pi}; }
};

/// Sets prior model probabilities: uniform, or independent inclusion with
/// probability pi for each variable.
inline void model_prior(ModelSpace& space, ModelPrior prior) {
  const std::size_t count = space.size();
  if (prior.kind == ModelPrior::Kind::uniform) {
    space.prior_probs.assign(count, 1.0 / static_cast<double>(count));
    return;
  }
  if (!(prior.pi > 0.0 && prior.pi < 1.0)) {
    throw ValidationError(ValidationError::Kind::invalid_value,
                          "inclusion probability must lie in (0, 1)");
  }
  const double n = static_cast<double>(space.variables.size());
  space.prior_probs.resize(count);
  for (std::size_t m = 0; m < count; ++m) {
    const double inc = static_cast<double>(space.included_count(m));
    space.prior_probs[m] = std::pow(prior.pi, inc) * std::pow(1.0 - prior.pi, n - inc);
  }
}

/// Intercept column followed by the included columns of `covariates`
/// (k x N, columns in the order of space.variables).
inline DesignMatrix model_design(const ModelSpace& space, std::size_t m,
                                 const MatrixXd& covariates) {
  if (static_cast<std::size_t>(covariates.cols()) != space.variables.size()) {
    throw ValidationError(ValidationError::Kind::dimension_mismatch,
                          "covariate matrix needs one column per candidate variable");
  }
  const std::size_t d = 1 + space.included_count(m);
  DesignMatrix design;
  design.X.resize(covariates.rows(), static_cast<Eigen::Index>(d));
  design.X.col(0).setOnes();
  design.column_names.push_back("intercept");
  Eigen::Index c = 1;
  for (std::size_t j = 0; j < space.variables.size(); ++j) {
    if (!space.models[m][j]) continue;
    design.X.col(c++) = covariates.col(static_cast<Eigen::Index>(j));
    design.column_names.push_back(space.variables[j]);
  }
  return design;
}

struct SelectionPriors {
  double intercept_sd = 10.0;
  double effect_sd = 2.82;
  double intercept_mean = 0.0;
  double effect_mean = 0.0;
  TauPrior tau_prior = TauPrior::half_normal(0.5);
};

/// The regression problem for model m under zero-correlation normal priors.
inline RegressionProblem model_problem(const ModelSpace& space, std::size_t m,
                                       const StudyDataset& dataset, const MatrixXd& covariates,
                                       const SelectionPriors& priors = {}) {
  if (!priors.tau_prior.proper()) {
    throw ValidationError(ValidationError::Kind::invalid_value,
                          "model selection needs a proper tau prior");
  }
  if (!(priors.intercept_sd > 0.0) || !(priors.effect_sd > 0.0) ||
      !std::isfinite(priors.intercept_sd) || !std::isfinite(priors.effect_sd)) {
    throw ValidationError(ValidationError::Kind::invalid_value,
                          "model selection needs finite positive prior standard deviations");
  }
  DesignMatrix design = model_design(space, m, covariates);
  const auto d = design.X.cols();
  VectorXd mean = VectorXd::Constant(d, priors.effect_mean);
  VectorXd sd = VectorXd::Constant(d, priors.effect_sd);
  mean(0) = priors.intercept_mean;
  sd(0) = priors.intercept_sd;
  return RegressionProblem{dataset, std::move(design), priors.tau_prior,
                           BetaPrior::normal_sd(std::move(mean), sd)};
}

/// Records ln p(y | model) for every model in the space.
inline void score_models(ModelSpace& space, const StudyDataset& dataset,
                         const MatrixXd& covariates, const SelectionPriors& priors = {}) {
  if (static_cast<std::size_t>(covariates.rows()) != dataset.size()) {
    throw ValidationError(ValidationError::Kind::dimension_mismatch,
                          "covariate matrix needs one row per study");
  }
  std::vector<double> scores(space.size());
  for (std::size_t m = 0; m < space.size(); ++m) {
    scores[m] = log_marginal_likelihood(
        validate_problem(model_problem(space, m, dataset, covariates, priors)));
  }
  space.log_mls = std::move(scores);
  space.posterior_probs.reset();
}

/// Fits every model (grid and summaries) under the selection priors.
inline std::vector<FitResult> fit_models(const ModelSpace& space, const StudyDataset& dataset,
                                         const MatrixXd& covariates,
                                         const SelectionPriors& priors = {},
                                         GridOptions opts = {}) {
  std::vector<FitResult> fits;
  fits.reserve(space.size());
  for (std::size_t m = 0; m < space.size(); ++m) {
    fits.push_back(fit(model_problem(space, m, dataset, covariates, priors), opts));
  }
  return fits;
}

/// Posterior probabilities from prior probabilities and log marginal
/// likelihoods, normalized in the log domain.
inline void posterior_model_probs(ModelSpace& space) {
  if (!space.log_mls || space.log_mls->size() != space.size()) {
    throw std::logic_error("models have not been scored");
  }
  if (space.prior_probs.size() != space.size()) {
    throw std::logic_error("prior probabilities do not match the model list");
  }
  const auto& lml = *space.log_mls;
  std::vector<double> lp(space.size());
  double top = -detail::kInf;
  for (std::size_t m = 0; m < space.size(); ++m) {
    lp[m] = space.prior_probs[m] > 0.0 ? std::log(space.prior_probs[m]) + lml[m] : -detail::kInf;
    top = std::max(top, lp[m]);
  }
  if (!std::isfinite(top)) throw std::runtime_error("no model has positive posterior mass");
  double total = 0.0;
  for (double& v : lp) {
    v = std::exp(v - top);
    total += v;
  }
  for (double& v : lp) v /= total;
  space.posterior_probs = std::move(lp);
}

inline const std::vector<double>& require_posterior(const ModelSpace& space) {
  if (!space.posterior_probs) throw std::logic_error("posterior model probabilities not computed");
  return *space.posterior_probs;
}

inline std::vector<double> inclusion_probabilities(const ModelSpace& space) {
  const auto& post = require_posterior(space);
  std::vector<double> inc(space.variables.size(), 0.0);
  for (std::size_t m = 0; m < space.size(); ++m) {
    for (std::size_t j = 0; j < inc.size(); ++j) {
      if (space.models[m][j]) inc[j] += post[m];
    }
  }
  for (double& v : inc) v = std::clamp(v, 0.0, 1.0);
  return inc;
}

/// Variables whose inclusion probability is at least 1/2.
inline std::vector<bool> median_probability_model(const ModelSpace& space) {
  const auto inc = inclusion_probabilities(space);
  std::vector<bool> out(inc.size());
  for (std::size_t j = 0; j < inc.size(); ++j) out[j] = inc[j] >= 0.5;
  return out;
}

/// Model indices by decreasing posterior probability; ties go to the model
/// with fewer variables, then to the lexicographically smaller list of names.
inline std::vector<std::size_t> rank_models(const ModelSpace& space) {
  const auto& post = require_posterior(space);
  auto names = [&](std::size_t m) {
    std::vector<std::string> v;
    for (std::size_t j = 0; j < space.variables.size(); ++j) {
      if (space.models[m][j]) v.push_back(space.variables[j]);
    }
    std::sort(v.begin(), v.end());
    return v;
  };
  std::vector<std::size_t> order(space.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (post[a] != post[b]) return post[a] > post[b];
    const auto na = space.included_count(a);
    const auto nb = space.included_count(b);
    if (na != nb) return na < nb;
    return names(a) < names(b);
  });
  return order;
}

/// Mixture over models of each model's linear combination, with component
/// weights scaled by the posterior model probability.
inline ScalarMixture model_averaged_combination(const ModelSpace& space,
                                                const std::vector<FitResult>& fits,
                                                const std::vector<VectorXd>& x_by_model,
                                                bool mean = true) {
  const auto& post = require_posterior(space);
  if (fits.size() != space.size() || x_by_model.size() != space.size()) {
    throw ValidationError(ValidationError::Kind::dimension_mismatch,
                          "need one fit and one coefficient vector per model");
  }
  std::vector<MixtureComponent> comps;
  for (std::size_t m = 0; m < space.size(); ++m) {
    if (post[m] <= 0.0) continue;
    const ScalarMixture part = linear_combination(fits[m], x_by_model[m], mean);
    for (auto c : part.components()) {
      c.weight *= post[m];
      comps.push_back(c);
    }
  }
  return ScalarMixture(std::move(comps),
                       mean ? MixtureKind::combination_mean : MixtureKind::prediction);
}

}  // namespace metareg
