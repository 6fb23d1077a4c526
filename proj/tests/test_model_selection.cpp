#include <cmath>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "metareg/inference.hpp"
#include "metareg/model_selection.hpp"
#include "oracle.hpp"

using namespace metareg;

namespace {

ModelSpace scored_two_model_space(double ml0, double ml1) {
  auto space = enumerate_models({"x"});
  space.log_mls = std::vector<double>{std::log(ml0), std::log(ml1)};
  posterior_model_probs(space);
  return space;
}

// three studies, one binary covariable
struct Synthetic {
  StudyDataset dataset;
  MatrixXd covariates;
};

Synthetic synthetic() {
  VectorXd y(3), s(3);
  y << -0.4, 0.3, 1.1;
  s << 0.5, 0.4, 0.6;
  MatrixXd c(3, 1);
  c << 0, 1, 1;
  return {StudyDataset::create({"a", "b", "c"}, y, s), c};
}

}  // namespace

TEST(EnumerateModels, Powerset) {
  const auto space = enumerate_models({"FUN", "FP", "FN", "STER"});
  ASSERT_EQ(space.size(), 16u);
  std::set<std::vector<bool>> unique(space.models.begin(), space.models.end());
  EXPECT_EQ(unique.size(), 16u);
  EXPECT_EQ(space.included_count(0), 0u);
  EXPECT_EQ(space.label(0), "{}");
  std::size_t full = 0;
  for (std::size_t m = 0; m < space.size(); ++m) full += space.included_count(m) == 4;
  EXPECT_EQ(full, 1u);
  EXPECT_EQ(enumerate_models({"a"}).size(), 2u);
}

TEST(EnumerateModels, Guards) {
  EXPECT_THROW(enumerate_models({}), ValidationError);
  std::vector<std::string> many;
  for (int i = 0; i < 21; ++i) many.push_back("v" + std::to_string(i));
  EXPECT_THROW(enumerate_models(many), ValidationError);
  EXPECT_THROW(enumerate_models({"a", "a"}), ValidationError);
}

TEST(ModelPriorTest, UniformAndBernoulli) {
  auto space = enumerate_models({"a", "b", "c", "d"});
  for (double p : space.prior_probs) EXPECT_NEAR(p, 1.0 / 16, 1e-15);
  auto b = space;
  model_prior(b, ModelPrior::bernoulli(0.5));
  for (std::size_t m = 0; m < 16; ++m) EXPECT_NEAR(b.prior_probs[m], space.prior_probs[m], 1e-15);
  for (double pi : {0.1, 0.3, 0.8}) {
    model_prior(b, ModelPrior::bernoulli(pi));
    double total = 0.0, expected = 0.0;
    for (std::size_t m = 0; m < 16; ++m) {
      total += b.prior_probs[m];
      expected += b.prior_probs[m] * static_cast<double>(b.included_count(m));
      const auto n = static_cast<double>(b.included_count(m));
      EXPECT_NEAR(b.prior_probs[m], std::pow(pi, n) * std::pow(1 - pi, 4 - n), 1e-15);
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
    EXPECT_NEAR(expected, pi * 4, 1e-12);
  }
  EXPECT_THROW(model_prior(b, ModelPrior::bernoulli(1.0)), ValidationError);
  EXPECT_THROW(model_prior(b, ModelPrior::bernoulli(0.0)), ValidationError);
}

TEST(ScoreModels, InterceptOnlyMatchesPlainProblem) {
  const auto data = synthetic();
  auto space = enumerate_models({"x"});
  score_models(space, data.dataset, data.covariates);
  RegressionProblem plain;
  plain.dataset = data.dataset;
  plain.design = DesignMatrix::intercept(3);
  plain.tau_prior = TauPrior::half_normal(0.5);
  plain.beta_prior = BetaPrior::normal(VectorXd::Zero(1), MatrixXd::Constant(1, 1, 100.0));
  EXPECT_NEAR((*space.log_mls)[0], log_marginal_likelihood(plain), 1e-12);
}

TEST(ScoreModels, SyntheticMatchesQuadratureOracle) {
  const auto data = synthetic();
  auto space = enumerate_models({"x"});
  score_models(space, data.dataset, data.covariates);
  for (std::size_t m = 0; m < 2; ++m) {
    const auto p = validate_problem(model_problem(space, m, data.dataset, data.covariates));
    const oracle::TauGrid grid(p, 100000);
    EXPECT_NEAR(std::exp((*space.log_mls)[m] - grid.log_total()), 1.0, 1e-6) << m;
  }
}

TEST(ScoreModels, DuplicateColumnBayesIdentity) {
  const auto data = synthetic();
  MatrixXd cov(3, 2);
  cov << data.covariates, data.covariates;
  auto space = enumerate_models({"x", "x_copy"});
  score_models(space, data.dataset, cov);
  for (std::size_t m = 0; m < space.size(); ++m) {
    const auto p = validate_problem(model_problem(space, m, data.dataset, cov));
    const double tau = 0.3;
    const auto post = conditional_beta_posterior(p, tau);
    const VectorXd beta = post.mean + VectorXd::Constant(p.d(), 0.1);
    double loglik = 0.0;
    for (Eigen::Index i = 0; i < 3; ++i) {
      const double v = p.dataset.sigma(i) * p.dataset.sigma(i) + tau * tau;
      const double r = p.dataset.y(i) - p.design.X.row(i).dot(beta);
      loglik += -0.5 * (std::log(2 * std::numbers::pi * v) + r * r / v);
    }
    Eigen::LLT<MatrixXd> llt(post.cov);
    const VectorXd r = beta - post.mean;
    const double log_post = -0.5 * (p.d() * std::log(2 * std::numbers::pi) +
                                    2 * MatrixXd(llt.matrixL()).diagonal().array().log().sum() +
                                    r.dot(llt.solve(r)));
    EXPECT_NEAR(log_conditional_marginal_likelihood(p, tau) + log_post, p.beta_prior.log_density(beta) + loglik,
                1e-10);
  }
}

TEST(ScoreModels, ImproperPriorsRejected) {
  const auto data = synthetic();
  auto space = enumerate_models({"x"});
  SelectionPriors priors;
  priors.tau_prior = TauPrior::uniform();
  EXPECT_THROW(score_models(space, data.dataset, data.covariates, priors), ValidationError);
  priors = {};
  priors.effect_sd = 0.0;
  EXPECT_THROW(score_models(space, data.dataset, data.covariates, priors), ValidationError);
  EXPECT_THROW(score_models(space, data.dataset, MatrixXd::Zero(2, 1)), ValidationError);
}

TEST(PosteriorProbs, Arithmetic) {
  const auto space = scored_two_model_space(0.2, 0.6);
  EXPECT_NEAR((*space.posterior_probs)[0], 0.25, 1e-15);
  EXPECT_NEAR((*space.posterior_probs)[1], 0.75, 1e-15);
  auto equal = enumerate_models({"a", "b"});
  model_prior(equal, ModelPrior::bernoulli(0.3));
  equal.log_mls = std::vector<double>(4, -12.5);
  posterior_model_probs(equal);
  for (std::size_t m = 0; m < 4; ++m) EXPECT_NEAR((*equal.posterior_probs)[m], equal.prior_probs[m], 1e-15);
}

TEST(PosteriorProbs, ShiftInvariantAndStable) {
  auto space = enumerate_models({"a", "b"});
  space.log_mls = std::vector<double>{-1000.0, -1001.0, -1003.0, -999.5};
  posterior_model_probs(space);
  const auto ref = *space.posterior_probs;
  for (double& v : *space.log_mls) v += 900.0;
  posterior_model_probs(space);
  double total = 0.0;
  for (std::size_t m = 0; m < 4; ++m) {
    EXPECT_NEAR((*space.posterior_probs)[m], ref[m], 1e-14);
    total += ref[m];
  }
  EXPECT_NEAR(total, 1.0, 1e-12);
  auto unscored = enumerate_models({"a"});
  EXPECT_THROW(posterior_model_probs(unscored), std::logic_error);
  EXPECT_THROW(inclusion_probabilities(unscored), std::logic_error);
}

TEST(Inclusion, EdgeCases) {
  auto space = enumerate_models({"a", "b", "c"});
  space.posterior_probs = std::vector<double>(8, 1.0 / 8);
  for (double v : inclusion_probabilities(space)) EXPECT_NEAR(v, 0.5, 1e-15);
  // exactly one half is included
  EXPECT_EQ(median_probability_model(space), std::vector<bool>(3, true));
  // all mass on a single model
  std::vector<double> one(8, 0.0);
  one[5] = 1.0;
  space.posterior_probs = one;
  const auto inc = inclusion_probabilities(space);
  for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(inc[j], space.models[5][j] ? 1.0 : 0.0);
  EXPECT_EQ(median_probability_model(space), space.models[5]);
  // everything below one half gives the intercept-only model
  std::vector<double> low(8, 0.0);
  low[0] = 0.7;
  low[1] = 0.1;
  low[2] = 0.1;
  low[4] = 0.1;
  space.posterior_probs = low;
  EXPECT_EQ(median_probability_model(space), std::vector<bool>(3, false));
}

TEST(Inclusion, MonotoneInMass) {
  auto space = enumerate_models({"a", "b"});
  std::vector<double> p{0.4, 0.3, 0.2, 0.1};
  space.posterior_probs = p;
  const double before = inclusion_probabilities(space)[0];
  // move mass from a model without "a" to one with it
  p[0] -= 0.1;
  p[1] += 0.1;
  space.posterior_probs = p;
  EXPECT_GT(inclusion_probabilities(space)[0], before);
}

TEST(Ranking, OrderAndTies) {
  auto space = enumerate_models({"b", "a"});
  space.posterior_probs = std::vector<double>{0.1, 0.3, 0.3, 0.3};
  const auto order = rank_models(space);
  // ties: single-variable models first, then by sorted names ("a" before "b")
  EXPECT_EQ(space.label(order[0]), "{a}");
  EXPECT_EQ(space.label(order[1]), "{b}");
  EXPECT_EQ(space.included_count(order[2]), 2u);
  EXPECT_EQ(order[3], 0u);
}

TEST(Ranking, UniformPriorTopIsMaxLikelihood) {
  const auto data = synthetic();
  auto space = enumerate_models({"x"});
  score_models(space, data.dataset, data.covariates);
  posterior_model_probs(space);
  const auto& lml = *space.log_mls;
  const std::size_t best = lml[0] > lml[1] ? 0 : 1;
  EXPECT_EQ(rank_models(space)[0], best);
}

TEST(ModelAveraging, MixtureIdentities) {
  const auto data = synthetic();
  auto space = enumerate_models({"x"});
  score_models(space, data.dataset, data.covariates);
  posterior_model_probs(space);
  const auto fits = fit_models(space, data.dataset, data.covariates);
  ASSERT_EQ(fits.size(), 2u);
  for (std::size_t m = 0; m < 2; ++m) {
    EXPECT_NEAR(*fits[m].log_marginal_likelihood(), (*space.log_mls)[m], 1e-10);
  }
  // prediction for a study with x = 1
  const std::vector<VectorXd> xs{(VectorXd(1) << 1).finished(), (VectorXd(2) << 1, 1).finished()};
  const auto avg = model_averaged_combination(space, fits, xs, false);
  double total = 0.0;
  for (const auto& c : avg.components()) total += c.weight;
  EXPECT_NEAR(total, 1.0, 1e-12);
  const auto& post = *space.posterior_probs;
  double mean = 0.0;
  for (std::size_t m = 0; m < 2; ++m) mean += post[m] * linear_combination(fits[m], xs[m], false).mean();
  EXPECT_NEAR(avg.mean(), mean, 1e-12);

  auto certain = space;
  certain.posterior_probs = std::vector<double>{0.0, 1.0};
  const auto only = model_averaged_combination(certain, fits, xs);
  const auto direct = linear_combination(fits[1], xs[1]);
  for (double p : {0.025, 0.5, 0.975}) EXPECT_NEAR(only.quantile(p), direct.quantile(p), 1e-12);

  const std::vector<VectorXd> bad{(VectorXd(1) << 1).finished()};
  EXPECT_THROW(model_averaged_combination(space, fits, bad), ValidationError);
}
