#pragma once

// Discretization of the normal mixture p(beta | y) = int p(beta | tau, y) p(tau | y) d tau
// into a finite mixture whose adjacent components are at most `delta` apart
// in symmetrized Kullback-Leibler divergence.

#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "metareg/errors.hpp"
#include "metareg/model_spec.hpp"
#include "metareg/nnhm_core.hpp"
#include "metareg/tau_posterior.hpp"

namespace metareg {

/// Mean of the two directed KL divergences between two normals:
///   1/4 [ tr(Sb^-1 Sa) + tr(Sa^-1 Sb) - 2d + (ma - mb)' (Sa^-1 + Sb^-1) (ma - mb) ]
inline double symmetrized_kl_mvn(const MvnMoments& a, const MvnMoments& b) {
  const auto d = a.mean.size();
  if (b.mean.size() != d || a.cov.rows() != d || b.cov.rows() != d) {
    throw ValidationError(ValidationError::Kind::dimension_mismatch,
                          "divergence between normals of different dimension");
  }
  Eigen::LLT<MatrixXd> la(a.cov);
  Eigen::LLT<MatrixXd> lb(b.cov);
  if (la.info() != Eigen::Success || lb.info() != Eigen::Success) {
    throw ValidationError(ValidationError::Kind::rank_deficient, "singular covariance in divergence");
  }
  const VectorXd diff = a.mean - b.mean;
  const double tr_ab = lb.solve(a.cov).trace();
  const double tr_ba = la.solve(b.cov).trace();
  const double quad = diff.dot(la.solve(diff)) + diff.dot(lb.solve(diff));
  return std::max(0.0, 0.25 * (tr_ab + tr_ba - 2.0 * static_cast<double>(d) + quad));
}

struct GridOptions {
  double delta = 0.01;
  double epsilon = 1e-4;
};

struct GridNode {
  double tau = 0.0;
  double weight = 0.0;
  MvnMoments moments;
};

struct PosteriorGrid {
  std::vector<GridNode> nodes;
  double delta = 0.01;
  double epsilon = 1e-4;

  std::size_t size() const { return nodes.size(); }
};

/// Builds the support grid from a normalized tau posterior.
///
/// Nodes start at tau = 0 and step upward, each one the point where the
/// divergence to its predecessor reaches delta, until the (1 - epsilon)
/// posterior quantile.  Weights are posterior masses of midpoint bins,
/// truncated at that quantile and renormalized.  When the whole range is
/// within delta of tau = 0, a single node at the posterior median is used.
inline PosteriorGrid build_grid(const RegressionProblem& problem, const TauPosterior& tau,
                                GridOptions opts = {}) {
  if (!(opts.delta > 0.0)) throw std::invalid_argument("delta must be positive");
  if (!(opts.epsilon > 0.0 && opts.epsilon < 1.0)) {
    throw std::invalid_argument("epsilon must lie in (0, 1)");
  }
  PosteriorGrid grid;
  grid.delta = opts.delta;
  grid.epsilon = opts.epsilon;

  const double upper = tau.quantile(1.0 - opts.epsilon);
  const MvnMoments at_upper = conditional_beta_posterior(problem, upper);
  MvnMoments current = conditional_beta_posterior(problem, 0.0);

  if (symmetrized_kl_mvn(current, at_upper) <= opts.delta) {
    const double median = tau.quantile(0.5);
    grid.nodes.push_back({median, 1.0, conditional_beta_posterior(problem, median)});
    return grid;
  }

  constexpr std::size_t kMaxNodes = 100000;
  std::vector<double> taus{0.0};
  std::vector<MvnMoments> moments{current};
  while (true) {
    if (symmetrized_kl_mvn(current, at_upper) <= opts.delta) {
      taus.push_back(upper);
      moments.push_back(at_upper);
      break;
    }
    // Bisection keeps div(lo) <= delta < div(hi); stop once div(lo) is within
    // 1e-3 * delta of the target.
    double lo = taus.back();
    double hi = upper;
    MvnMoments lo_moments = current;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (!(mid > lo && mid < hi)) break;
      MvnMoments m = conditional_beta_posterior(problem, mid);
      const double div = symmetrized_kl_mvn(current, m);
      if (div <= opts.delta) {
        lo = mid;
        lo_moments = std::move(m);
        if (div >= opts.delta * (1.0 - 1e-3)) break;
      } else {
        hi = mid;
      }
    }
    if (!(lo > taus.back())) {
      throw std::runtime_error("grid construction stalled; delta too small for double precision");
    }
    taus.push_back(lo);
    moments.push_back(lo_moments);
    current = std::move(lo_moments);
    if (taus.size() > kMaxNodes) throw std::runtime_error("grid exceeds the node limit");
  }

  const std::size_t n = taus.size();
  std::vector<double> cdf_edges(n + 1);
  cdf_edges[0] = 0.0;
  for (std::size_t j = 1; j < n; ++j) cdf_edges[j] = tau.cdf(0.5 * (taus[j - 1] + taus[j]));
  cdf_edges[n] = tau.cdf(upper);
  double total = 0.0;
  grid.nodes.reserve(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double w = std::max(0.0, cdf_edges[j + 1] - cdf_edges[j]);
    total += w;
    grid.nodes.push_back({taus[j], w, std::move(moments[j])});
  }
  for (auto& node : grid.nodes) node.weight /= total;
  return grid;
}

inline PosteriorGrid build_grid(const RegressionProblem& problem, GridOptions opts = {}) {
  return build_grid(problem, TauPosterior(problem), opts);
}

}  // namespace metareg
