#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "metareg/detail/half_line_quadrature.hpp"
#include "metareg/detail/numeric.hpp"
#include "metareg/errors.hpp"
#include "metareg/model_spec.hpp"
#include "metareg/nnhm_core.hpp"

namespace metareg {

/// Normalized continuous marginal posterior of the heterogeneity tau.
class TauPosterior {
 public:
  TauPosterior() = default;

  explicit TauPosterior(const RegressionProblem& problem) {
    check_normalizable(problem);
    try {
      density_ = detail::HalfLineDensity(
          [problem](double t) { return tau_log_marginal_unnorm(problem, t); },
          detail::HalfLineDensity::Options{1e-11, 48, 4000});
    } catch (const std::domain_error& e) {
      throw NonNormalizableError(std::string("tau posterior: ") + e.what());
    }
  }

  double density(double tau) const { return density_.density(tau); }
  double log_density(double tau) const { return density_.log_density(tau); }
  double cdf(double tau) const { return density_.cdf(tau); }
  double quantile(double p) const { return density_.quantile(p); }
  double mean() const { return density_.mean(); }
  double sd() const { return std::sqrt(density_.variance()); }
  double support_lower() const { return 0.0; }

  /// ln of the normalizing constant; equals ln p(y) when both priors are proper.
  double log_normalizer() const { return density_.log_total(); }

  double mode() const {
    const double upper = quantile(0.999);
    constexpr int kScan = 400;
    int best = 0;
    double best_val = log_density(0.0);
    for (int i = 1; i <= kScan; ++i) {
      const double v = log_density(upper * i / kScan);
      if (v > best_val) {
        best_val = v;
        best = i;
      }
    }
    const double lo = upper * std::max(0, best - 1) / kScan;
    const double hi = upper * std::min(kScan, best + 1) / kScan;
    const double x = detail::golden_section_minimize(
        [this](double t) { return -log_density(t); }, lo, hi, 1e-10 * (1.0 + upper));
    // The density is flat at 0 (it depends on tau^2), so roundoff alone can
    // favour a point just inside the boundary.
    if (best == 0 && log_density(0.0) >= log_density(x) - 1e-9) return 0.0;
    return x;
  }

 private:
  // An improper uniform tau prior leaves a polynomial tail tau^-(k - d)
  // (uniform beta prior) or tau^-k (normal beta prior).
  static void check_normalizable(const RegressionProblem& p) {
    if (p.tau_prior.proper()) return;
    if (!std::holds_alternative<tau_family::ImproperUniform>(p.tau_prior.family())) return;
    const auto k = static_cast<long>(p.k());
    const auto d = static_cast<long>(p.d());
    const long decay = p.beta_prior.is_normal() ? k : k - d;
    if (decay <= 1) {
      throw NonNormalizableError(
          "tau posterior is improper: a uniform tau prior needs at least " +
          std::to_string(p.beta_prior.is_normal() ? 2 : d + 2) + " studies here");
    }
  }

  detail::HalfLineDensity density_;
};

}  // namespace metareg
