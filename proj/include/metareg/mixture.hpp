#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "metareg/detail/numeric.hpp"

namespace metareg {

enum class MixtureKind { coefficient, combination_mean, prediction, shrinkage };

struct MixtureComponent {
  double weight = 0.0;
  double mean = 0.0;
  double sd = 0.0;
};

/// Finite mixture of univariate normals.  Components with sd == 0 are
/// point masses.
class ScalarMixture {
 public:
  ScalarMixture() = default;
  ScalarMixture(std::vector<MixtureComponent> components, MixtureKind kind)
      : components_(std::move(components)), kind_(kind) {
    if (components_.empty()) throw std::invalid_argument("mixture needs at least one component");
    for (const auto& c : components_) {
      if (!(c.weight >= 0.0) || !(c.sd >= 0.0) || !std::isfinite(c.mean) || !std::isfinite(c.sd)) {
        throw std::invalid_argument("invalid mixture component");
      }
      has_point_mass_ = has_point_mass_ || c.sd == 0.0;
    }
  }

  const std::vector<MixtureComponent>& components() const { return components_; }
  MixtureKind kind() const { return kind_; }
  double support_lower() const { return -std::numeric_limits<double>::infinity(); }

  double pdf(double x) const {
    double s = 0.0;
    for (const auto& c : components_) {
      if (c.sd > 0.0) s += c.weight * detail::normal_pdf((x - c.mean) / c.sd) / c.sd;
    }
    return s;
  }

  double cdf(double x) const {
    double s = 0.0;
    for (const auto& c : components_) {
      if (c.sd > 0.0) s += c.weight * detail::normal_cdf((x - c.mean) / c.sd);
      else if (x >= c.mean) s += c.weight;
    }
    return std::clamp(s, 0.0, 1.0);
  }

  double quantile(double p) const {
    if (!(p > 0.0 && p < 1.0)) throw std::domain_error("probability must lie in (0, 1)");
    double lo = components_.front().mean;
    double hi = lo;
    double spread = 0.0;
    for (const auto& c : components_) {
      lo = std::min(lo, c.mean);
      hi = std::max(hi, c.mean);
      spread = std::max(spread, c.sd);
    }
    spread = std::max(spread, 1e-12 * (1.0 + std::abs(lo) + std::abs(hi)));
    lo -= 8.0 * spread;
    hi += 8.0 * spread;
    while (cdf(lo) > p) lo -= 8.0 * spread;
    while (cdf(hi) < p) hi += 8.0 * spread;
    return detail::solve_increasing([&](double x) { return cdf(x) - p; }, lo, hi, 1e-14,
                                    !has_point_mass_);
  }

  double mean() const {
    double m = 0.0;
    for (const auto& c : components_) m += c.weight * c.mean;
    return m;
  }

  double variance() const {
    const double m = mean();
    double s = 0.0;
    for (const auto& c : components_) s += c.weight * (c.sd * c.sd + c.mean * c.mean);
    return std::max(0.0, s - m * m);
  }

  double sd() const { return std::sqrt(variance()); }

  /// Highest local maximum of the density, found by Gaussian mean-shift
  /// started from every component mean and from the mixture mean.
  double mode() const {
    std::vector<double> starts;
    double best_point = components_.front().mean;
    double best_point_w = -1.0;
    for (const auto& c : components_) {
      if (c.sd > 0.0) starts.push_back(c.mean);
      else if (c.weight > best_point_w) {
        best_point_w = c.weight;
        best_point = c.mean;
      }
    }
    if (starts.empty()) return best_point;
    starts.push_back(mean());
    double best_x = starts.front();
    double best_f = -1.0;
    for (double x : starts) {
      for (int it = 0; it < 2000; ++it) {
        double num = 0.0;
        double den = 0.0;
        for (const auto& c : components_) {
          if (c.sd <= 0.0) continue;
          const double v = c.sd * c.sd;
          const double r = c.weight * detail::normal_pdf((x - c.mean) / c.sd) / c.sd / v;
          num += r * c.mean;
          den += r;
        }
        if (!(den > 0.0)) break;
        const double next = num / den;
        const bool done = std::abs(next - x) <= 1e-13 * (1.0 + std::abs(x));
        x = next;
        if (done) break;
      }
      const double f = pdf(x);
      if (f > best_f) {
        best_f = f;
        best_x = x;
      }
    }
    return best_x;
  }

 private:
  std::vector<MixtureComponent> components_;
  MixtureKind kind_ = MixtureKind::coefficient;
  bool has_point_mass_ = false;
};

enum class IntervalMethod { shortest, central };

struct Interval {
  double lower = 0.0;
  double upper = 0.0;
};

/// Credible interval for any distribution exposing quantile(p) and
/// support_lower().  The shortest interval minimizes q(p + level) - q(p) over
/// p by golden-section search; when the support has a finite lower bound the
/// boundary p = 0 is considered too.
template <class Distribution>
Interval credible_interval(const Distribution& dist, double level,
                           IntervalMethod method = IntervalMethod::shortest) {
  if (!(level > 0.0 && level < 1.0)) throw std::domain_error("level must lie in (0, 1)");
  if (method == IntervalMethod::central) {
    return {dist.quantile(0.5 * (1.0 - level)), dist.quantile(0.5 * (1.0 + level))};
  }
  const double lower_bound = dist.support_lower();
  const bool bounded = std::isfinite(lower_bound);
  const double p_min = std::min(1e-10, 0.25 * (1.0 - level));
  auto lower_at = [&](double p) { return (bounded && p <= 0.0) ? lower_bound : dist.quantile(p); };
  auto width = [&](double p) { return dist.quantile(p + level) - lower_at(p); };
  const double a = bounded ? 0.0 : p_min;
  const double b = 1.0 - level - p_min;
  double p = detail::golden_section_minimize(width, a, b, 1e-8);
  if (bounded && width(0.0) <= width(p)) p = 0.0;
  return {lower_at(p), dist.quantile(p + level)};
}

}  // namespace metareg
