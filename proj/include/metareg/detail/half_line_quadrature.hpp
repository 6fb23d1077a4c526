#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <queue>
#include <stdexcept>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "metareg/detail/numeric.hpp"

namespace metareg::detail {

// Normalizes an unnormalized log-density on [0, inf) and caches panel masses
// so that CDF and quantile evaluations only integrate within one panel.
//
// The half line is mapped to t in [0, 1) via tau = s t / (1 - t), with the
// scale s set to the width of the bulk of the density; panels are
// refined adaptively (Gauss-Kronrod 21 with the embedded Gauss 10 error
// estimate) until the summed error estimate drops below rel_tol of the total.
class HalfLineDensity {
 public:
  struct Options {
    double rel_tol = 1e-11;
    std::size_t initial_panels = 48;
    std::size_t max_panels = 4000;
  };

  HalfLineDensity() = default;

  HalfLineDensity(std::function<double(double)> log_f, Options opts)
      : log_f_(std::move(log_f)) {
    scale_ = locate_width();
    log_scale_ = locate_log_max();
    if (!std::isfinite(log_scale_)) {
      throw std::domain_error("density is zero or non-finite everywhere on [0, inf)");
    }
    build_panels(opts);
  }

  explicit HalfLineDensity(std::function<double(double)> log_f)
      : HalfLineDensity(std::move(log_f), Options{}) {}

  /// ln of the integral of exp(log_f) over [0, inf).
  double log_total() const { return log_scale_ + std::log(total_); }

  double log_density(double tau) const {
    if (tau < 0.0) return -kInf;
    return log_f_(tau) - log_total();
  }
  double density(double tau) const { return std::exp(log_density(tau)); }

  double cdf(double tau) const {
    if (tau <= 0.0) return 0.0;
    if (!std::isfinite(tau)) return 1.0;
    const double t = tau / (scale_ + tau);
    const auto it = std::upper_bound(panels_.begin(), panels_.end(), t,
                                     [](double v, const Panel& p) { return v < p.t0; });
    const Panel& p = *(it - 1);
    double mass = p.cum;
    if (t >= p.t1) {
      mass += p.mass;
    } else if (t > p.t0) {
      mass += partial(p.t0, t);
    }
    return std::clamp(mass / total_, 0.0, 1.0);
  }

  double quantile(double prob) const {
    if (!(prob > 0.0 && prob < 1.0)) {
      if (prob == 0.0) return 0.0;
      throw std::domain_error("probability must lie in (0, 1)");
    }
    const double target = prob * total_;
    auto it = std::upper_bound(panels_.begin(), panels_.end(), target,
                               [](double v, const Panel& p) { return v < p.cum; });
    const Panel& p = *(it - 1);
    const double rest = target - p.cum;
    auto f = [&](double t) { return partial(p.t0, t) - rest; };
    const double t = solve_increasing(f, p.t0, p.t1, 1e-15);
    return to_tau(t);
  }

  double mean() const { return first_moment_ / total_; }
  double variance() const {
    const double m = mean();
    return std::max(0.0, second_moment_ / total_ - m * m);
  }

  std::size_t panel_count() const { return panels_.size(); }

 private:
  struct Panel {
    double t0 = 0.0;
    double t1 = 0.0;
    double mass = 0.0;
    double error = 0.0;
    double cum = 0.0;
  };

  using GK21 = boost::math::quadrature::gauss_kronrod<double, 21>;
  using GK15 = boost::math::quadrature::gauss_kronrod<double, 15>;

  double to_tau(double t) const { return scale_ * t / (1.0 - t); }

  // Scaled integrand in t, including the Jacobian of the tau(t) map.
  double integrand(double t) const {
    if (t >= 1.0) return 0.0;
    const double lf = log_f_(to_tau(t));
    if (!(lf > -kInf)) return 0.0;
    return std::exp(lf - log_scale_ + std::log(scale_) - 2.0 * std::log1p(-t));
  }

  double partial(double a, double b) const {
    if (b <= a) return 0.0;
    return GK15::integrate([this](double t) { return integrand(t); }, a, b, 0, 0.0);
  }

  // Largest tau on a log-spaced scan of [1e-15, 1e15] where log_f is within
  // 3 of its scanned maximum.
  double locate_width() const {
    constexpr int kScan = 600;
    std::vector<double> taus{0.0};
    std::vector<double> vals{log_f_(0.0)};
    for (int i = 0; i <= kScan; ++i) {
      taus.push_back(std::pow(10.0, -15.0 + 30.0 * i / kScan));
      vals.push_back(log_f_(taus.back()));
    }
    double best = -kInf;
    for (double v : vals) {
      if (std::isfinite(v)) best = std::max(best, v);
    }
    if (!std::isfinite(best)) return 1.0;
    double width = 0.0;
    for (std::size_t i = 0; i < taus.size(); ++i) {
      if (std::isfinite(vals[i]) && vals[i] >= best - 3.0) width = taus[i];
    }
    return width > 0.0 ? width : 1.0;
  }

  double locate_log_max() const {
    constexpr int kScan = 512;
    double best_t = 0.0;
    double best = log_f_(0.0);
    for (int i = 1; i < kScan; ++i) {
      const double t = static_cast<double>(i) / kScan;
      const double v = log_f_(to_tau(t));
      if (v > best || !std::isfinite(best)) {
        best = v;
        best_t = t;
      }
    }
    const double lo = std::max(0.0, best_t - 1.0 / kScan);
    const double hi = std::min(1.0 - 0.5 / kScan, best_t + 1.0 / kScan);
    const double t = golden_section_minimize(
        [this](double u) { return -log_f_(to_tau(u)); }, lo, hi, 1e-12);
    return std::max(best, log_f_(to_tau(t)));
  }

  Panel evaluate(double a, double b) const {
    Panel p;
    p.t0 = a;
    p.t1 = b;
    double err = 0.0;
    p.mass = GK21::integrate([this](double t) { return integrand(t); }, a, b, 0, 0.0, &err);
    p.error = err;
    return p;
  }

  void build_panels(const Options& opts) {
    std::vector<Panel> work;
    work.reserve(opts.max_panels + 2);
    for (std::size_t i = 0; i < opts.initial_panels; ++i) {
      work.push_back(evaluate(static_cast<double>(i) / opts.initial_panels,
                              static_cast<double>(i + 1) / opts.initial_panels));
    }
    auto worse = [&work](std::size_t a, std::size_t b) {
      if (work[a].error != work[b].error) return work[a].error < work[b].error;
      return a > b;
    };
    std::priority_queue<std::size_t, std::vector<std::size_t>, decltype(worse)> queue(worse);
    double total = 0.0;
    double error = 0.0;
    for (std::size_t i = 0; i < work.size(); ++i) {
      queue.push(i);
      total += work[i].mass;
      error += work[i].error;
    }
    while (error > opts.rel_tol * total && work.size() < opts.max_panels) {
      const std::size_t idx = queue.top();
      queue.pop();
      const Panel old = work[idx];
      const double mid = 0.5 * (old.t0 + old.t1);
      if (!(mid > old.t0 && mid < old.t1)) break;
      work[idx] = evaluate(old.t0, mid);
      work.push_back(evaluate(mid, old.t1));
      total += work[idx].mass + work.back().mass - old.mass;
      error += work[idx].error + work.back().error - old.error;
      queue.push(idx);
      queue.push(work.size() - 1);
    }
    std::sort(work.begin(), work.end(), [](const Panel& a, const Panel& b) { return a.t0 < b.t0; });

    double cum = 0.0;
    first_moment_ = 0.0;
    second_moment_ = 0.0;
    for (Panel& p : work) {
      p.cum = cum;
      cum += p.mass;
      auto m1 = [this](double t) { return integrand(t) * to_tau(t); };
      auto m2 = [this](double t) {
        const double tau = to_tau(t);
        return integrand(t) * tau * tau;
      };
      first_moment_ += GK21::integrate(m1, p.t0, p.t1, 0, 0.0);
      second_moment_ += GK21::integrate(m2, p.t0, p.t1, 0, 0.0);
    }
    total_ = cum;
    if (!(total_ > 0.0) || !std::isfinite(total_)) {
      throw std::domain_error("density is not normalizable");
    }
    panels_ = std::move(work);
  }

  std::function<double(double)> log_f_;
  double scale_ = 1.0;
  double log_scale_ = 0.0;
  double total_ = 1.0;
  double first_moment_ = 0.0;
  double second_moment_ = 0.0;
  std::vector<Panel> panels_;
};

}  // namespace metareg::detail
