#pragma once

// Effect-size derivation from raw study summaries.

#include <cmath>
#include <string>

#include "metareg/errors.hpp"

namespace metareg {

struct TwoByTwoTable {
  double events_trt = 0.0;
  double total_trt = 0.0;
  double events_ctl = 0.0;
  double total_ctl = 0.0;
};

/// Estimate on the analysis scale together with its squared standard error.
struct EffectEstimate {
  double y = 0.0;
  double variance = 0.0;
  std::string label;

  double sigma() const { return std::sqrt(variance); }
};

namespace detail {

inline void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) {
    throw ValidationError(ValidationError::Kind::non_finite, std::string(what) + " is not finite");
  }
}

}  // namespace detail

/// Log odds ratio with Woolf variance; 0.5 is added to every cell of a
/// table that contains a zero cell.
inline EffectEstimate log_odds_ratio(const TwoByTwoTable& t, std::string label = {}) {
  detail::require_finite(t.events_trt, "events_trt");
  detail::require_finite(t.total_trt, "total_trt");
  detail::require_finite(t.events_ctl, "events_ctl");
  detail::require_finite(t.total_ctl, "total_ctl");
  if (!(t.total_trt > 0.0) || !(t.total_ctl > 0.0)) {
    throw ValidationError(ValidationError::Kind::invalid_value, "arm totals must be positive");
  }
  if (t.events_trt < 0.0 || t.events_ctl < 0.0 || t.events_trt > t.total_trt ||
      t.events_ctl > t.total_ctl) {
    throw ValidationError(ValidationError::Kind::invalid_value,
                          "event counts must lie between 0 and the arm total");
  }
  double a = t.events_trt;
  double b = t.total_trt - t.events_trt;
  double c = t.events_ctl;
  double d = t.total_ctl - t.events_ctl;
  if (a == 0.0 || b == 0.0 || c == 0.0 || d == 0.0) {
    a += 0.5;
    b += 0.5;
    c += 0.5;
    d += 0.5;
  }
  EffectEstimate out{std::log(a * d / (b * c)), 1.0 / a + 1.0 / b + 1.0 / c + 1.0 / d,
                     std::move(label)};
  if (!std::isfinite(out.y) || !std::isfinite(out.variance) || !(out.variance > 0.0)) {
    throw ValidationError(ValidationError::Kind::non_finite, "log odds ratio is not finite");
  }
  return out;
}

/// Logit of a proportion; fractional event counts are accepted as given.
inline EffectEstimate logit_proportion(double events, double n, std::string label = {}) {
  detail::require_finite(events, "events");
  detail::require_finite(n, "n");
  if (!(n > 0.0)) {
    throw ValidationError(ValidationError::Kind::invalid_value, "sample size must be positive");
  }
  if (!(events > 0.0 && events < n)) {
    throw ValidationError(ValidationError::Kind::invalid_value,
                          "logit proportion needs 0 < events < n");
  }
  const double non_events = n - events;
  return {std::log(events / non_events), 1.0 / events + 1.0 / non_events, std::move(label)};
}

/// Log ratio of means (delta-method variance).  A zero variance is returned
/// as computed; it is rejected once the estimate enters a StudyDataset.
inline EffectEstimate log_ratio_of_means(double m1, double sd1, double n1, double m2, double sd2,
                                         double n2, std::string label = {}) {
  for (double v : {m1, sd1, n1, m2, sd2, n2}) detail::require_finite(v, "ratio-of-means input");
  if (!(m1 > 0.0) || !(m2 > 0.0)) {
    throw ValidationError(ValidationError::Kind::invalid_value, "means must be positive");
  }
  if (n1 < 1.0 || n2 < 1.0) {
    throw ValidationError(ValidationError::Kind::invalid_value, "group sizes must be at least 1");
  }
  if (sd1 < 0.0 || sd2 < 0.0) {
    throw ValidationError(ValidationError::Kind::invalid_value, "standard deviations must be >= 0");
  }
  return {std::log(m1 / m2), sd1 * sd1 / (n1 * m1 * m1) + sd2 * sd2 / (n2 * m2 * m2),
          std::move(label)};
}

}  // namespace metareg
