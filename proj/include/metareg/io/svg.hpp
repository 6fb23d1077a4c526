#pragma once

// Deterministic SVG rendering of forest and trend plots.  All coordinates
// are printed with two decimals, so identical inputs give identical bytes.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "metareg/errors.hpp"
#include "metareg/inference.hpp"
#include "metareg/io/format.hpp"
#include "metareg/mixture.hpp"

namespace metareg::io {

namespace svg {

inline std::string num(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  std::string s(buf);
  return s == "-0.00" ? "0.00" : s;
}

/// Compact label for data values: up to 4 significant digits.
inline std::string label_num(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  std::string s(buf);
  return s == "-0" ? "0" : s;
}

inline std::string fixed(double v, int digits) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  std::string s(buf);
  if (s.find_first_not_of("-0.") == std::string::npos && s.front() == '-') s.erase(0, 1);
  return s;
}

inline std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

/// Tick positions at 1, 2 or 5 times a power of ten.
inline std::vector<double> nice_ticks(double lo, double hi, int target = 6) {
  if (!(hi > lo)) return {lo};
  const double raw = (hi - lo) / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    step = m * mag;
    if (step >= raw) break;
  }
  std::vector<double> ticks;
  for (double t = std::ceil(lo / step) * step; t <= hi + 1e-9 * step; t += step) {
    ticks.push_back(std::abs(t) < 1e-12 * step ? 0.0 : t);
  }
  return ticks;
}

struct LinearScale {
  double v0 = 0.0;
  double v1 = 1.0;
  double p0 = 0.0;
  double p1 = 1.0;

  double operator()(double v) const { return p0 + (v - v0) / (v1 - v0) * (p1 - p0); }
  double inverse(double p) const { return v0 + (p - p0) / (p1 - p0) * (v1 - v0); }
};

inline LinearScale padded_scale(double lo, double hi, double p0, double p1) {
  if (!(hi > lo)) {
    const double w = std::max(1.0, std::abs(lo)) * 0.5;
    lo -= w;
    hi += w;
  }
  const double pad = 0.05 * (hi - lo);
  return {lo - pad, hi + pad, p0, p1};
}

inline const char* palette(std::size_t i) {
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
  return colors[i % 6];
}

inline void write_file(const std::string& text, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
  if (!out) throw std::runtime_error("error writing " + path);
}

}  // namespace svg

// ---------------------------------------------------------------------------
// Forest plot

struct ForestSpec {
  std::vector<CombinationRow> means;        // empty: one row per coefficient
  std::vector<CombinationRow> predictions;  // rows with mean = false
  std::string xlabel = "effect";
  double level = 0.95;
};

enum class ForestRowKind { study, coefficient, combination, prediction, heterogeneity };

struct ForestRow {
  ForestRowKind kind = ForestRowKind::study;
  std::string label;
  std::vector<double> regressors;
  double estimate = 0.0;  // y_i for studies, posterior median otherwise
  double lower = 0.0;
  double upper = 0.0;
  // Shrinkage interval of a study row.
  double shrink_median = 0.0;
  double shrink_lower = 0.0;
  double shrink_upper = 0.0;
};

/// Rows of the forest plot: k studies, the coefficient or combination rows,
/// the prediction rows and a heterogeneity footer.
inline std::vector<ForestRow> forest_rows(const FitResult& f, const ForestSpec& spec) {
  const auto& p = f.problem();
  const double z = metareg::detail::normal_quantile(0.5 * (1.0 + spec.level));
  std::vector<ForestRow> rows;
  for (std::size_t i = 0; i < p.k(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    ForestRow r;
    r.kind = ForestRowKind::study;
    r.label = p.dataset.labels[i];
    for (Eigen::Index j = 0; j < p.design.X.cols(); ++j) r.regressors.push_back(p.design.X(ii, j));
    r.estimate = p.dataset.y(ii);
    r.lower = r.estimate - z * p.dataset.sigma(ii);
    r.upper = r.estimate + z * p.dataset.sigma(ii);
    const ScalarMixture s = shrinkage(f, i);
    const Interval ci = credible_interval(s, spec.level);
    r.shrink_median = s.quantile(0.5);
    r.shrink_lower = ci.lower;
    r.shrink_upper = ci.upper;
    rows.push_back(std::move(r));
  }
  auto add_mixture = [&](ForestRowKind kind, const std::string& name, const VectorXd& x,
                         const ScalarMixture& m) {
    ForestRow r;
    r.kind = kind;
    r.label = name;
    for (Eigen::Index j = 0; j < x.size(); ++j) r.regressors.push_back(x(j));
    const Interval ci = credible_interval(m, spec.level);
    r.estimate = m.quantile(0.5);
    r.lower = ci.lower;
    r.upper = ci.upper;
    rows.push_back(std::move(r));
  };
  if (spec.means.empty()) {
    for (std::size_t j = 0; j < p.d(); ++j) {
      VectorXd e = VectorXd::Zero(static_cast<Eigen::Index>(p.d()));
      e(static_cast<Eigen::Index>(j)) = 1.0;
      add_mixture(ForestRowKind::coefficient, p.design.column_names[j], e, coefficient_marginal(f, j));
    }
  } else {
    for (const auto& c : spec.means) {
      add_mixture(ForestRowKind::combination, c.name, c.x, linear_combination(f, c.x, true));
    }
  }
  for (const auto& c : spec.predictions) {
    add_mixture(ForestRowKind::prediction, c.name, c.x, linear_combination(f, c.x, false));
  }
  ForestRow footer;
  footer.kind = ForestRowKind::heterogeneity;
  footer.label = "tau";
  const Interval tci = credible_interval(f.tau_posterior(), spec.level);
  footer.estimate = f.tau_posterior().quantile(0.5);
  footer.lower = tci.lower;
  footer.upper = tci.upper;
  rows.push_back(std::move(footer));
  return rows;
}

inline std::string render_forest_svg(const FitResult& f, const ForestSpec& spec = {}) {
  using svg::num;
  const auto rows = forest_rows(f, spec);
  const auto& names = f.problem().design.column_names;
  const std::size_t d = names.size();

  constexpr double kRowH = 22.0;
  constexpr double kTop = 50.0;
  constexpr double kLabelW = 190.0;
  constexpr double kRegW = 70.0;
  constexpr double kPlotW = 380.0;
  constexpr double kRightW = 190.0;
  const double plot_left = 20.0 + kLabelW + kRegW * static_cast<double>(d);
  const double plot_right = plot_left + kPlotW;
  const double width = plot_right + kRightW;
  // Summary rows are separated from the studies by a gap.
  auto row_y = [&](std::size_t i) {
    const bool summary = rows[i].kind != ForestRowKind::study;
    return kTop + kRowH * (static_cast<double>(i) + 0.5) + (summary ? kRowH * 0.5 : 0.0);
  };
  const double height = row_y(rows.size() - 1) + 80.0;

  double lo = metareg::detail::kInf;
  double hi = -metareg::detail::kInf;
  for (const auto& r : rows) {
    if (r.kind == ForestRowKind::heterogeneity) continue;
    lo = std::min({lo, r.lower, r.estimate});
    hi = std::max({hi, r.upper, r.estimate});
    if (r.kind == ForestRowKind::study) {
      lo = std::min(lo, r.shrink_lower);
      hi = std::max(hi, r.shrink_upper);
    }
  }
  const svg::LinearScale sx = svg::padded_scale(lo, hi, plot_left, plot_right);

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width) << "\" height=\""
    << num(height) << "\" viewBox=\"0 0 " << num(width) << ' ' << num(height)
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect x=\"0\" y=\"0\" width=\"" << num(width) << "\" height=\"" << num(height)
    << "\" fill=\"white\"/>\n";
  // Column headers.
  o << "<text x=\"20.00\" y=\"" << num(kTop - 12) << "\" font-weight=\"bold\">study</text>\n";
  for (std::size_t j = 0; j < d; ++j) {
    o << "<text class=\"regressor-header\" x=\""
      << num(20.0 + kLabelW + kRegW * (static_cast<double>(j) + 0.5)) << "\" y=\""
      << num(kTop - 12) << "\" text-anchor=\"middle\" font-weight=\"bold\">"
      << svg::escape(names[j]) << "</text>\n";
  }
  o << "<text x=\"" << num(plot_right + 10) << "\" y=\"" << num(kTop - 12)
    << "\" font-weight=\"bold\">estimate [" << svg::fixed(100.0 * spec.level, 0)
    << "% CI]</text>\n";

  o << "<g class=\"plot-area\" data-xmin=\"" << io::format_double(sx.v0) << "\" data-xmax=\""
    << io::format_double(sx.v1) << "\" data-left=\"" << num(sx.p0) << "\" data-right=\""
    << num(sx.p1) << "\">\n";
  const double axis_y = row_y(rows.size() - 2) + kRowH;
  if (sx.v0 < 0.0 && sx.v1 > 0.0) {
    o << "<line x1=\"" << num(sx(0.0)) << "\" y1=\"" << num(kTop) << "\" x2=\"" << num(sx(0.0))
      << "\" y2=\"" << num(axis_y) << "\" stroke=\"#999\" stroke-dasharray=\"3,3\"/>\n";
  }
  o << "<line x1=\"" << num(plot_left) << "\" y1=\"" << num(axis_y) << "\" x2=\""
    << num(plot_right) << "\" y2=\"" << num(axis_y) << "\" stroke=\"black\"/>\n";
  for (double t : svg::nice_ticks(sx.v0, sx.v1)) {
    o << "<line x1=\"" << num(sx(t)) << "\" y1=\"" << num(axis_y) << "\" x2=\"" << num(sx(t))
      << "\" y2=\"" << num(axis_y + 5) << "\" stroke=\"black\"/>\n";
    o << "<text x=\"" << num(sx(t)) << "\" y=\"" << num(axis_y + 18)
      << "\" text-anchor=\"middle\">" << svg::label_num(t) << "</text>\n";
  }
  o << "<text x=\"" << num(0.5 * (plot_left + plot_right)) << "\" y=\"" << num(axis_y + 34)
    << "\" text-anchor=\"middle\">" << svg::escape(spec.xlabel) << "</text>\n";
  o << "</g>\n";

  auto interval_text = [](const ForestRow& r) {
    return svg::fixed(r.estimate, 2) + " [" + svg::fixed(r.lower, 2) + ", " +
           svg::fixed(r.upper, 2) + "]";
  };
  static const char* kinds[] = {"study", "coefficient", "combination", "prediction",
                                "heterogeneity"};
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    const double y = row_y(i);
    o << "<g class=\"row " << kinds[static_cast<int>(r.kind)] << "\" data-label=\""
      << svg::escape(r.label) << "\">\n";
    if (r.kind == ForestRowKind::heterogeneity) {
      o << "<text x=\"20.00\" y=\"" << num(y + 56) << "\">Heterogeneity (tau): "
        << interval_text(r) << "</text>\n</g>\n";
      continue;
    }
    o << "<text x=\"20.00\" y=\"" << num(y + 4) << "\">" << svg::escape(r.label) << "</text>\n";
    for (std::size_t j = 0; j < r.regressors.size(); ++j) {
      o << "<text class=\"regressor\" x=\""
        << num(20.0 + kLabelW + kRegW * (static_cast<double>(j) + 0.5)) << "\" y=\"" << num(y + 4)
        << "\" text-anchor=\"middle\">" << svg::label_num(r.regressors[j]) << "</text>\n";
    }
    if (r.kind == ForestRowKind::study) {
      o << "<rect class=\"shrinkage\" x=\"" << num(sx(r.shrink_lower)) << "\" y=\"" << num(y + 2)
        << "\" width=\"" << num(sx(r.shrink_upper) - sx(r.shrink_lower))
        << "\" height=\"5.00\" fill=\"#bbbbbb\"/>\n";
      o << "<line class=\"shrinkage-median\" x1=\"" << num(sx(r.shrink_median)) << "\" y1=\""
        << num(y + 1) << "\" x2=\"" << num(sx(r.shrink_median)) << "\" y2=\"" << num(y + 8)
        << "\" stroke=\"#555\"/>\n";
      o << "<line class=\"whisker\" x1=\"" << num(sx(r.lower)) << "\" y1=\"" << num(y - 3)
        << "\" x2=\"" << num(sx(r.upper)) << "\" y2=\"" << num(y - 3) << "\" stroke=\"black\"/>\n";
      o << "<rect class=\"estimate\" x=\"" << num(sx(r.estimate) - 3) << "\" y=\"" << num(y - 6)
        << "\" width=\"6.00\" height=\"6.00\" fill=\"black\"/>\n";
    } else if (r.kind == ForestRowKind::prediction) {
      o << "<rect class=\"prediction-bar\" x=\"" << num(sx(r.lower)) << "\" y=\"" << num(y - 3)
        << "\" width=\"" << num(sx(r.upper) - sx(r.lower))
        << "\" height=\"6.00\" fill=\"#9ecae1\" stroke=\"#3182bd\"/>\n";
      o << "<line class=\"median\" x1=\"" << num(sx(r.estimate)) << "\" y1=\"" << num(y - 6)
        << "\" x2=\"" << num(sx(r.estimate)) << "\" y2=\"" << num(y + 6)
        << "\" stroke=\"#08519c\" stroke-width=\"2\"/>\n";
    } else {
      o << "<polygon class=\"summary-diamond\" points=\"" << num(sx(r.lower)) << ',' << num(y)
        << ' ' << num(sx(r.estimate)) << ',' << num(y - 7) << ' ' << num(sx(r.upper)) << ','
        << num(y) << ' ' << num(sx(r.estimate)) << ',' << num(y + 7)
        << "\" fill=\"#e6550d\" stroke=\"#a63603\"/>\n";
      o << "<line class=\"median\" x1=\"" << num(sx(r.estimate)) << "\" y1=\"" << num(y - 7)
        << "\" x2=\"" << num(sx(r.estimate)) << "\" y2=\"" << num(y + 7)
        << "\" stroke=\"#a63603\"/>\n";
    }
    o << "<text x=\"" << num(plot_right + 10) << "\" y=\"" << num(y + 4) << "\">"
      << interval_text(r) << "</text>\n";
    o << "</g>\n";
  }
  o << "</svg>\n";
  return o.str();
}

inline void write_forest_svg(const FitResult& f, const ForestSpec& spec, const std::string& path) {
  svg::write_file(render_forest_svg(f, spec), path);
}

// ---------------------------------------------------------------------------
// Trend / bubble plot

struct TrendSpec {
  std::size_t covariable = 1;  // design column shown on the horizontal axis
  MatrixXd x_rows;             // one combination row per evaluation point
  bool bubble = false;         // point area proportional to 1/sigma_i
  std::vector<std::string> groups;  // optional per-study group labels (colors)
  std::string xlabel;
  std::string ylabel = "effect";
  double level = 0.95;
};

struct TrendBand {
  std::vector<double> x;
  std::vector<double> median;
  std::vector<double> lower;
  std::vector<double> upper;
};

struct TrendBands {
  TrendBand mean;
  TrendBand prediction;
};

inline void check_trend_spec(const FitResult& f, const TrendSpec& spec) {
  const auto& X = f.problem().design.X;
  if (spec.covariable >= f.problem().d()) {
    throw ValidationError(ValidationError::Kind::invalid_value, "covariable index out of range");
  }
  const auto col = X.col(static_cast<Eigen::Index>(spec.covariable));
  if (!(col.maxCoeff() > col.minCoeff())) {
    throw ValidationError(ValidationError::Kind::invalid_value,
                          "no continuous covariable designated: column '" +
                              f.problem().design.column_names[spec.covariable] +
                              "' is constant");
  }
  if (spec.x_rows.rows() < 1 || static_cast<std::size_t>(spec.x_rows.cols()) != f.problem().d()) {
    throw ValidationError(ValidationError::Kind::dimension_mismatch,
                          "trend rows need one entry per coefficient");
  }
  if (!spec.groups.empty() && spec.groups.size() != f.problem().k()) {
    throw ValidationError(ValidationError::Kind::dimension_mismatch,
                          "need one group label per study");
  }
}

inline TrendBands trend_bands(const FitResult& f, const TrendSpec& spec) {
  check_trend_spec(f, spec);
  TrendBands out;
  for (Eigen::Index i = 0; i < spec.x_rows.rows(); ++i) {
    const VectorXd x = spec.x_rows.row(i).transpose();
    const double xv = x(static_cast<Eigen::Index>(spec.covariable));
    for (int pred = 0; pred < 2; ++pred) {
      const ScalarMixture m = linear_combination(f, x, pred == 0);
      const Interval ci = credible_interval(m, spec.level);
      TrendBand& b = pred == 0 ? out.mean : out.prediction;
      b.x.push_back(xv);
      b.median.push_back(m.quantile(0.5));
      b.lower.push_back(ci.lower);
      b.upper.push_back(ci.upper);
    }
  }
  return out;
}

inline std::string render_trend_svg(const FitResult& f, const TrendSpec& spec) {
  using svg::num;
  const TrendBands bands = trend_bands(f, spec);
  const auto& p = f.problem();
  const auto cov_col = static_cast<Eigen::Index>(spec.covariable);
  const double z = metareg::detail::normal_quantile(0.5 * (1.0 + spec.level));

  constexpr double kLeft = 70.0;
  constexpr double kRight = 620.0;
  constexpr double kTop = 30.0;
  constexpr double kBottom = 400.0;
  const double width = kRight + 150.0;
  const double height = kBottom + 60.0;

  double xlo = metareg::detail::kInf, xhi = -metareg::detail::kInf, ylo = metareg::detail::kInf, yhi = -metareg::detail::kInf;
  for (std::size_t i = 0; i < p.k(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    xlo = std::min(xlo, p.design.X(ii, cov_col));
    xhi = std::max(xhi, p.design.X(ii, cov_col));
    const double half = spec.bubble ? 0.0 : z * p.dataset.sigma(ii);
    ylo = std::min(ylo, p.dataset.y(ii) - half);
    yhi = std::max(yhi, p.dataset.y(ii) + half);
  }
  for (std::size_t i = 0; i < bands.prediction.x.size(); ++i) {
    xlo = std::min(xlo, bands.prediction.x[i]);
    xhi = std::max(xhi, bands.prediction.x[i]);
    ylo = std::min(ylo, bands.prediction.lower[i]);
    yhi = std::max(yhi, bands.prediction.upper[i]);
  }
  const svg::LinearScale sx = svg::padded_scale(xlo, xhi, kLeft, kRight);
  const svg::LinearScale sy = svg::padded_scale(ylo, yhi, kBottom, kTop);

  std::vector<std::string> group_names;
  for (const auto& g : spec.groups) {
    if (std::find(group_names.begin(), group_names.end(), g) == group_names.end()) {
      group_names.push_back(g);
    }
  }
  auto color_of = [&](std::size_t i) -> const char* {
    if (spec.groups.empty()) return "#333333";
    const auto it = std::find(group_names.begin(), group_names.end(), spec.groups[i]);
    return svg::palette(static_cast<std::size_t>(it - group_names.begin()));
  };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width) << "\" height=\""
    << num(height) << "\" viewBox=\"0 0 " << num(width) << ' ' << num(height)
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect x=\"0\" y=\"0\" width=\"" << num(width) << "\" height=\"" << num(height)
    << "\" fill=\"white\"/>\n";
  o << "<g class=\"plot-area\" data-xmin=\"" << io::format_double(sx.v0) << "\" data-xmax=\""
    << io::format_double(sx.v1) << "\" data-ymin=\"" << io::format_double(sy.v0)
    << "\" data-ymax=\"" << io::format_double(sy.v1) << "\">\n";
  // Axes.
  o << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(kBottom) << "\" x2=\"" << num(kRight)
    << "\" y2=\"" << num(kBottom) << "\" stroke=\"black\"/>\n";
  o << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(kBottom) << "\" x2=\"" << num(kLeft)
    << "\" y2=\"" << num(kTop) << "\" stroke=\"black\"/>\n";
  for (double t : svg::nice_ticks(sx.v0, sx.v1)) {
    o << "<line x1=\"" << num(sx(t)) << "\" y1=\"" << num(kBottom) << "\" x2=\"" << num(sx(t))
      << "\" y2=\"" << num(kBottom + 5) << "\" stroke=\"black\"/>\n";
    o << "<text x=\"" << num(sx(t)) << "\" y=\"" << num(kBottom + 18)
      << "\" text-anchor=\"middle\">" << svg::label_num(t) << "</text>\n";
  }
  for (double t : svg::nice_ticks(sy.v0, sy.v1)) {
    o << "<line x1=\"" << num(kLeft - 5) << "\" y1=\"" << num(sy(t)) << "\" x2=\"" << num(kLeft)
      << "\" y2=\"" << num(sy(t)) << "\" stroke=\"black\"/>\n";
    o << "<text x=\"" << num(kLeft - 8) << "\" y=\"" << num(sy(t) + 4)
      << "\" text-anchor=\"end\">" << svg::label_num(t) << "</text>\n";
  }
  const std::string xlabel = spec.xlabel.empty() ? p.design.column_names[spec.covariable] : spec.xlabel;
  o << "<text x=\"" << num(0.5 * (kLeft + kRight)) << "\" y=\"" << num(kBottom + 38)
    << "\" text-anchor=\"middle\">" << svg::escape(xlabel) << "</text>\n";
  o << "<text x=\"18.00\" y=\"" << num(0.5 * (kTop + kBottom))
    << "\" text-anchor=\"middle\" transform=\"rotate(-90 18.00 " << num(0.5 * (kTop + kBottom))
    << ")\">" << svg::escape(spec.ylabel) << "</text>\n";

  auto band_shape = [&](const TrendBand& b, const char* cls, const char* fill) {
    if (b.x.size() == 1) {
      o << "<line class=\"" << cls << "\" x1=\"" << num(sx(b.x[0])) << "\" y1=\""
        << num(sy(b.lower[0])) << "\" x2=\"" << num(sx(b.x[0])) << "\" y2=\""
        << num(sy(b.upper[0])) << "\" stroke=\"" << fill << "\" stroke-width=\"4\"/>\n";
      return;
    }
    o << "<polygon class=\"" << cls << "\" points=\"";
    for (std::size_t i = 0; i < b.x.size(); ++i) {
      o << num(sx(b.x[i])) << ',' << num(sy(b.upper[i])) << ' ';
    }
    for (std::size_t i = b.x.size(); i-- > 0;) {
      o << num(sx(b.x[i])) << ',' << num(sy(b.lower[i])) << (i > 0 ? " " : "");
    }
    o << "\" fill=\"" << fill << "\" fill-opacity=\"0.5\" stroke=\"none\"/>\n";
  };
  band_shape(bands.prediction, "prediction-band", "#c6dbef");
  band_shape(bands.mean, "mean-band", "#6baed6");
  if (bands.mean.x.size() > 1) {
    o << "<polyline class=\"median-line\" points=\"";
    for (std::size_t i = 0; i < bands.mean.x.size(); ++i) {
      o << num(sx(bands.mean.x[i])) << ',' << num(sy(bands.mean.median[i]))
        << (i + 1 < bands.mean.x.size() ? " " : "");
    }
    o << "\" fill=\"none\" stroke=\"#08306b\" stroke-width=\"2\"/>\n";
  } else {
    o << "<circle class=\"median-point\" cx=\"" << num(sx(bands.mean.x[0])) << "\" cy=\""
      << num(sy(bands.mean.median[0])) << "\" r=\"3.00\" fill=\"#08306b\"/>\n";
  }

  // Scale bubble radii so the most precise study gets radius 12.
  double max_prec = 0.0;
  for (Eigen::Index i = 0; i < p.dataset.sigma.size(); ++i) {
    max_prec = std::max(max_prec, 1.0 / p.dataset.sigma(i));
  }
  for (std::size_t i = 0; i < p.k(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    const double cx = sx(p.design.X(ii, cov_col));
    const double cy = sy(p.dataset.y(ii));
    const char* color = color_of(i);
    o << "<g class=\"study\" data-label=\"" << svg::escape(p.dataset.labels[i]) << "\">";
    if (spec.bubble) {
      // Area proportional to precision.
      const double r = 12.0 * std::sqrt((1.0 / p.dataset.sigma(ii)) / max_prec);
      o << "<circle cx=\"" << num(cx) << "\" cy=\"" << num(cy) << "\" r=\"" << num(r)
        << "\" fill=\"" << color << "\" fill-opacity=\"0.6\" stroke=\"" << color << "\"/>";
    } else {
      const double half = z * p.dataset.sigma(ii);
      o << "<line x1=\"" << num(cx) << "\" y1=\"" << num(sy(p.dataset.y(ii) - half)) << "\" x2=\""
        << num(cx) << "\" y2=\"" << num(sy(p.dataset.y(ii) + half)) << "\" stroke=\"" << color
        << "\"/><circle cx=\"" << num(cx) << "\" cy=\"" << num(cy) << "\" r=\"3.00\" fill=\""
        << color << "\"/>";
    }
    o << "</g>\n";
  }
  o << "</g>\n";
  for (std::size_t g = 0; g < group_names.size(); ++g) {
    const double y = kTop + 10.0 + 18.0 * static_cast<double>(g);
    o << "<circle cx=\"" << num(kRight + 20) << "\" cy=\"" << num(y) << "\" r=\"5.00\" fill=\""
      << svg::palette(g) << "\"/><text x=\"" << num(kRight + 30) << "\" y=\"" << num(y + 4)
      << "\">" << svg::escape(group_names[g]) << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

inline void write_trend_svg(const FitResult& f, const TrendSpec& spec, const std::string& path) {
  svg::write_file(render_trend_svg(f, spec), path);
}

}  // namespace metareg::io
