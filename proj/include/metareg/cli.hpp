#pragma once

// Command-line front end.  Exit codes: 0 success, 1 usage error, 2 data or
// validation error.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <unistd.h>

#include "CLI11.hpp"
#include "json.hpp"

#include "metareg/errors.hpp"
#include "metareg/inference.hpp"
#include "metareg/io/csv.hpp"
#include "metareg/io/fit_json.hpp"
#include "metareg/io/format.hpp"
#include "metareg/io/svg.hpp"
#include "metareg/model_selection.hpp"
#include "metareg/version.hpp"

namespace metareg::cli {

/// Malformed option values; reported with exit code 1.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Option value parsing

inline std::string trim(std::string s) {
  s.erase(0, s.find_first_not_of(" \t"));
  s.erase(s.find_last_not_of(" \t") + 1);
  return s;
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) out.push_back(trim(item));
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

inline double parse_number(const std::string& text, const std::string& what) {
  double v = 0.0;
  std::string t = trim(text);
  const char* first = t.data();
  if (!t.empty() && t.front() == '+') ++first;
  const auto res = std::from_chars(first, t.data() + t.size(), v);
  if (t.empty() || res.ec != std::errc{} || res.ptr != t.data() + t.size() || !std::isfinite(v)) {
    throw UsageError("invalid number '" + text + "' in " + what);
  }
  return v;
}

inline VectorXd parse_vector(const std::string& text, const std::string& what) {
  const auto parts = split(text, ',');
  if (parts.empty()) throw UsageError("empty vector in " + what);
  VectorXd v(static_cast<Eigen::Index>(parts.size()));
  for (std::size_t i = 0; i < parts.size(); ++i) {
    v(static_cast<Eigen::Index>(i)) = parse_number(parts[i], what);
  }
  return v;
}

/// "name=1,0" or just "1,0" (the coefficient text becomes the name).
inline CombinationRow parse_combination(const std::string& text, bool mean) {
  const auto eq = text.find('=');
  CombinationRow r;
  r.mean = mean;
  if (eq == std::string::npos) {
    r.name = trim(text);
    r.x = parse_vector(text, "combination '" + text + "'");
  } else {
    r.name = trim(text.substr(0, eq));
    r.x = parse_vector(text.substr(eq + 1), "combination '" + text + "'");
  }
  return r;
}

inline TauPrior read_tabulated_prior(const std::string& path) {
  const io::CsvTable t = io::read_csv(path);
  const VectorXd tau = t.numeric_column("tau");
  const VectorXd dens = t.numeric_column("density");
  return TauPrior::tabulated(std::vector<double>(tau.data(), tau.data() + tau.size()),
                             std::vector<double>(dens.data(), dens.data() + dens.size()), true);
}

/// family[:param]: halfnormal:s, halfcauchy:s, exponential:rate, uniform,
/// tabulated:path (CSV with tau,density columns).
inline TauPrior parse_tau_prior(const std::string& text) {
  const auto colon = text.find(':');
  const std::string family = trim(text.substr(0, colon));
  const std::string arg = colon == std::string::npos ? "" : trim(text.substr(colon + 1));
  auto param = [&] {
    if (arg.empty()) throw UsageError("tau prior '" + text + "' needs a parameter");
    return parse_number(arg, "tau prior '" + text + "'");
  };
  try {
    if (family == "halfnormal") return TauPrior::half_normal(param());
    if (family == "halfcauchy") return TauPrior::half_cauchy(param());
    if (family == "exponential") return TauPrior::exponential(param());
  } catch (const ValidationError& e) {
    throw UsageError(e.what());
  }
  if (family == "uniform") {
    if (!arg.empty()) throw UsageError("uniform tau prior takes no parameter");
    return TauPrior::uniform();
  }
  if (family == "tabulated") {
    if (arg.empty()) throw UsageError("tabulated tau prior needs a file path");
    return read_tabulated_prior(arg);
  }
  throw UsageError("unknown tau prior '" + text +
                   "' (expected halfnormal:s, halfcauchy:s, exponential:r, uniform or tabulated:path)");
}

/// Regressor matrix from '+'-separated terms evaluated against the study table:
///   intercept          column of ones
///   group_means:COL    one indicator per level of COL (levels sorted)
///   contrasts:COL      indicators for all but the first sorted level of COL
///   COL                numeric column
///   COL@c              numeric column centered at c
inline DesignMatrix build_design(const std::string& spec, const io::CsvTable& table) {
  const auto k = static_cast<Eigen::Index>(table.rows.size());
  std::vector<VectorXd> cols;
  std::vector<std::string> names;
  for (const auto& term : split(spec, '+')) {
    if (term.empty()) throw UsageError("empty term in design '" + spec + "'");
    if (term == "intercept" || term == "1") {
      cols.push_back(VectorXd::Ones(k));
      names.push_back("intercept");
      continue;
    }
    const auto colon = term.find(':');
    if (colon != std::string::npos) {
      const std::string kind = term.substr(0, colon);
      const std::string col = term.substr(colon + 1);
      if (kind != "group_means" && kind != "contrasts") {
        throw UsageError("unknown design term '" + term + "'");
      }
      const auto labels = table.text_column(col);
      std::vector<std::string> levels = labels;
      std::sort(levels.begin(), levels.end());
      levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
      const auto coding =
          kind == "group_means" ? IndicatorCoding::group_means : IndicatorCoding::intercept_offset;
      const DesignMatrix part = build_indicator_design(labels, coding, levels);
      const Eigen::Index first = (coding == IndicatorCoding::intercept_offset) ? 1 : 0;
      if (coding == IndicatorCoding::intercept_offset && part.X.cols() == 1) {
        throw ValidationError(ValidationError::Kind::invalid_value,
                              "column '" + col + "' has a single level; no contrasts to form");
      }
      for (Eigen::Index j = first; j < part.X.cols(); ++j) {
        cols.push_back(part.X.col(j));
        names.push_back(part.column_names[static_cast<std::size_t>(j)]);
      }
      continue;
    }
    const auto at = term.find('@');
    const std::string col = term.substr(0, at);
    VectorXd v = table.numeric_column(col);
    if (at != std::string::npos) {
      v = center_covariable(v, parse_number(term.substr(at + 1), "design term '" + term + "'"));
    }
    cols.push_back(std::move(v));
    names.push_back(col);
  }
  DesignMatrix out;
  out.X.resize(k, static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) out.X.col(static_cast<Eigen::Index>(j)) = cols[j];
  out.column_names = std::move(names);
  return out;
}

/// Numeric CSV whose columns form the regressor matrix; a `study` column is ignored.
inline DesignMatrix read_design_csv(const std::string& path) {
  const io::CsvTable t = io::read_csv(path);
  DesignMatrix out;
  std::vector<std::size_t> use;
  for (std::size_t j = 0; j < t.header.size(); ++j) {
    if (t.header[j] != "study") use.push_back(j);
  }
  out.X.resize(static_cast<Eigen::Index>(t.rows.size()), static_cast<Eigen::Index>(use.size()));
  for (std::size_t c = 0; c < use.size(); ++c) {
    out.column_names.push_back(t.header[use[c]]);
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
      out.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = t.number(i, use[c]);
    }
  }
  return out;
}

inline io::Measure parse_measure(const std::string& text) {
  try {
    return io::parse_measure(text);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

// ---------------------------------------------------------------------------
// Analysis configuration: command-line flags layered over an optional JSON file.

struct AnalysisConfig {
  std::string input;
  std::string measure = "precomputed";
  std::string design;
  std::string design_csv;
  std::string tau_prior = "uniform";
  std::vector<double> beta_prior_mean;
  std::vector<double> beta_prior_sd;
  std::vector<std::vector<double>> beta_prior_cov;
  double delta = 0.01;
  double epsilon = 1e-4;
  double level = 0.95;
  std::uint64_t seed = 1;
  std::vector<CombinationRow> means;
  std::vector<CombinationRow> predictions;
};

inline void apply_config_file(AnalysisConfig& c, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  io::Json j;
  try {
    j = io::Json::parse(in);
    if (j.contains("input")) c.input = j["input"].get<std::string>();
    if (j.contains("measure")) c.measure = j["measure"].get<std::string>();
    if (j.contains("design")) c.design = j["design"].get<std::string>();
    if (j.contains("design_csv")) c.design_csv = j["design_csv"].get<std::string>();
    if (j.contains("tau_prior")) c.tau_prior = j["tau_prior"].get<std::string>();
    if (j.contains("beta_prior")) {
      const auto& b = j["beta_prior"];
      if (b.contains("mean")) c.beta_prior_mean = b["mean"].get<std::vector<double>>();
      if (b.contains("sd")) c.beta_prior_sd = b["sd"].get<std::vector<double>>();
      if (b.contains("cov")) c.beta_prior_cov = b["cov"].get<std::vector<std::vector<double>>>();
    }
    if (j.contains("delta")) c.delta = j["delta"].get<double>();
    if (j.contains("epsilon")) c.epsilon = j["epsilon"].get<double>();
    if (j.contains("level")) c.level = j["level"].get<double>();
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    auto rows = [](const io::Json& obj, bool mean) {
      std::vector<CombinationRow> out;
      for (const auto& [name, x] : obj.items()) {
        const auto v = x.get<std::vector<double>>();
        out.push_back({name, Eigen::Map<const VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())), mean});
      }
      return out;
    };
    if (j.contains("means")) c.means = rows(j["means"], true);
    if (j.contains("predictions")) c.predictions = rows(j["predictions"], false);
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(path + ": " + e.what());
  }
}

inline BetaPrior make_beta_prior(const AnalysisConfig& c) {
  if (c.beta_prior_mean.empty()) {
    if (!c.beta_prior_sd.empty() || !c.beta_prior_cov.empty()) {
      throw UsageError("a normal coefficient prior needs --beta-prior-mean");
    }
    return BetaPrior::uniform();
  }
  const VectorXd mean = Eigen::Map<const VectorXd>(c.beta_prior_mean.data(),
                                                   static_cast<Eigen::Index>(c.beta_prior_mean.size()));
  if (!c.beta_prior_cov.empty()) {
    if (!c.beta_prior_sd.empty()) throw UsageError("give either a prior sd vector or a covariance");
    const auto d = static_cast<Eigen::Index>(c.beta_prior_cov.size());
    MatrixXd cov(d, d);
    for (Eigen::Index i = 0; i < d; ++i) {
      if (static_cast<Eigen::Index>(c.beta_prior_cov[static_cast<std::size_t>(i)].size()) != d) {
        throw UsageError("prior covariance must be square");
      }
      for (Eigen::Index j = 0; j < d; ++j) {
        cov(i, j) = c.beta_prior_cov[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      }
    }
    return BetaPrior::normal(mean, cov);
  }
  if (c.beta_prior_sd.empty()) throw UsageError("a normal coefficient prior needs --beta-prior-sd");
  const VectorXd sd = Eigen::Map<const VectorXd>(c.beta_prior_sd.data(),
                                                 static_cast<Eigen::Index>(c.beta_prior_sd.size()));
  return BetaPrior::normal_sd(mean, sd);
}

inline RegressionProblem make_problem(const AnalysisConfig& c, const io::StudyTable& data) {
  RegressionProblem p;
  p.dataset = data.dataset;
  if (!c.design_csv.empty()) {
    if (!c.design.empty()) throw UsageError("give either --design or --design-csv");
    p.design = read_design_csv(c.design_csv);
  } else if (!c.design.empty()) {
    p.design = build_design(c.design, data.raw);
  }
  p.tau_prior = parse_tau_prior(c.tau_prior);
  p.beta_prior = make_beta_prior(c);
  return p;
}

// ---------------------------------------------------------------------------
// Text output

struct Style {
  bool color = false;
  std::string bold(const std::string& s) const { return color ? "\033[1m" + s + "\033[0m" : s; }
};

inline Style output_style() {
  Style s;
  s.color = std::getenv("METAREG_NO_COLOR") == nullptr && isatty(STDOUT_FILENO) != 0;
  return s;
}

inline std::string fmt(double v, int digits = 7) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

inline std::string pad_left(const std::string& s, std::size_t w) {
  return s.size() >= w ? s : std::string(w - s.size(), ' ') + s;
}

inline std::string pad_right(const std::string& s, std::size_t w) {
  return s.size() >= w ? s : s + std::string(w - s.size(), ' ');
}

/// Columns of summary rows, one line per statistic.
inline void print_summary_columns(std::ostream& out, const std::vector<SummaryRow>& rows,
                                  double level, const Style& st) {
  std::size_t w = 12;
  for (const auto& r : rows) w = std::max(w, r.name.size() + 2);
  const std::string pct = io::svg::fixed(100.0 * level, 0) + "%";
  out << st.bold(pad_right("", 11));
  for (const auto& r : rows) out << st.bold(pad_left(r.name, w));
  out << '\n';
  const std::pair<const char*, double SummaryRow::*> stats[] = {
      {"mode", &SummaryRow::mode}, {"median", &SummaryRow::median}, {"mean", &SummaryRow::mean},
      {"sd", &SummaryRow::sd},     {"lower", &SummaryRow::lower},   {"upper", &SummaryRow::upper}};
  for (const auto& [name, field] : stats) {
    std::string label = name;
    if (label == "lower" || label == "upper") label = pct + " " + label;
    out << pad_right(label, 11);
    for (const auto& r : rows) out << pad_left(fmt(r.*field), w);
    out << '\n';
  }
}

inline void print_fit_summary(std::ostream& out, const FitResult& f,
                              const std::vector<CombinationRow>& extra, double level,
                              const Style& st) {
  const auto& p = f.problem();
  out << st.bold("'metareg' fit") << "\n\n";
  out << p.k() << " estimates:\n";
  for (std::size_t i = 0; i < p.k(); ++i) out << (i ? ", " : "") << p.dataset.labels[i];
  out << "\n\n" << p.d() << " regression parameter" << (p.d() == 1 ? "" : "s") << ":\n";
  for (std::size_t j = 0; j < p.d(); ++j) out << (j ? ", " : "") << p.design.column_names[j];
  out << "\n\ntau prior (" << (p.tau_prior.proper() ? "proper" : "improper")
      << "): " << p.tau_prior.describe() << "\n";
  if (p.beta_prior.is_normal()) {
    out << "beta prior: normal\n  mean:";
    for (Eigen::Index j = 0; j < p.beta_prior.mean().size(); ++j) out << ' ' << fmt(p.beta_prior.mean()(j), 4);
    out << "\n  sd:  ";
    for (Eigen::Index j = 0; j < p.beta_prior.mean().size(); ++j) {
      out << ' ' << fmt(std::sqrt(p.beta_prior.cov()(j, j)), 4);
    }
    out << "\n";
  } else {
    out << "beta prior: (improper) uniform\n";
  }
  out << "\n" << st.bold("MAP estimates:") << "\n";
  const MapEstimates map = map_estimates(f);
  std::size_t w = 14;
  for (const auto& n : p.design.column_names) w = std::max(w, n.size() + 2);
  out << pad_right("", 11) << pad_left("tau", w);
  for (const auto& n : p.design.column_names) out << pad_left(n, w);
  out << '\n' << pad_right("joint", 11) << pad_left(fmt(map.joint_tau), w);
  for (Eigen::Index j = 0; j < map.joint_beta.size(); ++j) out << pad_left(fmt(map.joint_beta(j)), w);
  out << '\n' << pad_right("marginal", 11) << pad_left(fmt(map.marginal_tau), w);
  for (Eigen::Index j = 0; j < map.marginal_beta.size(); ++j) {
    out << pad_left(fmt(map.marginal_beta(j)), w);
  }
  out << "\n\n" << st.bold("marginal posterior summary:") << "\n";
  std::vector<SummaryRow> rows = f.summary().rows;
  if (level != f.summary().level) {
    rows.clear();
    rows.push_back(summarize_tau(f.tau_posterior(), level));
    for (std::size_t j = 0; j < p.d(); ++j) {
      rows.push_back(summarize_mixture(p.design.column_names[j], coefficient_marginal(f, j), level));
    }
  }
  print_summary_columns(out, rows, level, st);
  if (!extra.empty()) {
    std::vector<SummaryRow> means;
    std::vector<SummaryRow> preds;
    for (const auto& r : extra) {
      (r.mean ? means : preds).push_back(summarize_mixture(r.name, linear_combination(f, r.x, r.mean), level));
    }
    if (!means.empty()) {
      out << "\n" << st.bold("linear combinations:") << "\n";
      print_summary_columns(out, means, level, st);
    }
    if (!preds.empty()) {
      out << "\n" << st.bold("predictions:") << "\n";
      print_summary_columns(out, preds, level, st);
    }
  }
  if (auto lml = f.log_marginal_likelihood()) {
    out << "\nlog marginal likelihood: " << fmt(*lml, 6) << "\n";
  }
  out << "\n(quoted intervals are shortest credible intervals.)\n";
}

// ---------------------------------------------------------------------------
// Subcommands

struct Streams {
  std::ostream& out;
  std::ostream& err;
};

inline void write_text_file(const std::string& text, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << text;
  if (!f) throw std::runtime_error("error writing " + path);
}

inline void check_dimensions(const FitResult& f, const std::vector<CombinationRow>& rows) {
  for (const auto& r : rows) {
    if (static_cast<std::size_t>(r.x.size()) != f.problem().d()) {
      throw UsageError("combination '" + r.name + "' has " + std::to_string(r.x.size()) +
                       " entries; the fit has " + std::to_string(f.problem().d()) + " coefficients");
    }
  }
}

inline std::vector<CombinationRow> collect_rows(const std::vector<std::string>& means,
                                                const std::vector<std::string>& preds) {
  std::vector<CombinationRow> rows;
  for (const auto& m : means) rows.push_back(parse_combination(m, true));
  for (const auto& m : preds) rows.push_back(parse_combination(m, false));
  return rows;
}

inline int run_cli(int argc, char** argv, Streams io_streams) {
  std::ostream& out = io_streams.out;
  CLI::App app{"Bayesian random-effects meta-regression", "metareg"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  AnalysisConfig cfg;
  std::string config_path;
  std::string beta_mean_text;
  std::string beta_sd_text;
  std::string output;
  std::vector<std::string> mean_rows;
  std::vector<std::string> pred_rows;

  auto add_analysis_options = [&](CLI::App* sub, bool need_design) {
    sub->add_option("input", cfg.input, "study CSV file");
    sub->add_option("--measure", cfg.measure, "effect measure: or, plo, rom or precomputed");
    sub->add_option("--config", config_path, "JSON analysis configuration");
    sub->add_option("--tau-prior", cfg.tau_prior,
                    "heterogeneity prior: halfnormal:s, halfcauchy:s, exponential:r, uniform, tabulated:path");
    if (need_design) {
      sub->add_option("--design", cfg.design,
                      "regressor terms, e.g. intercept+year@2000 or group_means:IL2RA");
      sub->add_option("--design-csv", cfg.design_csv, "CSV file holding the regressor matrix");
      sub->add_option("--beta-prior-mean", beta_mean_text, "normal coefficient prior mean, e.g. 0,0");
      sub->add_option("--beta-prior-sd", beta_sd_text, "normal coefficient prior sd, e.g. 10,1");
    }
    sub->add_option("--delta", cfg.delta, "grid divergence bound");
    sub->add_option("--epsilon", cfg.epsilon, "grid tail probability");
    sub->add_option("--level", cfg.level, "credible level");
  };

  auto* escalc = app.add_subcommand("escalc", "derive effect estimates (yi, vi) from a study CSV");
  escalc->add_option("input", cfg.input, "study CSV file")->required();
  escalc->add_option("--measure", cfg.measure, "effect measure: or, plo, rom or precomputed")->required();
  escalc->add_option("-o,--output", output, "output CSV (default: standard output)");

  auto* fit_cmd = app.add_subcommand("fit", "fit a meta-regression and print its summary");
  add_analysis_options(fit_cmd, true);
  fit_cmd->add_option("-o,--output", output, "write the fit as JSON");
  fit_cmd->add_option("--mean", mean_rows, "extra linear combination name=x1,x2,...");
  fit_cmd->add_option("--predict", pred_rows, "prediction row name=x1,x2,...");

  std::string fit_path;
  auto* summary_cmd = app.add_subcommand("summary", "summarize a stored fit");
  summary_cmd->add_option("fit", fit_path, "fit JSON")->required();
  summary_cmd->add_option("--mean", mean_rows, "linear combination name=x1,x2,...");
  summary_cmd->add_option("--predict", pred_rows, "prediction row name=x1,x2,...");
  summary_cmd->add_option("--level", cfg.level, "credible level");

  std::string xlabel = "effect";
  auto* forest_cmd = app.add_subcommand("forest", "render a forest plot (SVG)");
  forest_cmd->add_option("fit", fit_path, "fit JSON")->required();
  forest_cmd->add_option("-o,--output", output, "SVG file")->required();
  forest_cmd->add_option("--mean", mean_rows, "combination row name=x1,x2,...");
  forest_cmd->add_option("--predict", pred_rows, "prediction row name=x1,x2,...");
  forest_cmd->add_option("--xlabel", xlabel, "axis label");
  forest_cmd->add_option("--level", cfg.level, "credible level");

  std::string covariable;
  double from = 0.0;
  double to = 0.0;
  int points = 50;
  std::string base_text;
  bool bubble = false;
  std::string groups_csv;
  std::string group_column;
  std::string ylabel = "effect";
  auto* trend_cmd = app.add_subcommand("trend", "render a trend or bubble plot (SVG)");
  trend_cmd->add_option("fit", fit_path, "fit JSON")->required();
  trend_cmd->add_option("-o,--output", output, "SVG file")->required();
  trend_cmd->add_option("--covariable", covariable, "design column on the horizontal axis")->required();
  trend_cmd->add_option("--from", from, "first covariable value")->required();
  trend_cmd->add_option("--to", to, "last covariable value")->required();
  trend_cmd->add_option("--points", points, "number of evaluation points");
  trend_cmd->add_option("--base", base_text,
                        "values of the other regressors (default: 1 for intercept, 0 otherwise)");
  trend_cmd->add_flag("--bubble", bubble, "point area proportional to precision");
  trend_cmd->add_option("--groups-csv", groups_csv, "study CSV holding group labels");
  trend_cmd->add_option("--group-column", group_column, "column of --groups-csv used for colors");
  trend_cmd->add_option("--xlabel", xlabel, "horizontal axis label");
  trend_cmd->add_option("--ylabel", ylabel, "vertical axis label");
  trend_cmd->add_option("--level", cfg.level, "credible level");

  std::string x_text;
  bool prediction = false;
  std::vector<double> quantiles;
  auto* predict_cmd = app.add_subcommand("predict", "posterior of a linear combination or prediction");
  predict_cmd->add_option("fit", fit_path, "fit JSON")->required();
  predict_cmd->add_option("--x", x_text, "coefficient vector, e.g. -1,1")->required()->allow_extra_args(false);
  predict_cmd->add_flag("--prediction", prediction, "predict a new study's mean (adds tau^2)");
  predict_cmd->add_option("--level", cfg.level, "credible level");
  predict_cmd->add_option("--quantiles", quantiles, "also print these quantiles")->delimiter(',');

  std::size_t draws = 1000;
  auto* sample_cmd = app.add_subcommand("sample", "draw posterior samples of (tau, beta) as CSV");
  sample_cmd->add_option("fit", fit_path, "fit JSON")->required();
  sample_cmd->add_option("-n,--draws", draws, "number of draws");
  sample_cmd->add_option("--seed", cfg.seed, "random seed");
  sample_cmd->add_option("-o,--output", output, "output CSV (default: standard output)");

  std::string variables_text;
  double intercept_sd = 10.0;
  double effect_sd = 2.82;
  std::string model_prior_text = "uniform";
  auto* select_cmd = app.add_subcommand("select", "posterior probabilities of covariable subsets");
  select_cmd->add_option("input", cfg.input, "study CSV file")->required();
  select_cmd->add_option("--measure", cfg.measure, "effect measure: or, plo, rom or precomputed");
  select_cmd->add_option("--variables", variables_text, "candidate numeric columns, e.g. FUN,FP,FN")->required();
  select_cmd->add_option("--tau-prior", cfg.tau_prior, "heterogeneity prior (proper)");
  select_cmd->add_option("--intercept-sd", intercept_sd, "prior sd of the intercept");
  select_cmd->add_option("--effect-sd", effect_sd, "prior sd of each covariable effect");
  select_cmd->add_option("--model-prior", model_prior_text, "uniform or bernoulli:pi");
  select_cmd->add_option("-o,--output", output, "write the model table as JSON");

  const std::string select_default_tau = "halfnormal:0.5";

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, io_streams.out, io_streams.err) == 0 ? 0 : 1;
  }

  const Style st = output_style();

  if (escalc->parsed()) {
    const io::StudyTable data = io::read_study_csv(cfg.input, parse_measure(cfg.measure));
    if (output.empty()) {
      io::write_escalc_csv(out, data);
    } else {
      std::ostringstream s;
      io::write_escalc_csv(s, data);
      write_text_file(s.str(), output);
    }
    return 0;
  }

  if (fit_cmd->parsed()) {
    // Flags given explicitly override the configuration file.
    AnalysisConfig merged;
    if (!config_path.empty()) apply_config_file(merged, config_path);
    auto given = [&](const char* name) { return fit_cmd->count(name) > 0; };
    if (given("input")) merged.input = cfg.input;
    if (given("--measure")) merged.measure = cfg.measure;
    if (given("--design")) merged.design = cfg.design;
    if (given("--design-csv")) merged.design_csv = cfg.design_csv;
    if (given("--tau-prior")) merged.tau_prior = cfg.tau_prior;
    if (given("--delta")) merged.delta = cfg.delta;
    if (given("--epsilon")) merged.epsilon = cfg.epsilon;
    if (given("--level")) merged.level = cfg.level;
    if (!beta_mean_text.empty()) {
      const VectorXd v = parse_vector(beta_mean_text, "--beta-prior-mean");
      merged.beta_prior_mean.assign(v.data(), v.data() + v.size());
      merged.beta_prior_cov.clear();
    }
    if (!beta_sd_text.empty()) {
      const VectorXd v = parse_vector(beta_sd_text, "--beta-prior-sd");
      merged.beta_prior_sd.assign(v.data(), v.data() + v.size());
      merged.beta_prior_cov.clear();
    }
    if (merged.input.empty()) throw UsageError("fit: no input CSV given");
    auto extra = collect_rows(mean_rows, pred_rows);
    extra.insert(extra.begin(), merged.means.begin(), merged.means.end());
    extra.insert(extra.end(), merged.predictions.begin(), merged.predictions.end());

    const io::StudyTable data = io::read_study_csv(merged.input, parse_measure(merged.measure));
    const FitResult f = fit(make_problem(merged, data), GridOptions{merged.delta, merged.epsilon});
    check_dimensions(f, extra);
    if (!output.empty()) io::write_fit_json(f, output);
    print_fit_summary(out, f, extra, merged.level, st);
    return 0;
  }

  if (summary_cmd->parsed()) {
    const FitResult f = io::load_fit_json(fit_path);
    const auto extra = collect_rows(mean_rows, pred_rows);
    check_dimensions(f, extra);
    print_fit_summary(out, f, extra, cfg.level, st);
    return 0;
  }

  if (forest_cmd->parsed()) {
    const FitResult f = io::load_fit_json(fit_path);
    io::ForestSpec spec;
    for (const auto& m : mean_rows) spec.means.push_back(parse_combination(m, true));
    for (const auto& m : pred_rows) spec.predictions.push_back(parse_combination(m, false));
    check_dimensions(f, spec.means);
    check_dimensions(f, spec.predictions);
    spec.xlabel = xlabel;
    spec.level = cfg.level;
    io::write_forest_svg(f, spec, output);
    return 0;
  }

  if (trend_cmd->parsed()) {
    const FitResult f = io::load_fit_json(fit_path);
    const auto& names = f.problem().design.column_names;
    const auto it = std::find(names.begin(), names.end(), covariable);
    if (it == names.end()) throw UsageError("no design column named '" + covariable + "'");
    if (points < 1) throw UsageError("--points must be positive");
    io::TrendSpec spec;
    spec.covariable = static_cast<std::size_t>(it - names.begin());
    const auto d = static_cast<Eigen::Index>(names.size());
    VectorXd base = VectorXd::Zero(d);
    if (!base_text.empty()) {
      base = parse_vector(base_text, "--base");
      if (base.size() != d) throw UsageError("--base needs one value per design column");
    } else {
      for (Eigen::Index j = 0; j < d; ++j) {
        if ((f.problem().design.X.col(j).array() == 1.0).all()) base(j) = 1.0;
      }
    }
    spec.x_rows.resize(points, d);
    for (int i = 0; i < points; ++i) {
      spec.x_rows.row(i) = base.transpose();
      const double t = points == 1 ? 0.0 : static_cast<double>(i) / (points - 1);
      spec.x_rows(i, static_cast<Eigen::Index>(spec.covariable)) = from + t * (to - from);
    }
    spec.bubble = bubble;
    if (!groups_csv.empty() || !group_column.empty()) {
      if (groups_csv.empty() || group_column.empty()) {
        throw UsageError("--groups-csv and --group-column go together");
      }
      spec.groups = io::read_csv(groups_csv).text_column(group_column);
    }
    spec.xlabel = xlabel == "effect" ? "" : xlabel;
    spec.ylabel = ylabel;
    spec.level = cfg.level;
    io::write_trend_svg(f, spec, output);
    return 0;
  }

  if (predict_cmd->parsed()) {
    const FitResult f = io::load_fit_json(fit_path);
    const VectorXd x = parse_vector(x_text, "--x");
    if (static_cast<std::size_t>(x.size()) != f.problem().d()) {
      throw UsageError("--x needs " + std::to_string(f.problem().d()) + " entries");
    }
    const ScalarMixture m = linear_combination(f, x, !prediction);
    const Interval ci = credible_interval(m, cfg.level);
    out << fmt(m.quantile(0.5), 3) << " [" << fmt(ci.lower, 3) << ", " << fmt(ci.upper, 3) << "]\n";
    for (double q : quantiles) {
      if (!(q > 0.0 && q < 1.0)) throw UsageError("quantile probabilities must lie in (0, 1)");
      out << "q" << io::format_double(q) << " " << fmt(m.quantile(q), 6) << "\n";
    }
    return 0;
  }

  if (sample_cmd->parsed()) {
    const FitResult f = io::load_fit_json(fit_path);
    if (draws == 0) throw UsageError("--draws must be positive");
    const auto samples = sample_posterior(f, draws, cfg.seed);
    std::ostringstream s;
    s << "tau";
    for (const auto& n : f.problem().design.column_names) s << ',' << n;
    s << '\n';
    for (const auto& d : samples) {
      s << io::format_double(d.tau);
      for (Eigen::Index j = 0; j < d.beta.size(); ++j) s << ',' << io::format_double(d.beta(j));
      s << '\n';
    }
    if (output.empty()) out << s.str();
    else write_text_file(s.str(), output);
    return 0;
  }

  if (select_cmd->parsed()) {
    const std::string tau_text = select_cmd->count("--tau-prior") ? cfg.tau_prior : select_default_tau;
    const io::StudyTable data = io::read_study_csv(cfg.input, parse_measure(cfg.measure));
    const auto vars = split(variables_text, ',');
    ModelSpace space = enumerate_models(vars);
    if (model_prior_text == "uniform") {
      model_prior(space, ModelPrior::uniform());
    } else if (model_prior_text.rfind("bernoulli:", 0) == 0) {
      try {
        model_prior(space, ModelPrior::bernoulli(parse_number(model_prior_text.substr(10), "--model-prior")));
      } catch (const ValidationError& e) {
        throw UsageError(e.what());
      }
    } else {
      throw UsageError("--model-prior must be uniform or bernoulli:pi");
    }
    MatrixXd cov(static_cast<Eigen::Index>(data.dataset.size()), static_cast<Eigen::Index>(vars.size()));
    for (std::size_t j = 0; j < vars.size(); ++j) {
      cov.col(static_cast<Eigen::Index>(j)) = data.raw.numeric_column(vars[j]);
    }
    SelectionPriors priors;
    priors.intercept_sd = intercept_sd;
    priors.effect_sd = effect_sd;
    priors.tau_prior = parse_tau_prior(tau_text);
    if (!priors.tau_prior.proper()) throw UsageError("model selection needs a proper tau prior");
    score_models(space, data.dataset, cov, priors);
    posterior_model_probs(space);
    const auto order = rank_models(space);
    const auto inc = inclusion_probabilities(space);
    const auto mpm = median_probability_model(space);

    io::Json table;
    table["format"] = "metareg-models";
    table["version"] = kVersion;
    table["variables"] = vars;
    table["priors"] = {{"intercept_sd", intercept_sd},
                       {"effect_sd", effect_sd},
                       {"tau_prior", tau_text},
                       {"model_prior", model_prior_text}};
    io::Json models = io::Json::array();
    for (std::size_t r = 0; r < order.size(); ++r) {
      const std::size_t m = order[r];
      io::Json inc_flags = io::Json::object();
      for (std::size_t j = 0; j < vars.size(); ++j) inc_flags[vars[j]] = space.models[m][j];
      models.push_back({{"rank", r + 1},
                        {"included", std::move(inc_flags)},
                        {"prior_probability", space.prior_probs[m]},
                        {"log_marginal_likelihood", (*space.log_mls)[m]},
                        {"posterior_probability", (*space.posterior_probs)[m]}});
    }
    table["models"] = std::move(models);
    io::Json inc_json = io::Json::object();
    for (std::size_t j = 0; j < vars.size(); ++j) inc_json[vars[j]] = inc[j];
    table["inclusion_probabilities"] = std::move(inc_json);
    io::Json mpm_json = io::Json::array();
    for (std::size_t j = 0; j < vars.size(); ++j) {
      if (mpm[j]) mpm_json.push_back(vars[j]);
    }
    table["median_probability_model"] = std::move(mpm_json);
    if (!output.empty()) write_text_file(table.dump(2) + "\n", output);

    std::size_t w = 8;
    for (const auto& v : vars) w = std::max(w, v.size() + 2);
    out << st.bold(pad_left("model", 6));
    for (const auto& v : vars) out << st.bold(pad_left(v, w));
    out << st.bold(pad_left("probability", 14)) << '\n';
    for (std::size_t r = 0; r < order.size(); ++r) {
      out << pad_left(std::to_string(r + 1), 6);
      for (std::size_t j = 0; j < vars.size(); ++j) {
        out << pad_left(space.models[order[r]][j] ? "x" : ".", w);
      }
      out << pad_left(fmt((*space.posterior_probs)[order[r]], 4), 14) << '\n';
    }
    out << pad_left("incl.", 6);
    for (double v : inc) out << pad_left(fmt(v, 4), w);
    out << "\n\nmedian probability model: {";
    bool first = true;
    for (std::size_t j = 0; j < vars.size(); ++j) {
      if (!mpm[j]) continue;
      out << (first ? "" : ", ") << vars[j];
      first = false;
    }
    out << "}\n";
    return 0;
  }
  return 1;
}

/// Entry point used by the executable; maps exceptions to exit codes.
inline int cli_main(int argc, char** argv, std::ostream& out = std::cout,
                    std::ostream& err = std::cerr) {
  try {
    return run_cli(argc, argv, Streams{out, err});
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\nRun with --help for usage.\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace metareg::cli
