#include <cmath>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "metareg/inference.hpp"
#include "metareg/io/csv.hpp"
#include "metareg/io/fit_json.hpp"
#include "metareg/io/svg.hpp"

using namespace metareg;

namespace {

std::string temp_path(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "metareg_test_io";
  std::filesystem::create_directories(dir);
  return (dir / name).string();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

io::CsvTable parse(const std::string& text, const std::string& source = "mem.csv") {
  std::istringstream in(text);
  return io::parse_csv(in, source);
}

double attr(const std::string& tag, const std::string& name) {
  const std::regex re(name + "=\"([^\"]+)\"");
  std::smatch m;
  if (!std::regex_search(tag, m, re)) throw std::runtime_error("no attribute " + name);
  return std::stod(m[1]);
}

std::vector<CombinationRow> crins_means() {
  return {{"basiliximab", (VectorXd(2) << 1, 0).finished(), true},
          {"daclizumab", (VectorXd(2) << 0, 1).finished(), true},
          {"difference", (VectorXd(2) << -1, 1).finished(), true}};
}

}  // namespace

TEST(Csv, CrinsPrecomputedValues) {
  const auto t = io::read_study_csv(fixtures::data_path("crins.csv"), io::Measure::precomputed);
  const double y[] = {-2.31, -0.46, -2.30, -1.76, -1.26, -2.42};
  const double s[] = {0.60, 0.56, 0.88, 0.46, 0.64, 1.53};
  ASSERT_EQ(t.dataset.size(), 6u);
  for (Eigen::Index i = 0; i < 6; ++i) {
    EXPECT_DOUBLE_EQ(t.dataset.y(i), y[i]);
    EXPECT_DOUBLE_EQ(t.dataset.sigma(i), s[i]);
  }
  EXPECT_EQ(t.dataset.labels[0], "Heffron (2003)");
  EXPECT_EQ(t.raw.text_column("IL2RA")[1], "basiliximab");
}

TEST(Csv, VarianceAndStandardErrorColumns) {
  const auto a = io::study_table_from_csv(parse("yi,vi\n0.5,0.25\n1,4\n"), io::Measure::precomputed);
  const auto b = io::study_table_from_csv(parse("yi,sei\n0.5,0.5\n1,2\n"), io::Measure::precomputed);
  EXPECT_EQ(a.dataset.sigma, b.dataset.sigma);
  EXPECT_DOUBLE_EQ(a.dataset.sigma(1), 2.0);
}

TEST(Csv, QuotedFields) {
  const auto t = parse("study,yi,sigma\n\"Smith, J (2001)\",0.1,0.2\n\"say \"\"hi\"\"\",0.3,0.4\n");
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.rows[0][0], "Smith, J (2001)");
  EXPECT_EQ(t.rows[1][0], "say \"hi\"");
}

TEST(Csv, ProportionFromPercent) {
  const auto t = io::read_study_csv(fixtures::data_path("nicholas_head.csv"), io::Measure::logit_proportion);
  // 46% of 50 patients = 23 events
  EXPECT_NEAR(t.dataset.y(0), std::log(23.0 / 27.0), 1e-12);
  EXPECT_NEAR(t.dataset.sigma(0) * t.dataset.sigma(0), 1.0 / 23 + 1.0 / 27, 1e-12);
}

TEST(Csv, EmptyInputRejected) {
  EXPECT_THROW(parse(""), ValidationError);
  try {
    parse("yi,sigma\n");
    FAIL() << "header-only file accepted";
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.kind(), ValidationError::Kind::empty_input);
  }
}

TEST(Csv, ErrorsNameFileLineAndColumn) {
  try {
    io::study_table_from_csv(parse("study,yi,sigma\nA,0.1,0.2\nB,abc,0.2\n", "x.csv"),
                             io::Measure::precomputed);
    FAIL() << "bad number accepted";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("x.csv:3: column 'yi'"), std::string::npos) << e.what();
  }
  try {
    io::study_table_from_csv(parse("study,yi,sigma\nA,0.1,0\n", "z.csv"), io::Measure::precomputed);
    FAIL() << "zero sigma accepted";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("z.csv:2"), std::string::npos) << e.what();
  }
  EXPECT_THROW(io::study_table_from_csv(parse("yi\n0.1\n"), io::Measure::precomputed), ValidationError);
  EXPECT_THROW(io::parse_measure("hazard"), std::exception);
}

TEST(Csv, EscalcRoundTripGivesSameFit) {
  const auto counts = io::read_study_csv(fixtures::data_path("crins_counts.csv"), io::Measure::log_odds_ratio);
  const std::string path = temp_path("escalc.csv");
  {
    std::ofstream out(path);
    io::write_escalc_csv(out, counts);
  }
  const auto back = io::read_study_csv(path, io::Measure::precomputed);
  EXPECT_EQ(back.dataset.labels, counts.dataset.labels);
  EXPECT_LT((back.dataset.y - counts.dataset.y).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LT((back.dataset.sigma - counts.dataset.sigma).cwiseAbs().maxCoeff(), 1e-15);

  auto p = fixtures::crins(true);
  const auto a = fit(p);
  p.dataset = back.dataset;
  const auto b = fit(p);
  for (const auto& r : a.summary().rows) {
    EXPECT_NEAR(b.summary().at(r.name).median, r.median, 1e-12) << r.name;
    EXPECT_NEAR(b.summary().at(r.name).upper, r.upper, 1e-12) << r.name;
  }
}

TEST(FitJson, RoundTripPreservesSummaries) {
  const auto f = fit(fixtures::crins());
  const std::string path = temp_path("fit.json");
  io::write_fit_json(f, path);
  const auto g = io::load_fit_json(path);
  ASSERT_EQ(g.grid().size(), f.grid().size());
  double total = 0.0;
  for (const auto& n : g.grid().nodes) total += n.weight;
  EXPECT_NEAR(total, 1.0, 1e-12);
  ASSERT_EQ(g.summary().rows.size(), f.summary().rows.size());
  for (std::size_t i = 0; i < f.summary().rows.size(); ++i) {
    const auto& a = f.summary().rows[i];
    const auto& b = g.summary().rows[i];
    EXPECT_EQ(a.name, b.name);
    EXPECT_EQ(a.median, b.median);
    EXPECT_EQ(a.lower, b.lower);
    EXPECT_EQ(a.upper, b.upper);
  }
  // Derived quantities are recomputed from the stored grid.
  const VectorXd x = (VectorXd(2) << -1, 1).finished();
  EXPECT_NEAR(linear_combination(g, x).quantile(0.5), linear_combination(f, x).quantile(0.5), 1e-12);
  EXPECT_NEAR(g.tau_posterior().quantile(0.9), f.tau_posterior().quantile(0.9), 1e-9);
  // writing the restored fit again is byte-identical
  const std::string again = temp_path("fit2.json");
  io::write_fit_json(g, again);
  EXPECT_EQ(slurp(path), slurp(again));
}

TEST(FitJson, MarginalLikelihoodNullIffImproper) {
  const auto improper = io::fit_to_json(fit(fixtures::crins()));
  EXPECT_TRUE(improper.at("log_marginal_likelihood").is_null());
  auto p = fixtures::crins();
  p.beta_prior = BetaPrior::normal(VectorXd::Zero(2), MatrixXd::Identity(2, 2) * 4.0);
  const auto f = fit(p);
  const auto proper = io::fit_to_json(f);
  ASSERT_TRUE(proper.at("log_marginal_likelihood").is_number());
  EXPECT_EQ(proper.at("log_marginal_likelihood").get<double>(), *f.log_marginal_likelihood());
  EXPECT_EQ(*io::fit_from_json(proper).log_marginal_likelihood(), *f.log_marginal_likelihood());
}

TEST(FitJson, RejectsForeignDocuments) {
  EXPECT_THROW(io::fit_from_json(io::Json{{"format", "other"}}), ValidationError);
  auto j = io::fit_to_json(fit(fixtures::crins()));
  j["grid"] = io::Json::array();
  EXPECT_THROW(io::fit_from_json(j), ValidationError);
}

TEST(Forest, CombinationRowsAndFooter) {
  const auto f = fit(fixtures::crins());
  io::ForestSpec spec;
  spec.means = crins_means();
  const auto rows = io::forest_rows(f, spec);
  ASSERT_EQ(rows.size(), 6u + 3u + 1u);
  for (std::size_t i = 0; i < 6; ++i) EXPECT_EQ(rows[i].kind, io::ForestRowKind::study);
  for (std::size_t i = 6; i < 9; ++i) EXPECT_EQ(rows[i].kind, io::ForestRowKind::combination);
  EXPECT_EQ(rows[9].kind, io::ForestRowKind::heterogeneity);
  EXPECT_EQ(rows[8].label, "difference");
  EXPECT_NEAR(rows[9].estimate, f.summary().at("tau").median, 1e-12);
  for (const auto& r : rows) {
    EXPECT_LE(r.lower, r.estimate);
    EXPECT_LE(r.estimate, r.upper);
  }
}

TEST(Forest, DefaultsToCoefficientRows) {
  const auto f = fit(fixtures::crins());
  const auto rows = io::forest_rows(f, {});
  ASSERT_EQ(rows.size(), 6u + 2u + 1u);
  EXPECT_EQ(rows[6].kind, io::ForestRowKind::coefficient);
  EXPECT_EQ(rows[7].label, "daclizumab");
  EXPECT_NEAR(rows[7].estimate, f.summary().at("daclizumab").median, 1e-12);

  io::ForestSpec spec;
  spec.predictions = {{"new basiliximab trial", (VectorXd(2) << 1, 0).finished(), false}};
  const auto with_pred = io::forest_rows(f, spec);
  ASSERT_EQ(with_pred.size(), 6u + 2u + 1u + 1u);
  EXPECT_EQ(with_pred[8].kind, io::ForestRowKind::prediction);
  // a prediction interval is wider than the matching mean interval
  EXPECT_GT(with_pred[8].upper - with_pred[8].lower, with_pred[6].upper - with_pred[6].lower);
}

TEST(Forest, RenderedMediansMatchSummaries) {
  const auto f = fit(fixtures::crins());
  io::ForestSpec spec;
  spec.means = crins_means();
  const std::string svg = io::render_forest_svg(f, spec);

  std::smatch m;
  ASSERT_TRUE(std::regex_search(svg, m, std::regex("<g class=\"plot-area\"[^>]*>")));
  const std::string area = m[0];
  const double xmin = attr(area, "data-xmin");
  const double xmax = attr(area, "data-xmax");
  const double left = attr(area, "data-left");
  const double right = attr(area, "data-right");

  const auto expected = summarize(f, crins_means());
  std::size_t checked = 0;
  for (const auto& row : expected) {
    const std::regex group("<g class=\"row combination\" data-label=\"" + row.name +
                           "\">[\\s\\S]*?<line class=\"median\"[^>]*>");
    ASSERT_TRUE(std::regex_search(svg, m, group)) << row.name;
    const std::string text = m[0];
    const std::size_t at = text.rfind("<line class=\"median\"");
    const double px = attr(text.substr(at), "x1");
    const double want = left + (row.median - xmin) / (xmax - xmin) * (right - left);
    EXPECT_NEAR(px, want, 0.5) << row.name;
    ++checked;
  }
  EXPECT_EQ(checked, 3u);
  EXPECT_NE(svg.find("Heterogeneity (tau)"), std::string::npos);
  EXPECT_EQ(svg, io::render_forest_svg(f, spec));
}

TEST(Forest, LabelsAreEscaped) {
  auto p = fixtures::crins_intercept_only();
  p.dataset.labels[0] = "A & <B>";
  const std::string svg = io::render_forest_svg(fit(p));
  EXPECT_NE(svg.find("A &amp; &lt;B&gt;"), std::string::npos);
  EXPECT_EQ(svg.find("A & <B>"), std::string::npos);
}

namespace {

FitResult nicholas_like_fit() {
  // logit proportions regressed on year centred at 1991
  const auto t = io::read_study_csv(fixtures::data_path("nicholas_head.csv"), io::Measure::logit_proportion);
  RegressionProblem p;
  p.dataset = t.dataset;
  MatrixXd X(static_cast<Eigen::Index>(t.dataset.size()), 2);
  X.col(0).setOnes();
  X.col(1) = t.raw.numeric_column("year").array() - 1991.0;
  p.design = DesignMatrix{X, {"intercept", "year"}};
  p.tau_prior = TauPrior::half_normal(1.0);
  return fit(p);
}

}  // namespace

TEST(Trend, PredictionBandContainsMeanBand) {
  const auto f = nicholas_like_fit();
  io::TrendSpec spec;
  spec.covariable = 1;
  spec.x_rows.resize(5, 2);
  for (int i = 0; i < 5; ++i) spec.x_rows.row(i) << 1.0, -2.0 + 1.0 * i;
  const auto b = io::trend_bands(f, spec);
  ASSERT_EQ(b.mean.x.size(), 5u);
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_DOUBLE_EQ(b.mean.x[i], -2.0 + 1.0 * i);
    EXPECT_LE(b.prediction.lower[i], b.mean.lower[i]);
    EXPECT_GE(b.prediction.upper[i], b.mean.upper[i]);
    EXPECT_LE(b.mean.lower[i], b.mean.median[i]);
    EXPECT_LE(b.mean.median[i], b.mean.upper[i]);
  }
  const std::string svg = io::render_trend_svg(f, spec);
  EXPECT_EQ(svg, io::render_trend_svg(f, spec));
}

TEST(Trend, SinglePointIsDegenerateBand) {
  const auto f = nicholas_like_fit();
  io::TrendSpec spec;
  spec.x_rows = (MatrixXd(1, 2) << 1.0, 0.0).finished();
  const auto b = io::trend_bands(f, spec);
  ASSERT_EQ(b.mean.x.size(), 1u);
  EXPECT_NEAR(b.mean.median[0], f.summary().at("intercept").median, 1e-9);
  EXPECT_NO_THROW(io::render_trend_svg(f, spec));
}

TEST(Trend, ConstantCovariableRejected) {
  const auto f = fit(fixtures::crins());
  io::TrendSpec spec;
  spec.covariable = 0;
  spec.x_rows = (MatrixXd(2, 2) << 1, 0, 0, 1).finished();
  // an indicator column varies, so this one is accepted
  EXPECT_NO_THROW(io::check_trend_spec(f, spec));
  const auto g = fit(fixtures::crins_intercept_only());
  io::TrendSpec flat;
  flat.covariable = 0;
  flat.x_rows = MatrixXd::Ones(2, 1);
  EXPECT_THROW(io::check_trend_spec(g, flat), ValidationError);
  flat.covariable = 3;
  EXPECT_THROW(io::check_trend_spec(g, flat), ValidationError);
}

TEST(Trend, GroupCountMustMatchStudies) {
  const auto f = nicholas_like_fit();
  io::TrendSpec spec;
  spec.x_rows = (MatrixXd(1, 2) << 1.0, 0.0).finished();
  spec.groups = {"a"};
  EXPECT_THROW(io::check_trend_spec(f, spec), ValidationError);
}
