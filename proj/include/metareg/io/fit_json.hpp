#pragma once

// Fit serialization.  Numbers are written in shortest round-trip form, so a
// reloaded fit reproduces every stored value exactly.

#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "metareg/errors.hpp"
#include "metareg/inference.hpp"
#include "metareg/model_spec.hpp"
#include "metareg/version.hpp"

namespace metareg::io {

using Json = nlohmann::ordered_json;

namespace detail {

inline Json vector_json(const VectorXd& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

inline VectorXd vector_from(const Json& a) {
  VectorXd v(static_cast<Eigen::Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) v(static_cast<Eigen::Index>(i)) = a[i].get<double>();
  return v;
}

inline Json matrix_rows_json(const MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(vector_json(m.row(i).transpose()));
  return rows;
}

inline MatrixXd matrix_from_rows(const Json& rows, Eigen::Index cols) {
  MatrixXd m(static_cast<Eigen::Index>(rows.size()), cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (static_cast<Eigen::Index>(rows[i].size()) != cols) {
      throw ValidationError(ValidationError::Kind::dimension_mismatch, "ragged matrix in fit file");
    }
    for (Eigen::Index j = 0; j < cols; ++j) {
      m(static_cast<Eigen::Index>(i), j) = rows[i][static_cast<std::size_t>(j)].get<double>();
    }
  }
  return m;
}

// Row-major lower triangle, diagonal included.
inline Json lower_triangle_json(const MatrixXd& m) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) a.push_back(m(i, j));
  }
  return a;
}

inline MatrixXd from_lower_triangle(const Json& a, Eigen::Index d) {
  if (static_cast<Eigen::Index>(a.size()) != d * (d + 1) / 2) {
    throw ValidationError(ValidationError::Kind::dimension_mismatch,
                          "covariance triangle has the wrong length");
  }
  MatrixXd m(d, d);
  std::size_t k = 0;
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      m(i, j) = a[k++].get<double>();
      m(j, i) = m(i, j);
    }
  }
  return m;
}

inline Json tau_prior_json(const TauPrior& p) {
  Json j;
  std::visit(
      [&j](const auto& f) {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, tau_family::HalfNormal>) {
          j = {{"family", "halfnormal"}, {"scale", f.scale}};
        } else if constexpr (std::is_same_v<T, tau_family::HalfCauchy>) {
          j = {{"family", "halfcauchy"}, {"scale", f.scale}};
        } else if constexpr (std::is_same_v<T, tau_family::Exponential>) {
          j = {{"family", "exponential"}, {"rate", f.rate}};
        } else if constexpr (std::is_same_v<T, tau_family::ImproperUniform>) {
          j = {{"family", "uniform"}};
        } else {
          j = {{"family", "tabulated"}, {"tau", f.tau}, {"density", f.density}};
        }
      },
      p.family());
  j["proper"] = p.proper();
  return j;
}

inline TauPrior tau_prior_from(const Json& j) {
  const auto family = j.at("family").get<std::string>();
  if (family == "halfnormal") return TauPrior::half_normal(j.at("scale").get<double>());
  if (family == "halfcauchy") return TauPrior::half_cauchy(j.at("scale").get<double>());
  if (family == "exponential") return TauPrior::exponential(j.at("rate").get<double>());
  if (family == "uniform") return TauPrior::uniform();
  if (family == "tabulated") {
    return TauPrior::tabulated(j.at("tau").get<std::vector<double>>(),
                               j.at("density").get<std::vector<double>>(),
                               j.value("proper", true));
  }
  throw ValidationError(ValidationError::Kind::invalid_value, "unknown tau prior family " + family);
}

inline Json beta_prior_json(const BetaPrior& p) {
  if (!p.is_normal()) return {{"family", "uniform"}};
  return {{"family", "normal"}, {"mean", vector_json(p.mean())}, {"cov", matrix_rows_json(p.cov())}};
}

inline BetaPrior beta_prior_from(const Json& j) {
  const auto family = j.at("family").get<std::string>();
  if (family == "uniform") return BetaPrior::uniform();
  if (family == "normal") {
    VectorXd mean = vector_from(j.at("mean"));
    return BetaPrior::normal(mean, matrix_from_rows(j.at("cov"), mean.size()));
  }
  throw ValidationError(ValidationError::Kind::invalid_value, "unknown beta prior family " + family);
}

inline Json summary_row_json(const SummaryRow& r) {
  return {{"name", r.name}, {"mode", r.mode},   {"median", r.median}, {"mean", r.mean},
          {"sd", r.sd},     {"lower", r.lower}, {"upper", r.upper}};
}

inline SummaryRow summary_row_from(const Json& j) {
  return {j.at("name").get<std::string>(), j.at("mode").get<double>(),
          j.at("median").get<double>(),    j.at("mean").get<double>(),
          j.at("sd").get<double>(),        j.at("lower").get<double>(),
          j.at("upper").get<double>()};
}

}  // namespace detail

inline Json problem_json(const RegressionProblem& p) {
  return {{"labels", p.dataset.labels},
          {"y", detail::vector_json(p.dataset.y)},
          {"sigma", detail::vector_json(p.dataset.sigma)},
          {"design",
           {{"columns", p.design.column_names}, {"rows", detail::matrix_rows_json(p.design.X)}}},
          {"tau_prior", detail::tau_prior_json(p.tau_prior)},
          {"beta_prior", detail::beta_prior_json(p.beta_prior)}};
}

inline RegressionProblem problem_from_json(const Json& j) {
  RegressionProblem p;
  p.dataset = StudyDataset::create(j.at("labels").get<std::vector<std::string>>(),
                                   detail::vector_from(j.at("y")),
                                   detail::vector_from(j.at("sigma")));
  const auto& design = j.at("design");
  p.design.column_names = design.at("columns").get<std::vector<std::string>>();
  p.design.X = detail::matrix_from_rows(design.at("rows"),
                                        static_cast<Eigen::Index>(p.design.column_names.size()));
  p.tau_prior = detail::tau_prior_from(j.at("tau_prior"));
  p.beta_prior = detail::beta_prior_from(j.at("beta_prior"));
  return p;
}

inline Json fit_to_json(const FitResult& f) {
  Json grid = Json::array();
  for (const auto& n : f.grid().nodes) {
    grid.push_back({{"tau", n.tau},
                    {"weight", n.weight},
                    {"mean", detail::vector_json(n.moments.mean)},
                    {"cov_lower", detail::lower_triangle_json(n.moments.cov)}});
  }
  Json rows = Json::array();
  for (const auto& r : f.summary().rows) rows.push_back(detail::summary_row_json(r));
  Json out = {{"format", "metareg-fit"},
              {"version", kVersion},
              {"problem", problem_json(f.problem())},
              {"delta", f.grid().delta},
              {"epsilon", f.grid().epsilon},
              {"grid", std::move(grid)},
              {"summary", {{"level", f.summary().level}, {"rows", std::move(rows)}}}};
  if (auto lml = f.log_marginal_likelihood()) out["log_marginal_likelihood"] = *lml;
  else out["log_marginal_likelihood"] = nullptr;
  return out;
}

inline FitResult fit_from_json(const Json& j) {
  if (j.value("format", std::string{}) != "metareg-fit") {
    throw ValidationError(ValidationError::Kind::invalid_value, "not a metareg fit file");
  }
  RegressionProblem problem = problem_from_json(j.at("problem"));
  const auto d = static_cast<Eigen::Index>(problem.design.column_names.size());
  PosteriorGrid grid;
  grid.delta = j.at("delta").get<double>();
  grid.epsilon = j.at("epsilon").get<double>();
  for (const auto& n : j.at("grid")) {
    GridNode node;
    node.tau = n.at("tau").get<double>();
    node.weight = n.at("weight").get<double>();
    node.moments.mean = detail::vector_from(n.at("mean"));
    if (node.moments.mean.size() != d) {
      throw ValidationError(ValidationError::Kind::dimension_mismatch,
                            "grid node mean has the wrong length");
    }
    node.moments.cov = detail::from_lower_triangle(n.at("cov_lower"), d);
    grid.nodes.push_back(std::move(node));
  }
  if (grid.nodes.empty()) throw ValidationError(ValidationError::Kind::empty_input, "fit file has no grid");
  SummaryTable summary;
  summary.level = j.at("summary").at("level").get<double>();
  for (const auto& r : j.at("summary").at("rows")) summary.rows.push_back(detail::summary_row_from(r));
  std::optional<double> lml;
  if (!j.at("log_marginal_likelihood").is_null()) lml = j["log_marginal_likelihood"].get<double>();
  return FitResult::restore(std::move(problem), std::move(grid), std::move(summary), lml);
}

inline void write_fit_json(const FitResult& f, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << fit_to_json(f).dump(2) << '\n';
  if (!out) throw std::runtime_error("error writing " + path);
}

inline FitResult load_fit_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(ValidationError::Kind::invalid_value, path + ": " + e.what());
  }
  try {
    return fit_from_json(j);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(ValidationError::Kind::invalid_value, path + ": " + e.what());
  }
}

}  // namespace metareg::io
